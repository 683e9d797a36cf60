#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ltaf/image.hpp"
#include "ltaf/tensor.hpp"

namespace ltaf {

class VaeModel;
class DenoiserModel;

namespace fs = std::filesystem;

// Tensor container layout (all integers little-endian):
//   "LTAF" | u32 version | u32 entry count
//   per entry: u32 name length | name bytes (UTF-8) | u8 dtype (0 = f32) |
//              u32 rank | u32 dims[rank] | u64 byte offset | u64 byte length
//   payload: row-major little-endian f32, offsets counted from file start
inline constexpr std::uint32_t container_version = 1;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

std::vector<std::uint8_t> serialize_container(const std::vector<NamedTensor>& entries);
std::vector<NamedTensor> parse_container(const std::vector<std::uint8_t>& bytes);
void save_container(const fs::path& path, const std::vector<NamedTensor>& entries);
std::vector<NamedTensor> load_container(const fs::path& path);

// Model weights plus the architecture fields ("meta.*" scalars) needed to
// rebuild the model.
void save_weights(const VaeModel& m, const fs::path& path);
void save_weights(const DenoiserModel& m, const fs::path& path);
VaeModel load_vae(const fs::path& path);
DenoiserModel load_denoiser(const fs::path& path);

// 8-bit RGB PNG; values are v / 255 on load and round(v * 255) on save.
Image load_png(const fs::path& path);
void save_png(const Image& img, const fs::path& path);

// Masks are 8-bit grayscale PNGs; values above 127 mark artifact pixels.
PixelMask load_mask_png(const fs::path& path);
void save_mask_png(const PixelMask& m, const fs::path& path);

struct ImageSet {
  std::vector<fs::path> paths;
  std::vector<Image> images;
  std::vector<std::string> skipped;  // reasons for files left out (non-strict mode)
};

// All *.png files of a directory in name order. Non-RGB files raise a
// FormatError when `strict`, otherwise they are skipped and reported.
ImageSet load_image_dir(const fs::path& dir, bool strict = true);

struct ManifestEntry {
  fs::path clean;
  fs::path artifact;
  fs::path mask;
};

// One "clean_path,artifact_path,mask_path" line per triple; blank lines and
// lines starting with '#' are ignored. Relative paths resolve against the
// manifest's directory.
std::vector<ManifestEntry> load_manifest(const fs::path& path);
void save_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries);

struct RunConfig {
  int steps = 50;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int pixel_steps = 250;

  int downsample = 4;
  int latent_channels = 4;
  int vae_width = 32;
  int denoiser_width = 32;
  int time_dim = 64;

  int vae_epochs = 20;
  int denoiser_epochs = 30;
  int pixel_epochs = 30;
  int batch = 16;
  double lr = 1e-3;
  double kl_weight = 1e-6;

  std::optional<std::uint64_t> seed;
  int tiles = 500;
  int tile_size = 64;
  int bench_images = 10;

  std::optional<fs::path> data_dir;
  std::optional<fs::path> manifest;
  std::optional<fs::path> restored_dir;
  std::optional<fs::path> vae_weights;
  std::optional<fs::path> denoiser_weights;
  std::optional<fs::path> pixel_weights;
};

// key=value lines, '#' comments. Unknown keys, malformed values, missing
// input paths and weight paths without an existing parent directory raise
// ConfigError. Relative paths resolve against `base_dir`.
RunConfig parse_run_config(const std::string& text, const fs::path& base_dir);
RunConfig load_run_config(const fs::path& path);

// Canonical key=value rendering (every key, fixed order).
std::string to_string(const RunConfig& cfg);
// FNV-1a of the canonical rendering.
std::uint64_t fingerprint(const RunConfig& cfg);

}  // namespace ltaf
