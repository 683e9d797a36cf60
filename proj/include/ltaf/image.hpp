#pragma once

#include <cstdint>
#include <vector>

#include "ltaf/tensor.hpp"

namespace ltaf {

// H x W x 3 RGB image with interleaved values in [0, 1].
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int h, int w, float fill = 0.0f);

  float& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float at(int y, int x, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
  bool same_size(const Image& o) const { return height == o.height && width == o.width; }

  bool operator==(const Image&) const = default;
};

// Artifact localization at pixel resolution; true marks an artifact pixel.
struct PixelMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> artifact;

  PixelMask() = default;
  PixelMask(int h, int w, bool value = false);

  bool at(int y, int x) const { return artifact[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int y, int x, bool v) { artifact[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  std::size_t count() const;

  bool operator==(const PixelMask&) const = default;
};

// Latent-resolution mask. keep=true marks a non-artifact cell whose content
// is carried over from the encoded input; keep=false cells are regenerated.
struct LatentMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> keep;

  LatentMask() = default;
  LatentMask(int h, int w, bool keep_value = true);

  bool keeps(int y, int x) const { return keep[static_cast<std::size_t>(y) * width + x] != 0; }

  bool operator==(const LatentMask&) const = default;
};

// HWC image -> CHW tensor of shape {3, H, W}.
Tensor image_to_chw(const Image& img);
// CHW {3, H, W} -> HWC image, clamping into [0, 1].
Image chw_to_image(const Tensor& t);

}  // namespace ltaf
