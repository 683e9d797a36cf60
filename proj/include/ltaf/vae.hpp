#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ltaf/image.hpp"
#include "ltaf/nn/layers.hpp"
#include "ltaf/training.hpp"

namespace ltaf {

struct VaeConfig {
  int downsample = 4;       // f, 4 or 8
  int latent_channels = 4;  // c
  int base_width = 32;
  std::uint64_t seed = 0;   // initialization
};

// Convolutional VAE: stride-2 downsampling stages (log2 f of them) with
// GroupNorm/SiLU residual blocks and a mirrored nearest-upsampling decoder
// ending in a sigmoid. Latents are multiplied by `latent_scale` on the way
// out of the encoder (and divided on the way into the decoder) so the
// diffusion model sees roughly unit-variance latents.
class VaeModel {
 public:
  VaeModel() = default;  // uninitialized; encode/decode throw
  explicit VaeModel(const VaeConfig& config);

  VaeModel(VaeModel&&) noexcept = default;
  VaeModel& operator=(VaeModel&&) noexcept = default;
  VaeModel(const VaeModel&) = delete;
  VaeModel& operator=(const VaeModel&) = delete;

  bool initialized() const { return initialized_; }
  const VaeConfig& config() const { return config_; }
  int downsample() const { return config_.downsample; }
  int latent_channels() const { return config_.latent_channels; }

  float latent_scale() const { return latent_scale_; }
  void set_latent_scale(float s) { latent_scale_ = s; }

  nn::ParameterStore& parameters() { return params_; }
  const nn::ParameterStore& parameters() const { return params_; }

  // Weights plus latent scale.
  std::uint64_t checksum() const;

  // x: [N,3,H,W] in [0,1] -> [N, 2c, H/f, W/f] (mean channels, then log-variance).
  nn::Var encode_moments(const nn::Var& x) const;
  // z: unscaled latent [N,c,h,w] -> [N,3,h*f,w*f] in [0,1].
  nn::Var decode_pixels(const nn::Var& z) const;

 private:
  struct Stage {
    nn::GroupNorm norm;
    nn::Conv2d conv;
    nn::ResBlock block;
  };

  VaeConfig config_;
  bool initialized_ = false;
  float latent_scale_ = 1.0f;
  nn::ParameterStore params_;

  nn::Conv2d enc_in_;
  std::vector<Stage> enc_stages_;
  nn::GroupNorm enc_norm_out_;
  nn::Conv2d enc_out_;

  nn::Conv2d dec_in_;
  nn::ResBlock dec_mid_;
  std::vector<Stage> dec_stages_;
  nn::GroupNorm dec_norm_out_;
  nn::Conv2d dec_out_;
};

enum class EncodeMode { mean, sample };

// Throws ShapeError unless H and W are positive multiples of f.
void require_divisible(int height, int width, int f, const char* what);

LatentTensor encode(const VaeModel& m, const Image& x, EncodeMode mode = EncodeMode::mean,
                    std::optional<std::uint64_t> seed = std::nullopt);
Image decode(const VaeModel& m, const LatentTensor& z);

// Posterior-mean latents for many images, batched.
std::vector<LatentTensor> encode_all(const VaeModel& m, std::span<const Image> images, int batch = 16);

// Mean squared pixel error of decode(encode(x, mean)) over `images`.
double reconstruction_mse(const VaeModel& m, std::span<const Image> images);
// Mean absolute pixel error of the same round trip.
double reconstruction_mae(const VaeModel& m, std::span<const Image> images);

struct VaeTrainConfig {
  VaeConfig model;
  int epochs = 20;
  int batch = 16;
  float lr = 1e-3f;
  float kl_weight = 1e-6f;  // relative to the summed squared error of one image
  std::uint64_t seed = 0;  // shuffling and reparameterization noise
};

// Trains from scratch. With epochs == 0 the freshly initialized model is
// returned untouched; otherwise the latent scale is fitted to the training
// latents after the last epoch.
VaeModel train_vae(std::span<const Image> dataset, const VaeTrainConfig& config, TrainingLog* log = nullptr);

}  // namespace ltaf
