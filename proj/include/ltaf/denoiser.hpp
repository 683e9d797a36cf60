#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ltaf/image.hpp"
#include "ltaf/nn/layers.hpp"
#include "ltaf/schedule.hpp"
#include "ltaf/training.hpp"

namespace ltaf {

class VaeModel;

struct DenoiserConfig {
  int channels = 4;     // latent channels (3 for the pixel-space model)
  int base_width = 32;
  int time_dim = 64;    // sinusoidal embedding size, even
  std::uint64_t seed = 0;
};

// Sinusoidal timestep embedding: dim/2 sine terms sin(t / 10000^(2k/dim))
// followed by the matching cosine terms.
std::vector<float> embed_time(int t, int dim);

// U-shaped noise predictor: two stride-2 stages with skip connections,
// time-conditioned residual blocks at every level.
class DenoiserModel {
 public:
  DenoiserModel() = default;
  explicit DenoiserModel(const DenoiserConfig& config);

  DenoiserModel(DenoiserModel&&) noexcept = default;
  DenoiserModel& operator=(DenoiserModel&&) noexcept = default;
  DenoiserModel(const DenoiserModel&) = delete;
  DenoiserModel& operator=(const DenoiserModel&) = delete;

  bool initialized() const { return initialized_; }
  const DenoiserConfig& config() const { return config_; }
  nn::ParameterStore& parameters() { return params_; }
  const nn::ParameterStore& parameters() const { return params_; }
  std::uint64_t checksum() const { return params_.checksum(); }

  // x: [N,C,H,W] with H, W multiples of 4; one timestep per sample.
  nn::Var forward(const nn::Var& x, std::span<const int> timesteps) const;

 private:
  DenoiserConfig config_;
  bool initialized_ = false;
  nn::ParameterStore params_;

  nn::Linear time_fc1_;
  nn::Linear time_fc2_;
  nn::Conv2d conv_in_;
  nn::ResBlock down_block1_;
  nn::Conv2d down1_;
  nn::ResBlock down_block2_;
  nn::Conv2d down2_;
  nn::ResBlock mid_block_;
  nn::Conv2d up2_;
  nn::ResBlock up_block2_;
  nn::Conv2d up1_;
  nn::ResBlock up_block1_;
  nn::GroupNorm norm_out_;
  nn::Conv2d conv_out_;
};

// Predicted noise for a CHW latent at timestep t.
LatentTensor predict_noise(const DenoiserModel& m, const LatentTensor& z_t, int t);

struct DenoiserTrainConfig {
  DenoiserConfig model;
  int epochs = 30;
  int batch = 16;
  float lr = 1e-3f;
  std::uint64_t seed = 0;
};

// Trains eps-prediction on precomputed clean latents: each sample draws
// t ~ U[0, T) and eps ~ N(0, I) and regresses eps from forward_diffuse(z0, t, eps).
DenoiserModel train_denoiser_on_latents(std::span<const LatentTensor> latents, const Schedule& s,
                                        const DenoiserTrainConfig& config, TrainingLog* log = nullptr);

// Encodes `dataset` with the frozen VAE (posterior mean), then trains.
DenoiserModel train_denoiser(const VaeModel& vae, std::span<const Image> dataset, const Schedule& s,
                             const DenoiserTrainConfig& config, TrainingLog* log = nullptr);

// Simplified loss ||eps - eps_theta(z_t, t)||^2 averaged over `latents`, with
// t and eps drawn from a generator seeded by `seed`.
double simplified_loss(const DenoiserModel& m, std::span<const LatentTensor> latents, const Schedule& s,
                       std::uint64_t seed);

}  // namespace ltaf
