#include "ltaf/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ltaf/errors.hpp"
#include "ltaf/nn/ops.hpp"
#include "ltaf/random.hpp"
#include "ltaf/vae.hpp"

namespace ltaf {

std::vector<float> embed_time(int t, int dim) {
  if (dim <= 0 || dim % 2 != 0) throw DomainError("time embedding dimension must be even and positive");
  const int half = dim / 2;
  std::vector<float> e(static_cast<std::size_t>(dim));
  for (int k = 0; k < half; ++k) {
    const double freq = std::pow(10000.0, -2.0 * k / dim);
    const double angle = t * freq;
    e[static_cast<std::size_t>(k)] = static_cast<float>(std::sin(angle));
    e[static_cast<std::size_t>(k + half)] = static_cast<float>(std::cos(angle));
  }
  return e;
}

DenoiserModel::DenoiserModel(const DenoiserConfig& config) : config_(config), initialized_(true) {
  if (config.channels <= 0) throw DomainError("denoiser channel count must be positive");
  if (config.base_width <= 0 || config.base_width % 2 != 0) throw DomainError("denoiser width must be positive and even");
  if (config.time_dim <= 0 || config.time_dim % 2 != 0) throw DomainError("time embedding dimension must be even");
  Rng rng(config.seed);
  const int w = config.base_width;
  const int temb = 4 * w;
  time_fc1_ = nn::Linear::create(params_, "time.fc1", config.time_dim, temb, rng);
  time_fc2_ = nn::Linear::create(params_, "time.fc2", temb, temb, rng);
  conv_in_ = nn::Conv2d::create(params_, "conv_in", config.channels, w, 3, 1, rng);
  down_block1_ = nn::ResBlock::create(params_, "down1.block", w, w, temb, rng);
  down1_ = nn::Conv2d::create(params_, "down1.conv", w, w, 3, 2, rng);
  down_block2_ = nn::ResBlock::create(params_, "down2.block", w, 2 * w, temb, rng);
  down2_ = nn::Conv2d::create(params_, "down2.conv", 2 * w, 2 * w, 3, 2, rng);
  mid_block_ = nn::ResBlock::create(params_, "mid.block", 2 * w, 2 * w, temb, rng);
  up2_ = nn::Conv2d::create(params_, "up2.conv", 2 * w, 2 * w, 3, 1, rng);
  up_block2_ = nn::ResBlock::create(params_, "up2.block", 4 * w, 2 * w, temb, rng);
  up1_ = nn::Conv2d::create(params_, "up1.conv", 2 * w, w, 3, 1, rng);
  up_block1_ = nn::ResBlock::create(params_, "up1.block", 2 * w, w, temb, rng);
  norm_out_ = nn::GroupNorm::create(params_, "norm_out", w);
  conv_out_ = nn::Conv2d::create(params_, "conv_out", w, config.channels, 3, 1, rng, 0.1f);
}

nn::Var DenoiserModel::forward(const nn::Var& x, std::span<const int> timesteps) const {
  if (!initialized_) throw std::logic_error("denoiser model is not initialized");
  const Tensor& v = x->value;
  if (v.rank() != 4 || v.dim(1) != config_.channels) {
    throw ShapeError("denoiser input " + v.shape_string() + " does not have " + std::to_string(config_.channels) +
                     " channels");
  }
  if (v.dim(2) % 4 != 0 || v.dim(3) % 4 != 0 || v.dim(2) == 0 || v.dim(3) == 0) {
    throw ShapeError("denoiser input " + v.shape_string() + " needs spatial extents divisible by 4");
  }
  if (timesteps.size() != static_cast<std::size_t>(v.dim(0))) throw ShapeError("one timestep per sample required");

  Tensor emb({v.dim(0), config_.time_dim});
  for (std::size_t i = 0; i < timesteps.size(); ++i) {
    const auto e = embed_time(timesteps[i], config_.time_dim);
    std::copy(e.begin(), e.end(), emb.data() + i * e.size());
  }
  const nn::Var temb = time_fc2_(nn::silu(time_fc1_(nn::constant(std::move(emb)))));

  const nn::Var skip1 = down_block1_(conv_in_(x), temb);
  const nn::Var skip2 = down_block2_(down1_(skip1), temb);
  nn::Var h = mid_block_(down2_(skip2), temb);
  h = up_block2_(nn::concat_channels(up2_(nn::upsample_nearest2x(h)), skip2), temb);
  h = up_block1_(nn::concat_channels(up1_(nn::upsample_nearest2x(h)), skip1), temb);
  return conv_out_(nn::silu(norm_out_(h)));
}

LatentTensor predict_noise(const DenoiserModel& m, const LatentTensor& z_t, int t) {
  if (z_t.rank() != 3) throw ShapeError("predict_noise expects a CHW latent, got " + z_t.shape_string());
  nn::NoGradGuard no_grad;
  const int steps[1] = {t};
  nn::Var out = m.forward(nn::constant(z_t.reshaped({1, z_t.dim(0), z_t.dim(1), z_t.dim(2)})), steps);
  return out->value.reshaped(z_t.shape());
}

namespace {

void validate_latents(std::span<const LatentTensor> latents, const DenoiserConfig& cfg) {
  if (latents.empty()) throw std::invalid_argument("denoiser training set is empty");
  for (const auto& z : latents) {
    if (!z.same_shape(latents.front())) throw ShapeError("training latents differ in shape");
  }
  const LatentTensor& z = latents.front();
  if (z.rank() != 3 || z.dim(0) != cfg.channels) {
    throw ShapeError("latent " + z.shape_string() + " conflicts with a " + std::to_string(cfg.channels) +
                     "-channel denoiser");
  }
  if (z.dim(1) % 4 != 0 || z.dim(2) % 4 != 0) {
    throw ShapeError("latent " + z.shape_string() + " spatial extents must be divisible by 4");
  }
}

// Builds a noised batch [B,C,H,W] plus its noise targets and timesteps.
struct NoisedBatch {
  Tensor inputs;
  Tensor targets;
  std::vector<int> timesteps;
};

NoisedBatch make_batch(std::span<const LatentTensor> latents, std::span<const std::size_t> idx, const Schedule& s,
                       Rng& rng) {
  const auto& shape = latents.front().shape();
  const std::size_t count = latents.front().size();
  NoisedBatch b{Tensor({static_cast<int>(idx.size()), shape[0], shape[1], shape[2]}),
                Tensor({static_cast<int>(idx.size()), shape[0], shape[1], shape[2]}), {}};
  std::uniform_int_distribution<int> pick_t(0, s.steps() - 1);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const int t = pick_t(rng);
    const LatentTensor noise = gaussian_tensor(shape, rng);
    const LatentTensor zt = forward_diffuse(latents[idx[i]], t, noise, s);
    std::copy(zt.data(), zt.data() + count, b.inputs.data() + i * count);
    std::copy(noise.data(), noise.data() + count, b.targets.data() + i * count);
    b.timesteps.push_back(t);
  }
  return b;
}

}  // namespace

DenoiserModel train_denoiser_on_latents(std::span<const LatentTensor> latents, const Schedule& s,
                                        const DenoiserTrainConfig& config, TrainingLog* log) {
  validate_latents(latents, config.model);
  if (config.batch <= 0) throw DomainError("denoiser batch size must be positive");
  DenoiserModel model(config.model);
  if (config.epochs <= 0) return model;

  nn::Adam optimizer(model.parameters(), {.lr = config.lr});
  Rng rng(config.seed);
  std::vector<std::size_t> order(latents.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch));
      NoisedBatch b = make_batch(latents, std::span<const std::size_t>(order.data() + start, end - start), s, rng);
      nn::Var pred = model.forward(nn::constant(std::move(b.inputs)), b.timesteps);
      nn::Var loss = nn::mse_loss(pred, nn::constant(std::move(b.targets)));
      nn::backward(loss);
      optimizer.step();
      loss_sum += loss->value[0];
      ++batches;
    }
    if (log) log->record(epoch + 1, loss_sum / batches);
  }
  return model;
}

DenoiserModel train_denoiser(const VaeModel& vae, std::span<const Image> dataset, const Schedule& s,
                             const DenoiserTrainConfig& config, TrainingLog* log) {
  if (dataset.empty()) throw std::invalid_argument("denoiser training set is empty");
  if (vae.latent_channels() != config.model.channels) {
    throw ShapeError("VAE produces " + std::to_string(vae.latent_channels()) + " latent channels but the denoiser expects " +
                     std::to_string(config.model.channels));
  }
  const std::vector<LatentTensor> latents = encode_all(vae, dataset);
  return train_denoiser_on_latents(latents, s, config, log);
}

double simplified_loss(const DenoiserModel& m, std::span<const LatentTensor> latents, const Schedule& s,
                       std::uint64_t seed) {
  validate_latents(latents, m.config());
  nn::NoGradGuard no_grad;
  Rng rng(seed);
  std::vector<std::size_t> order(latents.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start < order.size(); start += 16) {
    const std::size_t end = std::min(order.size(), start + 16);
    NoisedBatch b = make_batch(latents, std::span<const std::size_t>(order.data() + start, end - start), s, rng);
    nn::Var pred = m.forward(nn::constant(std::move(b.inputs)), b.timesteps);
    for (std::size_t i = 0; i < b.targets.size(); ++i) {
      const double d = static_cast<double>(pred->value[i]) - b.targets[i];
      total += d * d;
    }
    count += b.targets.size();
  }
  return total / static_cast<double>(count);
}

}  // namespace ltaf
