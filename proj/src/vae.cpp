#include "ltaf/vae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ltaf/errors.hpp"
#include "ltaf/nn/ops.hpp"
#include "ltaf/random.hpp"

namespace ltaf {
namespace {

int stage_count(int downsample) {
  if (downsample == 4) return 2;
  if (downsample == 8) return 3;
  throw DomainError("VAE downsample factor must be 4 or 8, got " + std::to_string(downsample));
}

// Width at resolution level l (0 = full resolution).
int level_width(int base, int level) { return level >= 2 ? 2 * base : base; }

Tensor batch_images(std::span<const Image> images, std::span<const std::size_t> order) {
  const Image& first = images[order.front()];
  const int h = first.height;
  const int w = first.width;
  const std::size_t plane = first.pixel_count();
  Tensor t({static_cast<int>(order.size()), 3, h, w});
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Image& img = images[order[i]];
    float* dst = t.data() + i * 3 * plane;
    for (std::size_t p = 0; p < plane; ++p) {
      for (int c = 0; c < 3; ++c) dst[c * plane + p] = img.pixels[p * 3 + c];
    }
  }
  return t;
}

void require_model(const VaeModel& m) {
  if (!m.initialized()) throw std::logic_error("VAE model is not initialized");
}

}  // namespace

void require_divisible(int height, int width, int f, const char* what) {
  if (height <= 0 || width <= 0 || height % f != 0 || width % f != 0) {
    throw ShapeError(std::string(what) + ": size " + std::to_string(height) + "x" + std::to_string(width) +
                     " is not a positive multiple of " + std::to_string(f));
  }
}

VaeModel::VaeModel(const VaeConfig& config) : config_(config), initialized_(true) {
  const int stages = stage_count(config.downsample);
  if (config.latent_channels <= 0) throw DomainError("latent channel count must be positive");
  if (config.base_width <= 0 || config.base_width % 2 != 0) throw DomainError("VAE base width must be positive and even");
  Rng rng(config.seed);
  const int base = config.base_width;
  const int c = config.latent_channels;

  enc_in_ = nn::Conv2d::create(params_, "encoder.conv_in", 3, level_width(base, 0), 3, 1, rng);
  for (int l = 1; l <= stages; ++l) {
    const std::string name = "encoder.down" + std::to_string(l);
    const int in = level_width(base, l - 1);
    const int out = level_width(base, l);
    Stage s;
    s.norm = nn::GroupNorm::create(params_, name + ".norm", in);
    s.conv = nn::Conv2d::create(params_, name + ".conv", in, out, 3, 2, rng);
    s.block = nn::ResBlock::create(params_, name + ".block", out, out, 0, rng);
    enc_stages_.push_back(std::move(s));
  }
  const int top = level_width(base, stages);
  enc_norm_out_ = nn::GroupNorm::create(params_, "encoder.norm_out", top);
  enc_out_ = nn::Conv2d::create(params_, "encoder.conv_out", top, 2 * c, 3, 1, rng);

  dec_in_ = nn::Conv2d::create(params_, "decoder.conv_in", c, top, 3, 1, rng);
  dec_mid_ = nn::ResBlock::create(params_, "decoder.mid", top, top, 0, rng);
  for (int l = stages; l >= 1; --l) {
    const std::string name = "decoder.up" + std::to_string(l);
    const int in = level_width(base, l);
    const int out = level_width(base, l - 1);
    Stage s;
    s.block = nn::ResBlock::create(params_, name + ".block", in, in, 0, rng);
    s.norm = nn::GroupNorm::create(params_, name + ".norm", in);
    s.conv = nn::Conv2d::create(params_, name + ".conv", in, out, 3, 1, rng);
    dec_stages_.push_back(std::move(s));
  }
  dec_norm_out_ = nn::GroupNorm::create(params_, "decoder.norm_out", level_width(base, 0));
  dec_out_ = nn::Conv2d::create(params_, "decoder.conv_out", level_width(base, 0), 3, 3, 1, rng);
}

std::uint64_t VaeModel::checksum() const {
  Tensor s({1}, latent_scale_);
  return params_.checksum() ^ (ltaf::checksum(s) * 31);
}

nn::Var VaeModel::encode_moments(const nn::Var& x) const {
  nn::Var h = enc_in_(x);
  for (const Stage& s : enc_stages_) h = s.block(s.conv(nn::silu(s.norm(h))));
  return enc_out_(nn::silu(enc_norm_out_(h)));
}

nn::Var VaeModel::decode_pixels(const nn::Var& z) const {
  nn::Var h = dec_mid_(dec_in_(z));
  for (const Stage& s : dec_stages_) h = s.conv(nn::upsample_nearest2x(nn::silu(s.norm(s.block(h)))));
  return nn::sigmoid(dec_out_(nn::silu(dec_norm_out_(h))));
}

LatentTensor encode(const VaeModel& m, const Image& x, EncodeMode mode, std::optional<std::uint64_t> seed) {
  require_model(m);
  require_divisible(x.height, x.width, m.downsample(), "encode");
  nn::NoGradGuard no_grad;
  const int c = m.latent_channels();
  const int h = x.height / m.downsample();
  const int w = x.width / m.downsample();
  const std::size_t count = static_cast<std::size_t>(c) * h * w;
  nn::Var moments = m.encode_moments(nn::constant(image_to_chw(x).reshaped({1, 3, x.height, x.width})));
  const float* mean = moments->value.data();
  const float* logvar = mean + count;
  LatentTensor z({c, h, w});
  if (mode == EncodeMode::sample) {
    Rng rng(seed.value_or(0));
    std::normal_distribution<float> dist(0.0f, 1.0f);
    for (std::size_t i = 0; i < count; ++i) {
      const float lv = std::clamp(logvar[i], -30.0f, 20.0f);
      z[i] = (mean[i] + std::exp(0.5f * lv) * dist(rng)) * m.latent_scale();
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) z[i] = mean[i] * m.latent_scale();
  }
  return z;
}

Image decode(const VaeModel& m, const LatentTensor& z) {
  require_model(m);
  if (z.rank() != 3 || z.dim(0) != m.latent_channels()) {
    throw ShapeError("decode: latent " + z.shape_string() + " does not have " + std::to_string(m.latent_channels()) +
                     " channels");
  }
  nn::NoGradGuard no_grad;
  Tensor unscaled({1, z.dim(0), z.dim(1), z.dim(2)});
  const float inv = 1.0f / m.latent_scale();
  for (std::size_t i = 0; i < z.size(); ++i) unscaled[i] = z[i] * inv;
  nn::Var out = m.decode_pixels(nn::constant(std::move(unscaled)));
  const int h = out->value.dim(2);
  const int w = out->value.dim(3);
  return chw_to_image(out->value.reshaped({3, h, w}));
}

std::vector<LatentTensor> encode_all(const VaeModel& m, std::span<const Image> images, int batch) {
  require_model(m);
  std::vector<LatentTensor> out;
  out.reserve(images.size());
  nn::NoGradGuard no_grad;
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const int c = m.latent_channels();
  for (std::size_t start = 0; start < images.size(); start += static_cast<std::size_t>(batch)) {
    const std::size_t end = std::min(images.size(), start + static_cast<std::size_t>(batch));
    std::span<const std::size_t> idx(order.data() + start, end - start);
    for (std::size_t i : idx) {
      require_divisible(images[i].height, images[i].width, m.downsample(), "encode");
      if (!images[i].same_size(images[idx.front()])) throw ShapeError("encode_all: images differ in size");
    }
    nn::Var moments = m.encode_moments(nn::constant(batch_images(images, idx)));
    const int h = moments->value.dim(2);
    const int w = moments->value.dim(3);
    const std::size_t count = static_cast<std::size_t>(c) * h * w;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const float* mean = moments->value.data() + i * 2 * count;
      LatentTensor z({c, h, w});
      for (std::size_t k = 0; k < count; ++k) z[k] = mean[k] * m.latent_scale();
      out.push_back(std::move(z));
    }
  }
  return out;
}

namespace {
template <typename ErrFn>
double round_trip_error(const VaeModel& m, std::span<const Image> images, ErrFn err) {
  if (images.empty()) throw std::invalid_argument("reconstruction error over an empty set");
  double total = 0.0;
  std::size_t count = 0;
  for (const Image& x : images) {
    const Image y = decode(m, encode(m, x));
    for (std::size_t i = 0; i < x.pixels.size(); ++i) total += err(static_cast<double>(y.pixels[i]) - x.pixels[i]);
    count += x.pixels.size();
  }
  return total / static_cast<double>(count);
}
}  // namespace

double reconstruction_mse(const VaeModel& m, std::span<const Image> images) {
  return round_trip_error(m, images, [](double d) { return d * d; });
}

double reconstruction_mae(const VaeModel& m, std::span<const Image> images) {
  return round_trip_error(m, images, [](double d) { return std::abs(d); });
}

VaeModel train_vae(std::span<const Image> dataset, const VaeTrainConfig& config, TrainingLog* log) {
  if (dataset.empty()) throw std::invalid_argument("train_vae: dataset is empty");
  for (const Image& img : dataset) {
    if (!img.same_size(dataset.front())) throw ShapeError("train_vae: images must share one size");
  }
  require_divisible(dataset.front().height, dataset.front().width, config.model.downsample, "train_vae");
  if (config.batch <= 0) throw DomainError("train_vae: batch size must be positive");

  VaeModel model(config.model);
  if (config.epochs <= 0) return model;

  nn::Adam optimizer(model.parameters(), {.lr = config.lr});
  Rng rng(config.seed);
  const int c = model.latent_channels();
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch));
      std::span<const std::size_t> idx(order.data() + start, end - start);
      nn::Var x = nn::constant(batch_images(dataset, idx));
      nn::Var moments = model.encode_moments(x);
      nn::Var mean = nn::slice_channels(moments, 0, c);
      nn::Var logvar = nn::slice_channels(moments, c, c);
      nn::Var z = nn::gaussian_sample(mean, logvar, gaussian_tensor(mean->value.shape(), rng));
      nn::Var recon = model.decode_pixels(z);
      // per-sample sum of squared errors plus weighted KL, divided by the
      // element count so the step size does not depend on the tile size
      nn::Var loss = nn::mse_loss(recon, x);
      if (config.kl_weight > 0.0f) {
        const float per_element = config.kl_weight / static_cast<float>(x->value.size() / idx.size());
        loss = nn::add(loss, nn::scale(nn::kl_standard_normal(mean, logvar), per_element));
      }
      nn::backward(loss);
      optimizer.step();
      loss_sum += loss->value[0];
      ++batches;
    }
    if (log) log->record(epoch + 1, loss_sum / batches);
  }

  // Fit the latent scale so training latents have unit standard deviation.
  const std::vector<LatentTensor> latents = encode_all(model, dataset);
  double s = 0.0;
  double s2 = 0.0;
  std::size_t n = 0;
  for (const auto& z : latents) {
    for (float v : z.values()) {
      s += v;
      s2 += static_cast<double>(v) * v;
      ++n;
    }
  }
  const double mean = s / static_cast<double>(n);
  const double var = s2 / static_cast<double>(n) - mean * mean;
  if (var > 1e-12) model.set_latent_scale(static_cast<float>(1.0 / std::sqrt(var)));
  return model;
}

}  // namespace ltaf
