#include "ltaf/regional.hpp"

#include <string>

#include "ltaf/denoiser.hpp"
#include "ltaf/errors.hpp"
#include "ltaf/random.hpp"
#include "ltaf/vae.hpp"

namespace ltaf {

LatentMask encode_mask(const PixelMask& pm, int f) {
  if (f < 1) throw DomainError("mask downsample factor must be positive");
  require_divisible(pm.height, pm.width, f, "encode_mask");
  LatentMask m(pm.height / f, pm.width / f, true);
  for (int y = 0; y < pm.height; ++y) {
    for (int x = 0; x < pm.width; ++x) {
      if (pm.at(y, x)) m.keep[static_cast<std::size_t>(y / f) * m.width + x / f] = 0;
    }
  }
  return m;
}

LatentTensor blend(const LatentTensor& sample, const LatentTensor& output, const LatentMask& m) {
  require_same_shape(sample, output, "blend");
  if (sample.rank() != 3 || sample.dim(1) != m.height || sample.dim(2) != m.width) {
    throw ShapeError("blend: latent " + sample.shape_string() + " does not match a " + std::to_string(m.height) + "x" +
                     std::to_string(m.width) + " mask");
  }
  LatentTensor out(sample.shape());
  const std::size_t plane = m.keep.size();
  for (int c = 0; c < sample.dim(0); ++c) {
    const std::size_t base = static_cast<std::size_t>(c) * plane;
    for (std::size_t p = 0; p < plane; ++p) out[base + p] = m.keep[p] ? sample[base + p] : output[base + p];
  }
  return out;
}

LatentTensor regional_denoise(const LatentTensor& z0, const LatentMask& m, const NoisePredictor& predict,
                              const Schedule& s, std::uint64_t seed) {
  if (z0.rank() != 3 || z0.dim(1) != m.height || z0.dim(2) != m.width) {
    throw ShapeError("regional_denoise: latent " + z0.shape_string() + " does not match a " +
                     std::to_string(m.height) + "x" + std::to_string(m.width) + " mask");
  }
  Rng rng(seed);
  LatentTensor current = gaussian_tensor(z0.shape(), rng);
  for (int t = s.steps() - 1; t >= 0; --t) {
    const LatentTensor sample = forward_diffuse(z0, t, gaussian_tensor(z0.shape(), rng), s);
    const LatentTensor blended = blend(sample, current, m);
    const LatentTensor eps = predict(blended, t);
    if (t > 0) {
      const LatentTensor step_noise = gaussian_tensor(z0.shape(), rng);
      current = posterior_step(blended, eps, t, s, &step_noise);
    } else {
      current = posterior_step(blended, eps, t, s, nullptr);
    }
  }
  return blend(z0, current, m);
}

LatentTensor regional_denoise(const LatentTensor& z0, const LatentMask& m, const DenoiserModel& dm,
                              const Schedule& s, std::uint64_t seed) {
  return regional_denoise(z0, m, [&dm](const LatentTensor& z, int t) { return predict_noise(dm, z, t); }, s, seed);
}

Codec vae_codec(const VaeModel& vae) {
  return Codec{vae.downsample(), [&vae](const Image& x) { return encode(vae, x, EncodeMode::mean); },
               [&vae](const LatentTensor& z) { return decode(vae, z); }};
}

Codec identity_codec() {
  return Codec{1, [](const Image& x) { return image_to_chw(x); }, [](const LatentTensor& z) { return chw_to_image(z); }};
}

Image restore_with_codec(const Image& x, const PixelMask& pm, const Codec& codec, const NoisePredictor& predict,
                         const Schedule& s, std::uint64_t seed) {
  if (x.height != pm.height || x.width != pm.width) {
    throw ShapeError("restore: image is " + std::to_string(x.height) + "x" + std::to_string(x.width) +
                     " but the mask is " + std::to_string(pm.height) + "x" + std::to_string(pm.width));
  }
  require_divisible(x.height, x.width, codec.downsample, "restore");
  const LatentTensor z0 = codec.encode(x);
  const LatentMask m = encode_mask(pm, codec.downsample);
  return codec.decode(regional_denoise(z0, m, predict, s, seed));
}

Image restore(const Image& x, const PixelMask& pm, const VaeModel& vae, const DenoiserModel& dm, const Schedule& s,
              std::uint64_t seed) {
  if (vae.latent_channels() != dm.config().channels) {
    throw ShapeError("VAE latent channels (" + std::to_string(vae.latent_channels()) +
                     ") differ from the denoiser's (" + std::to_string(dm.config().channels) + ")");
  }
  return restore_with_codec(x, pm, vae_codec(vae),
                            [&dm](const LatentTensor& z, int t) { return predict_noise(dm, z, t); }, s, seed);
}

}  // namespace ltaf
