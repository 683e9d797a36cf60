#pragma once

#include <cstdint>
#include <functional>

#include "ltaf/image.hpp"
#include "ltaf/schedule.hpp"

namespace ltaf {

class DenoiserModel;
class VaeModel;

// A latent cell becomes artifact (keep=false) when any pixel of its f x f
// footprint is an artifact pixel.
LatentMask encode_mask(const PixelMask& pm, int f);

// Per cell: `sample` where the mask keeps, `output` elsewhere; the mask
// broadcasts over channels.
LatentTensor blend(const LatentTensor& sample, const LatentTensor& output, const LatentMask& m);

// eps_theta(z_t, t) for a CHW latent.
using NoisePredictor = std::function<LatentTensor(const LatentTensor&, int)>;

// Regional reverse diffusion from t = T-1 down to 0. Each step re-noises z0
// to level t for the keep cells, blends in the running output for the
// artifact cells, and takes one ancestral step on the blend. A terminal blend
// with z0 makes keep cells of the result bitwise equal to z0.
//
// Draw order from the seeded generator: the initial N(0, I) state, then per
// step the forward noise followed by the step noise (absent at t = 0).
LatentTensor regional_denoise(const LatentTensor& z0, const LatentMask& m, const NoisePredictor& predict,
                              const Schedule& s, std::uint64_t seed);
LatentTensor regional_denoise(const LatentTensor& z0, const LatentMask& m, const DenoiserModel& dm,
                              const Schedule& s, std::uint64_t seed);

// Maps images to the space the regional loop runs in and back.
struct Codec {
  int downsample = 1;
  std::function<LatentTensor(const Image&)> encode;
  std::function<Image(const LatentTensor&)> decode;
};

Codec vae_codec(const VaeModel& vae);
// f = 1, CHW pixels as the "latent".
Codec identity_codec();

Image restore_with_codec(const Image& x, const PixelMask& pm, const Codec& codec, const NoisePredictor& predict,
                         const Schedule& s, std::uint64_t seed);

// decode(regional_denoise(encode(x, mean), encode_mask(pm, f), ...)).
Image restore(const Image& x, const PixelMask& pm, const VaeModel& vae, const DenoiserModel& dm, const Schedule& s,
              std::uint64_t seed);

}  // namespace ltaf
