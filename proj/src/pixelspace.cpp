#include "ltaf/pixelspace.hpp"

#include <string>
#include <vector>

#include "ltaf/errors.hpp"
#include "ltaf/regional.hpp"

namespace ltaf {

PixelDenoiserModel train_pixel_denoiser(std::span<const Image> dataset, const Schedule& s,
                                        DenoiserTrainConfig config, TrainingLog* log) {
  if (dataset.empty()) throw std::invalid_argument("pixel denoiser training set is empty");
  config.model.channels = 3;
  std::vector<LatentTensor> pixels;
  pixels.reserve(dataset.size());
  for (const Image& img : dataset) pixels.push_back(image_to_chw(img));
  return train_denoiser_on_latents(pixels, s, config, log);
}

Image pixel_restore(const Image& x, const PixelMask& pm, const PixelDenoiserModel& m, const Schedule& s,
                    std::uint64_t seed) {
  if (m.config().channels != 3) {
    throw ShapeError("pixel-space denoiser must have 3 channels, has " + std::to_string(m.config().channels));
  }
  return restore_with_codec(x, pm, identity_codec(),
                            [&m](const LatentTensor& z, int t) { return predict_noise(m, z, t); }, s, seed);
}

}  // namespace ltaf
