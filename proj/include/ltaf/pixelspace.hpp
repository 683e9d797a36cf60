#pragma once

#include <cstdint>
#include <span>

#include "ltaf/denoiser.hpp"
#include "ltaf/image.hpp"
#include "ltaf/schedule.hpp"

namespace ltaf {

// Pixel-space baseline: the same U-shaped denoiser with 3 channels running on
// full-resolution CHW pixels.
using PixelDenoiserModel = DenoiserModel;

// Trains on the images themselves; config.model.channels is forced to 3.
PixelDenoiserModel train_pixel_denoiser(std::span<const Image> dataset, const Schedule& s,
                                        DenoiserTrainConfig config, TrainingLog* log = nullptr);

// The regional loop with the identity codec (f = 1).
Image pixel_restore(const Image& x, const PixelMask& pm, const PixelDenoiserModel& m, const Schedule& s,
                    std::uint64_t seed);

}  // namespace ltaf
