#pragma once

#include <vector>

#include "ltaf/image.hpp"

namespace ltaf {

// All metrics quantize images to 8-bit integers, round(v * 255), before
// comparing, so in-memory results equal those computed from saved PNGs.

inline constexpr double psnr_cap_db = 100.0;

struct MetricReport {
  double l2_whole = 0.0;
  double mse_region = 0.0;
  double ssim = 1.0;
  double psnr = psnr_cap_db;
  double fsim = 1.0;
};

// Sum of squared differences over every pixel and channel.
double l2_whole(const Image& a, const Image& b);

// Mean squared difference over the artifact pixels of `pm`, per pixel and
// channel. Throws DomainError for an empty mask.
double mse_region(const Image& a, const Image& b, const PixelMask& pm);

// Mean local SSIM (11x11 Gaussian window, sigma 1.5, K1 0.01, K2 0.03,
// L 255) over window positions fully inside the image, averaged over the
// three channels. Both sides must be at least 11 pixels.
double ssim(const Image& a, const Image& b);

// 10 log10(255^2 / MSE), 100 dB when the images are identical.
double psnr(const Image& a, const Image& b);

// Feature similarity on luminance: phase congruency from a 4-scale,
// 4-orientation log-Gabor bank plus Scharr gradient magnitude. Both sides
// must be at least 16 pixels.
double fsim(const Image& a, const Image& b);

// Phase congruency map of a row-major grayscale image on the 0-255 scale.
std::vector<double> phase_congruency(const std::vector<double>& gray, int height, int width);

// 0.299 R + 0.587 G + 0.114 B of the quantized image.
std::vector<double> luminance(const Image& img);

MetricReport compute_metrics(const Image& result, const Image& clean, const PixelMask& pm);

}  // namespace ltaf
