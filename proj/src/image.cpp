#include "ltaf/image.hpp"

#include <algorithm>

#include "ltaf/errors.hpp"

namespace ltaf {

Image::Image(int h, int w, float fill) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, fill) {
  if (h < 0 || w < 0) throw ShapeError("negative image size");
}

PixelMask::PixelMask(int h, int w, bool value)
    : height(h), width(w), artifact(static_cast<std::size_t>(h) * w, value ? 1 : 0) {}

std::size_t PixelMask::count() const {
  return static_cast<std::size_t>(std::count(artifact.begin(), artifact.end(), std::uint8_t{1}));
}

LatentMask::LatentMask(int h, int w, bool keep_value)
    : height(h), width(w), keep(static_cast<std::size_t>(h) * w, keep_value ? 1 : 0) {}

Tensor image_to_chw(const Image& img) {
  Tensor t({3, img.height, img.width});
  const std::size_t plane = img.pixel_count();
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < 3; ++c) t[c * plane + p] = img.pixels[p * 3 + c];
  }
  return t;
}

Image chw_to_image(const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != 3) throw ShapeError("expected a {3,H,W} tensor, got " + t.shape_string());
  Image img(t.dim(1), t.dim(2));
  const std::size_t plane = img.pixel_count();
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < 3; ++c) img.pixels[p * 3 + c] = std::clamp(t[c * plane + p], 0.0f, 1.0f);
  }
  return img;
}

}  // namespace ltaf
