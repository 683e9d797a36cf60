#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ltaf/image.hpp"

namespace ltaf {

enum class ArtifactKind { opaque_mask, fold_darken, bubble_brighten, blur_region };

std::string to_string(ArtifactKind kind);
ArtifactKind parse_artifact_kind(const std::string& name);

// Rotated ellipse in pixel coordinates; a pixel belongs to the region when its
// centre (x + 0.5, y + 0.5) lies inside.
struct EllipseRegion {
  double cx = 0.0;
  double cy = 0.0;
  double rx = 0.0;
  double ry = 0.0;
  double angle = 0.0;  // radians
};

// Simple polygon with (x, y) vertices; even-odd rule on pixel centres.
struct PolygonRegion {
  std::vector<std::pair<double, double>> vertices;
};

using ArtifactRegion = std::variant<EllipseRegion, PolygonRegion>;

// `intensity` is interpreted per kind:
//   opaque_mask      gray level the region is painted with
//   fold_darken      multiplicative factor (0.4-0.8 by default)
//   bubble_brighten  fraction of the way each value moves toward white
//   blur_region      Gaussian sigma in pixels (2-6 by default)
struct ArtifactSpec {
  ArtifactKind kind = ArtifactKind::opaque_mask;
  ArtifactRegion region;
  double intensity = 0.5;
  std::uint64_t seed = 0;
};

struct ArtifactResult {
  Image image;
  PixelMask mask;  // exactly the pixels that differ from the input
};

// Rasterizes a region; throws DomainError when its bounding box leaves the
// image or when it covers no pixel centre.
PixelMask rasterize_region(const ArtifactRegion& region, int height, int width);

ArtifactResult synthesize_artifact(const Image& x, const ArtifactSpec& spec);

// Draws a random elliptical artifact of the given kind covering 5-25% of
// the tile, with intensity in the kind's default range.
ArtifactSpec random_artifact_spec(ArtifactKind kind, int height, int width, std::uint64_t seed);

// H&E-like tiles: low-frequency pink/magenta stroma with soft dark-purple
// elliptical nuclei. `size` must be a multiple of 8.
std::vector<Image> generate_synthetic_histology(int n, int size, std::uint64_t seed);

// Separable Gaussian blur (reflect border), used by blur_region.
Image gaussian_blur(const Image& x, double sigma);

}  // namespace ltaf
