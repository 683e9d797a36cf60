#include "ltaf/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ltaf/errors.hpp"
#include "ltaf/random.hpp"

namespace ltaf {

std::string to_string(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::opaque_mask: return "opaque_mask";
    case ArtifactKind::fold_darken: return "fold_darken";
    case ArtifactKind::bubble_brighten: return "bubble_brighten";
    case ArtifactKind::blur_region: return "blur_region";
  }
  return "unknown";
}

ArtifactKind parse_artifact_kind(const std::string& name) {
  for (auto k : {ArtifactKind::opaque_mask, ArtifactKind::fold_darken, ArtifactKind::bubble_brighten,
                 ArtifactKind::blur_region}) {
    if (to_string(k) == name) return k;
  }
  throw DomainError("unknown artifact kind '" + name + "'");
}

namespace {

struct Box {
  double x0, y0, x1, y1;
};

Box bounds(const EllipseRegion& e) {
  const double c = std::cos(e.angle);
  const double s = std::sin(e.angle);
  const double hw = std::sqrt(e.rx * e.rx * c * c + e.ry * e.ry * s * s);
  const double hh = std::sqrt(e.rx * e.rx * s * s + e.ry * e.ry * c * c);
  return {e.cx - hw, e.cy - hh, e.cx + hw, e.cy + hh};
}

Box bounds(const PolygonRegion& p) {
  if (p.vertices.size() < 3) throw DomainError("polygon region needs at least three vertices");
  Box b{p.vertices[0].first, p.vertices[0].second, p.vertices[0].first, p.vertices[0].second};
  for (const auto& [x, y] : p.vertices) {
    b.x0 = std::min(b.x0, x);
    b.y0 = std::min(b.y0, y);
    b.x1 = std::max(b.x1, x);
    b.y1 = std::max(b.y1, y);
  }
  return b;
}

bool contains(const EllipseRegion& e, double px, double py) {
  if (e.rx <= 0.0 || e.ry <= 0.0) return false;
  const double dx = px - e.cx;
  const double dy = py - e.cy;
  const double c = std::cos(e.angle);
  const double s = std::sin(e.angle);
  const double u = (dx * c + dy * s) / e.rx;
  const double v = (-dx * s + dy * c) / e.ry;
  return u * u + v * v <= 1.0;
}

bool contains(const PolygonRegion& p, double px, double py) {
  bool inside = false;
  const auto& v = p.vertices;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    const auto [xi, yi] = v[i];
    const auto [xj, yj] = v[j];
    if ((yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi) inside = !inside;
  }
  return inside;
}

float smoothstep(float t) { return t * t * (3.0f - 2.0f * t); }

// Smooth value noise in roughly [-1, 1] with lattice spacing `cell` pixels.
std::vector<float> value_noise(int size, int cell, Rng& rng) {
  const int nodes = size / cell + 2;
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<float> lattice(static_cast<std::size_t>(nodes) * nodes);
  for (float& v : lattice) v = dist(rng);
  std::vector<float> out(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < size; ++y) {
    const float fy = (y + 0.5f) / cell;
    const int iy = static_cast<int>(fy);
    const float ty = smoothstep(fy - iy);
    for (int x = 0; x < size; ++x) {
      const float fx = (x + 0.5f) / cell;
      const int ix = static_cast<int>(fx);
      const float tx = smoothstep(fx - ix);
      const float a = lattice[iy * nodes + ix];
      const float b = lattice[iy * nodes + ix + 1];
      const float c = lattice[(iy + 1) * nodes + ix];
      const float d = lattice[(iy + 1) * nodes + ix + 1];
      out[static_cast<std::size_t>(y) * size + x] = (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
    }
  }
  return out;
}

Image make_tile(int size, Rng& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  auto jitter = [&](float v, float amount) { return v + amount * (2.0f * u(rng) - 1.0f); };

  const float stroma[3] = {jitter(0.90f, 0.03f), jitter(0.60f, 0.04f), jitter(0.80f, 0.03f)};
  const auto coarse = value_noise(size, 16, rng);
  const auto fine = value_noise(size, 8, rng);
  const float amp = jitter(0.06f, 0.02f);

  Image img(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * size + x;
      const float n = 0.7f * coarse[p] + 0.3f * fine[p];
      // eosin density modulates green most strongly
      img.at(y, x, 0) = stroma[0] + 0.5f * amp * n;
      img.at(y, x, 1) = stroma[1] + 1.5f * amp * n;
      img.at(y, x, 2) = stroma[2] + 0.8f * amp * n;
    }
  }

  const int area = size * size;
  std::uniform_int_distribution<int> count_dist(area / 400, area / 200);
  const int nuclei = count_dist(rng);
  for (int k = 0; k < nuclei; ++k) {
    const float rx = 2.5f + 3.0f * u(rng);
    const float ry = rx * (0.6f + 0.4f * u(rng));
    const float angle = std::numbers::pi_v<float> * u(rng);
    const float cx = size * u(rng);
    const float cy = size * u(rng);
    const float color[3] = {jitter(0.38f, 0.05f), jitter(0.22f, 0.04f), jitter(0.55f, 0.05f)};
    const float ca = std::cos(angle);
    const float sa = std::sin(angle);
    const int x0 = std::max(0, static_cast<int>(cx - rx - 2));
    const int x1 = std::min(size - 1, static_cast<int>(cx + rx + 2));
    const int y0 = std::max(0, static_cast<int>(cy - rx - 2));
    const int y1 = std::min(size - 1, static_cast<int>(cy + rx + 2));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const float dx = x + 0.5f - cx;
        const float dy = y + 0.5f - cy;
        const float uu = (dx * ca + dy * sa) / rx;
        const float vv = (-dx * sa + dy * ca) / ry;
        const float d = std::sqrt(uu * uu + vv * vv);
        // soft boundary between radius 0.7 and 1.0
        const float alpha = d >= 1.0f ? 0.0f : (d <= 0.7f ? 1.0f : smoothstep((1.0f - d) / 0.3f));
        if (alpha <= 0.0f) continue;
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = img.at(y, x, c) * (1.0f - alpha) + color[c] * alpha;
      }
    }
  }
  for (float& v : img.pixels) v = std::clamp(v, 0.0f, 1.0f);
  return img;
}

}  // namespace

PixelMask rasterize_region(const ArtifactRegion& region, int height, int width) {
  const Box b = std::visit([](const auto& r) { return bounds(r); }, region);
  if (b.x0 < 0.0 || b.y0 < 0.0 || b.x1 > width || b.y1 > height) {
    throw DomainError("artifact region extends outside the " + std::to_string(height) + "x" + std::to_string(width) +
                      " image");
  }
  PixelMask m(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const bool in = std::visit([&](const auto& r) { return contains(r, x + 0.5, y + 0.5); }, region);
      if (in) m.set(y, x, true);
    }
  }
  if (m.count() == 0) throw DomainError("artifact region covers no pixels");
  return m;
}

Image gaussian_blur(const Image& x, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("blur sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<float> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = static_cast<float>(v);
    total += v;
  }
  for (float& k : kernel) k = static_cast<float>(k / total);

  auto reflect = [](int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
  };
  Image tmp(x.height, x.width);
  for (int y = 0; y < x.height; ++y) {
    for (int xx = 0; xx < x.width; ++xx) {
      for (int c = 0; c < 3; ++c) {
        float acc = 0.0f;
        for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * x.at(y, reflect(xx + k, x.width), c);
        tmp.at(y, xx, c) = acc;
      }
    }
  }
  Image out(x.height, x.width);
  for (int y = 0; y < x.height; ++y) {
    for (int xx = 0; xx < x.width; ++xx) {
      for (int c = 0; c < 3; ++c) {
        float acc = 0.0f;
        for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * tmp.at(reflect(y + k, x.height), xx, c);
        out.at(y, xx, c) = std::clamp(acc, 0.0f, 1.0f);
      }
    }
  }
  return out;
}

ArtifactResult synthesize_artifact(const Image& x, const ArtifactSpec& spec) {
  const PixelMask region = rasterize_region(spec.region, x.height, x.width);
  const double k = spec.intensity;
  switch (spec.kind) {
    case ArtifactKind::opaque_mask:
      if (k < 0.0 || k > 1.0) throw DomainError("opaque gray level must lie in [0, 1]");
      break;
    case ArtifactKind::fold_darken:
      if (k < 0.0 || k >= 1.0) throw DomainError("darken factor must lie in [0, 1)");
      break;
    case ArtifactKind::bubble_brighten:
      if (k <= 0.0 || k > 1.0) throw DomainError("brighten strength must lie in (0, 1]");
      break;
    case ArtifactKind::blur_region:
      if (k <= 0.0) throw DomainError("blur sigma must be positive");
      break;
  }

  ArtifactResult r{x, PixelMask(x.height, x.width)};
  Image blurred;
  if (spec.kind == ArtifactKind::blur_region) blurred = gaussian_blur(x, k);
  const float kf = static_cast<float>(k);
  for (int y = 0; y < x.height; ++y) {
    for (int xx = 0; xx < x.width; ++xx) {
      if (!region.at(y, xx)) continue;
      bool changed = false;
      for (int c = 0; c < 3; ++c) {
        const float v = x.at(y, xx, c);
        float out = v;
        switch (spec.kind) {
          case ArtifactKind::opaque_mask: out = kf; break;
          case ArtifactKind::fold_darken: out = kf * v; break;
          case ArtifactKind::bubble_brighten: out = v + (1.0f - v) * kf; break;
          case ArtifactKind::blur_region: out = blurred.at(y, xx, c); break;
        }
        out = std::clamp(out, 0.0f, 1.0f);
        r.image.at(y, xx, c) = out;
        changed = changed || out != v;
      }
      r.mask.set(y, xx, changed);
    }
  }
  return r;
}

ArtifactSpec random_artifact_spec(ArtifactKind kind, int height, int width, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ArtifactSpec spec;
  spec.kind = kind;
  spec.seed = seed;

  const double area = (0.05 + 0.20 * u(rng)) * height * width;
  const double aspect = 0.5 + 0.5 * u(rng);
  EllipseRegion e;
  e.rx = std::sqrt(area / (std::numbers::pi * aspect));
  e.ry = e.rx * aspect;
  e.angle = std::numbers::pi * u(rng);
  // keep the bounding box inside the tile
  const double limit = 0.5 * std::min(height, width) - 0.5;
  if (e.rx > limit) {
    e.ry *= limit / e.rx;
    e.rx = limit;
  }
  const Box b = bounds(EllipseRegion{0.0, 0.0, e.rx, e.ry, e.angle});
  e.cx = -b.x0 + (width - (b.x1 - b.x0)) * u(rng);
  e.cy = -b.y0 + (height - (b.y1 - b.y0)) * u(rng);
  spec.region = e;

  switch (kind) {
    case ArtifactKind::opaque_mask: spec.intensity = 0.3 + 0.4 * u(rng); break;
    case ArtifactKind::fold_darken: spec.intensity = 0.4 + 0.4 * u(rng); break;
    case ArtifactKind::bubble_brighten: spec.intensity = 0.4 + 0.4 * u(rng); break;
    case ArtifactKind::blur_region: spec.intensity = 2.0 + 4.0 * u(rng); break;
  }
  return spec;
}

std::vector<Image> generate_synthetic_histology(int n, int size, std::uint64_t seed) {
  if (n <= 0) throw DomainError("synthetic dataset size must be positive");
  if (size <= 0 || size % 8 != 0) throw DomainError("tile size must be a positive multiple of 8");
  std::vector<Image> tiles;
  tiles.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    tiles.push_back(make_tile(size, rng));
  }
  return tiles;
}

}  // namespace ltaf
