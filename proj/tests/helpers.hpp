#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "ltaf/image.hpp"

namespace testing {

inline ltaf::Image random_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ltaf::Image img(h, w);
  for (float& v : img.pixels) v = u(rng);
  return img;
}

inline ltaf::PixelMask random_mask(int h, int w, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(density);
  ltaf::PixelMask m(h, w);
  for (auto& v : m.artifact) v = b(rng) ? 1 : 0;
  return m;
}

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("ltaf_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
