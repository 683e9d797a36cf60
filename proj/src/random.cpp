#include "ltaf/random.hpp"

namespace ltaf {

Tensor gaussian_tensor(std::vector<int> shape, Rng& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<float> dist(0.0f, 1.0f);
  for (float& v : t.values()) v = dist(rng);
  return t;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace ltaf
