#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ltaf/tensor.hpp"

namespace ltaf {

using Rng = std::mt19937_64;

// Tensor of independent standard normal draws.
Tensor gaussian_tensor(std::vector<int> shape, Rng& rng);

// Derives an independent stream seed from a base seed and an index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace ltaf
