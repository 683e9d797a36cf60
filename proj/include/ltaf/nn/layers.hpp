#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ltaf/nn/graph.hpp"

namespace ltaf::nn {

// Ordered, named collection of trainable tensors. Order is creation order so
// serialization and optimizer state are deterministic.
class ParameterStore {
 public:
  Var create(const std::string& name, Tensor init);
  Var find(const std::string& name) const;

  const std::vector<std::pair<std::string, Var>>& entries() const { return entries_; }
  std::size_t parameter_count() const;

  std::map<std::string, Tensor> snapshot() const;

  // Copies values from `tensors` into the existing parameters. Every parameter
  // must be present with a matching shape; the error names the offender.
  void assign(const std::map<std::string, Tensor>& tensors);

  std::uint64_t checksum() const;

 private:
  std::vector<std::pair<std::string, Var>> entries_;
};

// Largest group count <= 8 that divides `channels`.
int norm_groups(int channels);

struct Conv2d {
  Var weight;
  Var bias;
  int stride = 1;
  int pad = 1;

  static Conv2d create(ParameterStore& store, const std::string& name, int in_channels, int out_channels,
                       int kernel, int stride, std::mt19937_64& rng, float init_scale = 1.0f);
  Var operator()(const Var& x) const;
};

struct GroupNorm {
  Var gamma;
  Var beta;
  int groups = 1;

  static GroupNorm create(ParameterStore& store, const std::string& name, int channels);
  Var operator()(const Var& x) const;
};

struct Linear {
  Var weight;
  Var bias;

  static Linear create(ParameterStore& store, const std::string& name, int in_features, int out_features,
                       std::mt19937_64& rng);
  Var operator()(const Var& x) const;
};

// GroupNorm -> SiLU -> conv3x3 [+ projected time embedding] -> GroupNorm ->
// SiLU -> conv3x3, plus a residual path (1x1 conv when widths differ).
struct ResBlock {
  GroupNorm norm1;
  Conv2d conv1;
  std::optional<Linear> time_proj;
  GroupNorm norm2;
  Conv2d conv2;
  std::optional<Conv2d> shortcut;

  // time_dim == 0 builds an unconditioned block.
  static ResBlock create(ParameterStore& store, const std::string& name, int in_channels, int out_channels,
                         int time_dim, std::mt19937_64& rng);
  Var operator()(const Var& x, const Var& time_embedding = nullptr) const;
};

struct AdamConfig {
  float lr = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

class Adam {
 public:
  Adam(const ParameterStore& store, AdamConfig config);
  // Applies one update from the accumulated gradients, then clears them.
  void step();
  void zero_grad();

 private:
  std::vector<Var> params_;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
  AdamConfig config_;
  long step_count_ = 0;
};

}  // namespace ltaf::nn
