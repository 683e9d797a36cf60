#include "ltaf/nn/layers.hpp"

#include <cmath>
#include <cstring>

#include "ltaf/errors.hpp"
#include "ltaf/nn/ops.hpp"

namespace ltaf::nn {

Var ParameterStore::create(const std::string& name, Tensor init) {
  if (find(name)) throw std::logic_error("duplicate parameter name " + name);
  Var v = parameter(std::move(init));
  entries_.emplace_back(name, v);
  return v;
}

Var ParameterStore::find(const std::string& name) const {
  for (const auto& [n, v] : entries_) {
    if (n == name) return v;
  }
  return nullptr;
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second->value.size();
  return n;
}

std::map<std::string, Tensor> ParameterStore::snapshot() const {
  std::map<std::string, Tensor> out;
  for (const auto& [n, v] : entries_) out.emplace(n, v->value);
  return out;
}

void ParameterStore::assign(const std::map<std::string, Tensor>& tensors) {
  for (const auto& [n, v] : entries_) {
    auto it = tensors.find(n);
    if (it == tensors.end()) throw FormatError("missing tensor '" + n + "' required by the model architecture");
    if (!it->second.same_shape(v->value)) {
      throw FormatError("tensor '" + n + "' has shape " + it->second.shape_string() + ", expected " +
                        v->value.shape_string());
    }
  }
  for (auto& [n, v] : entries_) v->value = tensors.at(n);
}

std::uint64_t ParameterStore::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& [n, v] : entries_) {
    for (char ch : n) {
      h ^= static_cast<unsigned char>(ch);
      h *= 1099511628211ULL;
    }
    h ^= ltaf::checksum(v->value);
    h *= 1099511628211ULL;
  }
  return h;
}

int norm_groups(int channels) {
  for (int g = 8; g > 1; --g) {
    if (channels % g == 0) return g;
  }
  return 1;
}

namespace {
Tensor uniform_tensor(std::vector<int> shape, float bound, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<float> dist(-bound, bound);
  for (float& v : t.values()) v = dist(rng);
  return t;
}
}  // namespace

Conv2d Conv2d::create(ParameterStore& store, const std::string& name, int in_channels, int out_channels, int kernel,
                      int stride, std::mt19937_64& rng, float init_scale) {
  const float bound = init_scale / std::sqrt(static_cast<float>(in_channels * kernel * kernel));
  Conv2d c;
  c.weight = store.create(name + ".weight", uniform_tensor({out_channels, in_channels, kernel, kernel}, bound, rng));
  c.bias = store.create(name + ".bias", uniform_tensor({out_channels}, bound, rng));
  c.stride = stride;
  c.pad = kernel / 2;
  return c;
}

Var Conv2d::operator()(const Var& x) const { return conv2d(x, weight, bias, stride, pad); }

GroupNorm GroupNorm::create(ParameterStore& store, const std::string& name, int channels) {
  GroupNorm g;
  g.gamma = store.create(name + ".gamma", Tensor({channels}, 1.0f));
  g.beta = store.create(name + ".beta", Tensor({channels}, 0.0f));
  g.groups = norm_groups(channels);
  return g;
}

Var GroupNorm::operator()(const Var& x) const { return group_norm(x, gamma, beta, groups); }

Linear Linear::create(ParameterStore& store, const std::string& name, int in_features, int out_features,
                      std::mt19937_64& rng) {
  const float bound = 1.0f / std::sqrt(static_cast<float>(in_features));
  Linear l;
  l.weight = store.create(name + ".weight", uniform_tensor({out_features, in_features}, bound, rng));
  l.bias = store.create(name + ".bias", uniform_tensor({out_features}, bound, rng));
  return l;
}

Var Linear::operator()(const Var& x) const { return linear(x, weight, bias); }

ResBlock ResBlock::create(ParameterStore& store, const std::string& name, int in_channels, int out_channels,
                          int time_dim, std::mt19937_64& rng) {
  ResBlock b;
  b.norm1 = GroupNorm::create(store, name + ".norm1", in_channels);
  b.conv1 = Conv2d::create(store, name + ".conv1", in_channels, out_channels, 3, 1, rng);
  if (time_dim > 0) b.time_proj = Linear::create(store, name + ".time_proj", time_dim, out_channels, rng);
  b.norm2 = GroupNorm::create(store, name + ".norm2", out_channels);
  b.conv2 = Conv2d::create(store, name + ".conv2", out_channels, out_channels, 3, 1, rng);
  if (in_channels != out_channels) b.shortcut = Conv2d::create(store, name + ".shortcut", in_channels, out_channels, 1, 1, rng);
  return b;
}

Var ResBlock::operator()(const Var& x, const Var& time_embedding) const {
  Var h = conv1(silu(norm1(x)));
  if (time_proj) {
    if (!time_embedding) throw std::logic_error("time-conditioned block called without an embedding");
    h = add_channel_bias(h, (*time_proj)(silu(time_embedding)));
  }
  h = conv2(silu(norm2(h)));
  return add(shortcut ? (*shortcut)(x) : x, h);
}

Adam::Adam(const ParameterStore& store, AdamConfig config) : config_(config) {
  for (const auto& e : store.entries()) {
    params_.push_back(e.second);
    m_.emplace_back(e.second->value.size(), 0.0f);
    v_.emplace_back(e.second->value.size(), 0.0f);
  }
}

void Adam::step() {
  ++step_count_;
  const double bc1 = 1.0 - std::pow(static_cast<double>(config_.beta1), static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(static_cast<double>(config_.beta2), static_cast<double>(step_count_));
  const float step_size = static_cast<float>(config_.lr / bc1);
  const float bc2_sqrt = static_cast<float>(std::sqrt(bc2));
  for (std::size_t p = 0; p < params_.size(); ++p) {
    Node& node = *params_[p];
    if (node.grad.size() != node.value.size()) continue;
    float* w = node.value.data();
    const float* g = node.grad.data();
    float* m = m_[p].data();
    float* v = v_[p].data();
    for (std::size_t i = 0; i < node.value.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0f - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0f - config_.beta2) * g[i] * g[i];
      w[i] -= step_size * m[i] / (std::sqrt(v[i]) / bc2_sqrt + config_.eps);
    }
  }
  zero_grad();
}

void Adam::zero_grad() {
  for (auto& p : params_) p->grad.fill(0.0f);
}

}  // namespace ltaf::nn
