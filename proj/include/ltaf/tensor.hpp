#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ltaf {

// Dense row-major float tensor. Network activations are NCHW, latents are
// CHW (channels, height, width), dense vectors are [N, D].
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, float fill = 0.0f);
  Tensor(std::vector<int> shape, std::vector<float> values);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const;
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }
  std::vector<float>& storage() { return data_; }
  const std::vector<float>& storage() const { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_string() const;

  void fill(float v);

  // Reinterprets the same storage under a new shape with equal element count.
  Tensor reshaped(std::vector<int> shape) const;

 private:
  std::vector<int> shape_;
  std::vector<float> data_;
};

std::size_t element_count(const std::vector<int>& shape);

// Throws ShapeError naming `what` unless both tensors share a shape.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

// A latent is a rank-3 CHW tensor.
using LatentTensor = Tensor;

// FNV-1a over the raw bytes of every element.
std::uint64_t checksum(const Tensor& t);

}  // namespace ltaf
