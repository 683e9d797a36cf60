#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "ltaf/tensor.hpp"

// Minimal reverse-mode differentiation over whole tensors. Every op returns a
// fresh Node; when gradients are enabled and any input requires them, the
// node keeps its inputs alive and records a closure that pushes its gradient
// back into them.
namespace ltaf::nn {

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  // Zero-initialized gradient buffer, allocated on first use.
  Tensor& grad_buffer();
};

using Var = std::shared_ptr<Node>;

Var constant(Tensor value);
Var parameter(Tensor value);

// Gradient recording is per thread so concurrent inference on shared models
// never touches shared state.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Runs backpropagation from a scalar root.
void backward(const Var& root);

// Builds a result node; `fn` is kept only when some input requires grad.
Var make_node(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> fn);

}  // namespace ltaf::nn
