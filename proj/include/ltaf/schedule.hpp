#pragma once

#include <vector>

#include "ltaf/tensor.hpp"

namespace ltaf {

// Linear variance schedule over T steps, 0-indexed: step t uses beta[t] and
// alpha_bar[t] = prod_{i<=t} (1 - beta[i]). Immutable once built.
class Schedule {
 public:
  int steps() const { return static_cast<int>(beta_.size()); }
  double beta(int t) const { return beta_.at(static_cast<std::size_t>(t)); }
  double alpha(int t) const { return 1.0 - beta(t); }
  double alpha_bar(int t) const { return alpha_bar_.at(static_cast<std::size_t>(t)); }
  const std::vector<double>& betas() const { return beta_; }
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }

  friend Schedule build_schedule(int steps, double beta_start, double beta_end);

 private:
  std::vector<double> beta_;
  std::vector<double> alpha_bar_;
};

// Requires steps >= 1 and 0 < beta_start <= beta_end < 1 (DomainError otherwise).
Schedule build_schedule(int steps, double beta_start, double beta_end);

// Linear schedule with endpoints given for a 1000-step reference, rescaled
// by 1000 / steps so the terminal noise level does not depend on T. Betas
// are capped at 0.999 for very short schedules.
Schedule build_scaled_schedule(int steps, double beta_start_ref, double beta_end_ref);

// sqrt(alpha_bar[t]) * z0 + sqrt(1 - alpha_bar[t]) * noise.
LatentTensor forward_diffuse(const LatentTensor& z0, int t, const LatentTensor& noise, const Schedule& s);

// One ancestral reverse step with variance beta[t]:
//   (z_t - beta[t] / sqrt(1 - alpha_bar[t]) * eps_hat) / sqrt(alpha[t]) + sqrt(beta[t]) * noise
// A null `noise` means zero noise (used at t = 0).
LatentTensor posterior_step(const LatentTensor& z_t, const LatentTensor& eps_hat, int t, const Schedule& s,
                            const LatentTensor* noise);

}  // namespace ltaf
