#include "ltaf/schedule.hpp"

#include <cmath>
#include <string>

#include "ltaf/errors.hpp"

namespace ltaf {

Schedule build_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw DomainError("schedule needs at least one timestep");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw DomainError("schedule requires 0 < beta_start <= beta_end < 1, got " + std::to_string(beta_start) + ", " +
                      std::to_string(beta_end));
  }
  Schedule s;
  s.beta_.resize(static_cast<std::size_t>(steps));
  s.alpha_bar_.resize(static_cast<std::size_t>(steps));
  double running = 1.0;
  for (int t = 0; t < steps; ++t) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t) / (steps - 1);
    double b = beta_start + (beta_end - beta_start) * frac;
    if (steps > 1 && t == steps - 1) b = beta_end;
    s.beta_[static_cast<std::size_t>(t)] = b;
    running *= 1.0 - b;
    s.alpha_bar_[static_cast<std::size_t>(t)] = running;
  }
  return s;
}

Schedule build_scaled_schedule(int steps, double beta_start_ref, double beta_end_ref) {
  if (steps < 1) throw DomainError("schedule needs at least one timestep");
  const double scale = 1000.0 / steps;
  // very short schedules would push beta past 1
  const double end = std::min(beta_end_ref * scale, 0.999);
  return build_schedule(steps, std::min(beta_start_ref * scale, end), end);
}

namespace {
void require_step(int t, const Schedule& s) {
  if (t < 0 || t >= s.steps()) {
    throw DomainError("timestep " + std::to_string(t) + " outside [0, " + std::to_string(s.steps()) + ")");
  }
}
}  // namespace

LatentTensor forward_diffuse(const LatentTensor& z0, int t, const LatentTensor& noise, const Schedule& s) {
  require_same_shape(z0, noise, "forward_diffuse");
  require_step(t, s);
  const double a = std::sqrt(s.alpha_bar(t));
  const double b = std::sqrt(1.0 - s.alpha_bar(t));
  LatentTensor out(z0.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(a * z0[i] + b * noise[i]);
  return out;
}

LatentTensor posterior_step(const LatentTensor& z_t, const LatentTensor& eps_hat, int t, const Schedule& s,
                            const LatentTensor* noise) {
  require_same_shape(z_t, eps_hat, "posterior_step");
  if (noise) require_same_shape(z_t, *noise, "posterior_step noise");
  require_step(t, s);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(s.alpha(t));
  const double eps_coef = s.beta(t) / std::sqrt(1.0 - s.alpha_bar(t));
  const double sigma = std::sqrt(s.beta(t));
  LatentTensor out(z_t.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = inv_sqrt_alpha * (z_t[i] - eps_coef * eps_hat[i]);
    if (noise) v += sigma * (*noise)[i];
    out[i] = static_cast<float>(v);
  }
  return out;
}

}  // namespace ltaf
