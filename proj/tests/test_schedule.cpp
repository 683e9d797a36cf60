#include <doctest.h>

#include <cmath>
#include <random>

#include "ltaf/errors.hpp"
#include "ltaf/random.hpp"
#include "ltaf/schedule.hpp"
#include "oracles.hpp"

using namespace ltaf;

TEST_CASE("linear schedule endpoints and products") {
  const Schedule s = build_schedule(50, 1e-4, 0.02);
  CHECK(s.steps() == 50);
  CHECK(s.beta(0) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(s.beta(49) == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(s.alpha_bar(0) == doctest::Approx(0.9999).epsilon(1e-12));
  for (int t = 1; t < 50; ++t) CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
}

TEST_CASE("single step schedule") {
  const Schedule s = build_schedule(1, 0.5, 0.5);
  REQUIRE(s.steps() == 1);
  CHECK(s.beta(0) == 0.5);
  CHECK(s.alpha_bar(0) == 0.5);
  CHECK(build_schedule(1, 0.1, 0.3).beta(0) == 0.1);
}

TEST_CASE("invalid schedules are rejected") {
  CHECK_THROWS_AS(build_schedule(0, 1e-4, 0.02), DomainError);
  CHECK_THROWS_AS(build_schedule(10, 0.0, 0.02), DomainError);
  CHECK_THROWS_AS(build_schedule(10, 0.03, 0.02), DomainError);
  CHECK_THROWS_AS(build_schedule(10, 1e-4, 1.0), DomainError);
}

TEST_CASE("random schedules keep the product identity and a falling SNR") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> steps(1, 400);
  std::uniform_real_distribution<double> u(1e-5, 0.2);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = steps(rng);
    double a = u(rng);
    double b = u(rng);
    if (a > b) std::swap(a, b);
    const Schedule s = build_schedule(n, a, b);
    double snr_prev = INFINITY;
    for (int t = 0; t < n; ++t) {
      CHECK(s.beta(t) == doctest::Approx(oracle::beta(n, a, b, t)).epsilon(1e-12));
      CHECK(s.alpha_bar(t) == doctest::Approx(oracle::alpha_bar(n, a, b, t)).epsilon(1e-10));
      const double snr = s.alpha_bar(t) / (1.0 - s.alpha_bar(t));
      CHECK(snr < snr_prev);
      snr_prev = snr;
    }
  }
}

TEST_CASE("scaled schedule rescales the reference endpoints") {
  const Schedule s = build_scaled_schedule(50, 1e-4, 0.02);
  CHECK(s.beta(0) == doctest::Approx(0.002));
  CHECK(s.beta(49) == doctest::Approx(0.4));
  const Schedule p = build_scaled_schedule(250, 1e-4, 0.02);
  CHECK(p.beta(249) == doctest::Approx(0.08));
  CHECK(s.alpha_bar(49) < 1e-3);
  CHECK(p.alpha_bar(249) < 1e-3);
}

TEST_CASE("forward_diffuse examples") {
  const Schedule s = build_schedule(1, 0.75, 0.75);  // alpha_bar[0] = 0.25
  const Tensor ones({2, 2, 2}, 1.0f);
  const Tensor zero({2, 2, 2}, 0.0f);
  const Tensor r = forward_diffuse(ones, 0, zero, s);
  for (float v : r.values()) CHECK(v == doctest::Approx(0.5f));

  const Schedule s50 = build_schedule(50, 1e-4, 0.02);
  Rng rng(3);
  const Tensor n = gaussian_tensor({3, 4, 4}, rng);
  const Tensor z = forward_diffuse(Tensor({3, 4, 4}, 0.0f), 20, n, s50);
  for (std::size_t i = 0; i < n.size(); ++i) {
    CHECK(z[i] == doctest::Approx(std::sqrt(1.0 - s50.alpha_bar(20)) * n[i]).epsilon(1e-6));
  }
}

TEST_CASE("forward_diffuse and posterior_step match scalar oracles") {
  const Schedule s = build_schedule(50, 1e-4, 0.02);
  Rng rng(5);
  const Tensor z0 = gaussian_tensor({4, 8, 8}, rng);
  const Tensor n = gaussian_tensor({4, 8, 8}, rng);
  const Tensor eps = gaussian_tensor({4, 8, 8}, rng);
  const Tensor sn = gaussian_tensor({4, 8, 8}, rng);
  for (int t : {0, 1, 17, 49}) {
    const Tensor f = forward_diffuse(z0, t, n, s);
    const Tensor p = posterior_step(z0, eps, t, s, &sn);
    for (std::size_t i = 0; i < z0.size(); ++i) {
      CHECK(std::abs(f[i] - oracle::forward_diffuse(z0[i], n[i], s.alpha_bar(t))) < 1e-6);
      CHECK(std::abs(p[i] - oracle::posterior_step(z0[i], eps[i], sn[i], s.beta(t), s.alpha_bar(t))) < 1e-6);
    }
  }
}

TEST_CASE("posterior_step inverts forward_diffuse at t=0") {
  const Schedule s = build_schedule(50, 1e-4, 0.02);
  Rng rng(9);
  const Tensor z0 = gaussian_tensor({4, 8, 8}, rng);
  const Tensor n = gaussian_tensor({4, 8, 8}, rng);
  const Tensor back = posterior_step(forward_diffuse(z0, 0, n, s), n, 0, s, nullptr);
  for (std::size_t i = 0; i < z0.size(); ++i) CHECK(std::abs(back[i] - z0[i]) < 1e-6);

  const Tensor zero({1, 2, 2}, 0.0f);
  const Tensor r = posterior_step(zero, zero, 10, s, nullptr);
  for (float v : r.values()) CHECK(v == 0.0f);
}

TEST_CASE("schedule ops reject bad arguments") {
  const Schedule s = build_schedule(10, 1e-4, 0.02);
  const Tensor a({1, 2, 2}, 0.0f);
  const Tensor b({1, 2, 3}, 0.0f);
  CHECK_THROWS_AS(forward_diffuse(a, 0, b, s), ShapeError);
  CHECK_THROWS(forward_diffuse(a, 10, a, s));
  CHECK_THROWS(posterior_step(a, a, -1, s, nullptr));
}
