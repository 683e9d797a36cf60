#include "ltaf/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "ltaf/denoiser.hpp"
#include "ltaf/errors.hpp"
#include "ltaf/pixelspace.hpp"
#include "ltaf/random.hpp"
#include "ltaf/regional.hpp"
#include "ltaf/vae.hpp"

namespace ltaf {
namespace {

void summarize(TimingStats& t) {
  double sum = 0.0;
  for (double s : t.seconds) sum += s;
  t.mean = sum / static_cast<double>(t.seconds.size());
  double var = 0.0;
  for (double s : t.seconds) var += (s - t.mean) * (s - t.mean);
  t.stddev = t.seconds.size() > 1 ? std::sqrt(var / static_cast<double>(t.seconds.size() - 1)) : 0.0;
}

template <typename Fn>
double time_call(Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

BenchReport benchmark_restore(std::span<const BenchCase> cases, const VaeModel& vae, const DenoiserModel& latent_model,
                              const Schedule& latent_schedule, const DenoiserModel& pixel_model,
                              const Schedule& pixel_schedule, std::uint64_t seed, std::uint64_t config_fingerprint) {
  if (cases.empty()) throw DomainError("benchmark needs at least one image");
  BenchReport r;
  r.images = static_cast<int>(cases.size());
  r.height = cases.front().image.height;
  r.width = cases.front().image.width;
  r.config_fingerprint = config_fingerprint;
  r.latent = {"latent", latent_schedule.steps(), vae.downsample(), {}, 0.0, 0.0};
  r.pixel = {"pixel", pixel_schedule.steps(), 1, {}, 0.0, 0.0};
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const BenchCase& c = cases[i];
    if (!c.image.same_size(cases.front().image)) throw ShapeError("benchmark images must share one size");
    const std::uint64_t s = derive_seed(seed, i);
    r.latent.seconds.push_back(time_call([&] { restore(c.image, c.mask, vae, latent_model, latent_schedule, s); }));
    r.pixel.seconds.push_back(time_call([&] { pixel_restore(c.image, c.mask, pixel_model, pixel_schedule, s); }));
  }
  summarize(r.latent);
  summarize(r.pixel);
  r.speedup = r.pixel.mean / r.latent.mean;
  return r;
}

std::string bench_csv(const BenchReport& r) {
  std::ostringstream o;
  o << "space,steps,downsample,images,height,width,mean_seconds,stddev_seconds,speedup,config_fingerprint\n";
  for (const TimingStats* t : {&r.latent, &r.pixel}) {
    o << t->space << ',' << t->steps << ',' << t->downsample << ',' << r.images << ',' << r.height << ',' << r.width
      << ',' << fmt("%.6f", t->mean) << ',' << fmt("%.6f", t->stddev) << ','
      << fmt("%.3f", t == &r.latent ? r.speedup : 1.0) << ',' << hex(r.config_fingerprint) << '\n';
  }
  return o.str();
}

std::string bench_table(const BenchReport& r) {
  std::ostringstream o;
  o << "Restoration time per " << r.height << "x" << r.width << "x3 image over " << r.images << " images\n";
  o << "  space    steps  f   mean (s)    stddev (s)\n";
  for (const TimingStats* t : {&r.latent, &r.pixel}) {
    char line[128];
    std::snprintf(line, sizeof line, "  %-7s  %5d  %-2d  %10.4f  %10.4f\n", t->space.c_str(), t->steps, t->downsample,
                  t->mean, t->stddev);
    o << line;
  }
  o << "  speedup (pixel / latent): " << fmt("%.2f", r.speedup) << "x\n";
  o << "  config fingerprint: " << hex(r.config_fingerprint) << '\n';
  o << "  Timings are wall-clock on this machine, single-threaded; the pixel-space model is a same-width\n"
       "  stand-in for a pixel-level diffusion restorer, so only the ratio is meaningful.\n";
  return o.str();
}

}  // namespace ltaf
