#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ltaf/image.hpp"
#include "ltaf/schedule.hpp"

namespace ltaf {

class VaeModel;
class DenoiserModel;

struct BenchCase {
  Image image;
  PixelMask mask;
};

struct TimingStats {
  std::string space;  // "latent" or "pixel"
  int steps = 0;
  int downsample = 1;
  std::vector<double> seconds;  // one entry per image
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single image
};

struct BenchReport {
  int images = 0;
  int height = 0;
  int width = 0;
  TimingStats latent;
  TimingStats pixel;
  double speedup = 0.0;  // pixel mean / latent mean
  std::uint64_t config_fingerprint = 0;
};

// Times restore (latent space) and pixel_restore on the same images and
// masks. Only the restore calls are inside the timed region.
BenchReport benchmark_restore(std::span<const BenchCase> cases, const VaeModel& vae, const DenoiserModel& latent_model,
                              const Schedule& latent_schedule, const DenoiserModel& pixel_model,
                              const Schedule& pixel_schedule, std::uint64_t seed, std::uint64_t config_fingerprint);

// Columns: space,steps,downsample,images,height,width,mean_seconds,
// stddev_seconds,speedup,config_fingerprint
std::string bench_csv(const BenchReport& r);
std::string bench_table(const BenchReport& r);

}  // namespace ltaf
