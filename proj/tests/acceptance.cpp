// End-to-end acceptance run: prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ltaf/artifacts.hpp"
#include "ltaf/bench.hpp"
#include "ltaf/denoiser.hpp"
#include "ltaf/io.hpp"
#include "ltaf/metrics.hpp"
#include "ltaf/pixelspace.hpp"
#include "ltaf/random.hpp"
#include "ltaf/regional.hpp"
#include "ltaf/schedule.hpp"
#include "ltaf/vae.hpp"
#include "oracles.hpp"

using namespace ltaf;

namespace {

constexpr std::uint64_t kSeed = 2024;
constexpr int kTiles = 500;
constexpr int kHeldOut = 50;
constexpr int kTileSize = 64;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Verdict {
  int id;
  std::string name;
  bool pass;
  std::string detail;
  double seconds;
  double limit;
};

class Report {
 public:
  explicit Report(fs::path path) : path_(std::move(path)) {}

  void add(Verdict v) {
    v.pass = v.pass && v.seconds < v.limit;
    char buf[512];
    std::snprintf(buf, sizeof buf, "criterion %d (%s): %s  %s  [%.1f s, limit %.0f s]", v.id, v.name.c_str(),
                  v.pass ? "PASS" : "FAIL", v.detail.c_str(), v.seconds, v.limit);
    std::cout << buf << std::endl;
    lines_ << buf << '\n';
    failures_ += v.pass ? 0 : 1;
    std::ofstream(path_) << lines_.str();
  }

  void note(const std::string& s) {
    std::cout << "  " << s << std::endl;
    lines_ << "  " << s << '\n';
    std::ofstream(path_) << lines_.str();
  }

  int failures() const { return failures_; }

 private:
  fs::path path_;
  std::ostringstream lines_;
  int failures_ = 0;
};

bool same_bits(float a, float b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::vector<std::uint8_t> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

constexpr ArtifactKind kKinds[] = {ArtifactKind::opaque_mask, ArtifactKind::fold_darken, ArtifactKind::bubble_brighten,
                                   ArtifactKind::blur_region};

ArtifactResult artifact_case(const Image& clean, int i, std::uint64_t seed) {
  return synthesize_artifact(clean, random_artifact_spec(kKinds[i % 4], clean.height, clean.width,
                                                         derive_seed(seed, static_cast<std::uint64_t>(i))));
}

void schedule_oracles(Report& report) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(derive_seed(kSeed, 2));
  std::uniform_int_distribution<int> steps_dist(1, 1000);
  std::uniform_real_distribution<double> beta_dist(1e-5, 0.05);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  double worst_forward = 0.0;
  double worst_posterior = 0.0;
  double worst_inversion = 0.0;
  const int cases = 1000;
  for (int i = 0; i < cases; ++i) {
    const int steps = steps_dist(rng);
    double a = beta_dist(rng);
    double b = beta_dist(rng);
    if (a > b) std::swap(a, b);
    const Schedule s = build_schedule(steps, a, b);
    const int t = std::uniform_int_distribution<int>(0, steps - 1)(rng);
    const Tensor z0({1, 1, 1}, normal(rng));
    const Tensor n({1, 1, 1}, normal(rng));
    const Tensor eps({1, 1, 1}, normal(rng));
    const Tensor sn({1, 1, 1}, normal(rng));
    const double ab = oracle::alpha_bar(steps, a, b, t);
    const double bt = oracle::beta(steps, a, b, t);
    worst_forward = std::max(worst_forward, std::abs(forward_diffuse(z0, t, n, s)[0] -
                                                     oracle::forward_diffuse(z0[0], n[0], ab)));
    const Tensor* noise = t > 0 ? &sn : nullptr;
    worst_posterior =
        std::max(worst_posterior, std::abs(posterior_step(z0, eps, t, s, noise)[0] -
                                           oracle::posterior_step(z0[0], eps[0], t > 0 ? sn[0] : 0.0, bt, ab)));
    const Tensor back = posterior_step(forward_diffuse(z0, 0, n, s), n, 0, s, nullptr);
    worst_inversion = std::max(worst_inversion, static_cast<double>(std::abs(back[0] - z0[0])));
  }
  const bool pass = worst_forward <= 1e-6 && worst_posterior <= 1e-6 && worst_inversion <= 1e-6;
  report.add({2, "schedule oracles", pass,
              std::to_string(cases) + " cases, max |err| forward " + fmt("%.2e", worst_forward) + ", posterior " +
                  fmt("%.2e", worst_posterior) + ", t=0 inversion " + fmt("%.2e", worst_inversion) + " (tol 1e-6)",
              since(t0), 60});
}

void metric_oracles(Report& report) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(derive_seed(kSeed, 6));
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  double worst = 0.0;
  const int pairs = 6;
  for (int k = 0; k < pairs; ++k) {
    Image a(32, 32);
    Image b(32, 32);
    // partly correlated pairs so every metric sits away from its extremes
    const float mix = 0.2f + 0.15f * k;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
      a.pixels[i] = u(rng);
      b.pixels[i] = (1.0f - mix) * a.pixels[i] + mix * u(rng);
    }
    PixelMask pm(32, 32);
    for (auto& v : pm.artifact) v = u(rng) < 0.25f ? 1 : 0;
    pm.set(0, 0, true);
    worst = std::max({worst, std::abs(l2_whole(a, b) - oracle::l2_whole(a, b)),
                      std::abs(mse_region(a, b, pm) - oracle::mse_region(a, b, pm)),
                      std::abs(ssim(a, b) - oracle::ssim(a, b)), std::abs(psnr(a, b) - oracle::psnr(a, b)),
                      std::abs(fsim(a, b) - oracle::fsim(a, b))});
  }
  Image x(32, 32);
  for (float& v : x.pixels) v = u(rng);
  PixelMask pm(32, 32);
  pm.set(5, 5, true);
  const MetricReport id = compute_metrics(x, x, pm);
  const bool identity = std::abs(id.ssim - 1.0) < 1e-12 && id.psnr == psnr_cap_db && std::abs(id.fsim - 1.0) < 1e-12 &&
                        id.l2_whole == 0.0 && id.mse_region == 0.0;
  char idbuf[160];
  std::snprintf(idbuf, sizeof idbuf, "identity (ssim, psnr, fsim, l2, mse_region) = (%.6f, %.0f, %.6f, %g, %g)", id.ssim,
                id.psnr, id.fsim, id.l2_whole, id.mse_region);
  report.add({6, "metric oracles", worst <= 1e-6 && identity,
              std::to_string(pairs) + " random 32x32 pairs, max |err| " + fmt("%.2e", worst) + " (tol 1e-6); " + idbuf,
              since(t0), 60});
}

struct Trained {
  VaeModel vae;
  DenoiserModel denoiser;
  std::vector<Image> train;
  std::vector<Image> held_out;
};

Trained training(Report& report, const Schedule& s) {
  const auto t0 = Clock::now();
  Trained out;
  auto tiles = generate_synthetic_histology(kTiles, kTileSize, kSeed);
  out.train.assign(tiles.begin(), tiles.end() - kHeldOut);
  out.held_out.assign(tiles.end() - kHeldOut, tiles.end());

  VaeTrainConfig vc;
  vc.model = {4, 4, 32, kSeed};
  vc.epochs = 20;
  vc.batch = 16;
  vc.lr = 1e-3f;
  vc.kl_weight = 1e-6f;
  vc.seed = derive_seed(kSeed, 1);
  const double init_mse = reconstruction_mse(VaeModel(vc.model), out.held_out);
  TrainingLog vlog;
  vlog.on_epoch = [](const EpochLog& e) {
    std::cout << "  vae epoch " << e.epoch << " loss " << fmt("%.6f", e.mean_loss) << std::endl;
  };
  out.vae = train_vae(out.train, vc, &vlog);
  const double mse = reconstruction_mse(out.vae, out.held_out);
  const double mae = reconstruction_mae(out.vae, out.held_out);

  DenoiserTrainConfig dc;
  dc.model = {4, 32, 64, kSeed};
  dc.epochs = 30;
  dc.batch = 16;
  dc.lr = 1e-3f;
  dc.seed = derive_seed(kSeed, 2);
  const auto held_latents = encode_all(out.vae, out.held_out);
  const std::uint64_t loss_seed = derive_seed(kSeed, 3);
  const double init_loss = simplified_loss(DenoiserModel(dc.model), held_latents, s, loss_seed);
  TrainingLog dlog;
  dlog.on_epoch = [](const EpochLog& e) {
    std::cout << "  denoiser epoch " << e.epoch << " loss " << fmt("%.6f", e.mean_loss) << std::endl;
  };
  out.denoiser = train_denoiser(out.vae, out.train, s, dc, &dlog);
  const double loss = simplified_loss(out.denoiser, held_latents, s, loss_seed);

  const double ratio = init_mse / mse;
  report.add({3, "training", ratio >= 5.0 && loss < 0.9,
              "VAE held-out recon MSE " + fmt("%.3e", init_mse) + " -> " + fmt("%.3e", mse) + " (" + fmt("%.1f", ratio) +
                  "x, need >= 5x), mean abs error " + fmt("%.4f", mae) + "; denoiser held-out loss " +
                  fmt("%.4f", init_loss) + " -> " + fmt("%.4f", loss) + " (need < 0.9)",
              since(t0), 1800});
  return out;
}

void preservation(Report& report, const Trained& m, const Schedule& s) {
  const auto t0 = Clock::now();
  const int triples = 100;
  const auto images = generate_synthetic_histology(triples, kTileSize, derive_seed(kSeed, 10));
  std::mt19937_64 rng(derive_seed(kSeed, 11));
  int keep_ok = 0;
  int roundtrip_ok = 0;
  long keep_cells = 0;
  for (int i = 0; i < triples; ++i) {
    // alternate artifact-shaped masks and scattered random masks
    PixelMask pm;
    if (i % 2 == 0) {
      pm = artifact_case(images[i], i, rng()).mask;
    } else {
      pm = PixelMask(kTileSize, kTileSize);
      const double density = std::uniform_real_distribution<double>(0.001, 0.02)(rng);
      for (auto& v : pm.artifact) v = std::bernoulli_distribution(density)(rng) ? 1 : 0;
    }
    const std::uint64_t seed = rng();
    const LatentTensor z0 = encode(m.vae, images[i]);
    const LatentMask lm = encode_mask(pm, m.vae.downsample());
    const LatentTensor r = regional_denoise(z0, lm, m.denoiser, s, seed);
    bool ok = true;
    const int c = z0.dim(0);
    const int h = z0.dim(1);
    const int w = z0.dim(2);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!lm.keeps(y, x)) continue;
        ++keep_cells;
        for (int k = 0; k < c; ++k) {
          const std::size_t idx = (static_cast<std::size_t>(k) * h + y) * w + x;
          ok = ok && same_bits(r[idx], z0[idx]);
        }
      }
    }
    keep_ok += ok ? 1 : 0;
    const Image empty = restore(images[i], PixelMask(kTileSize, kTileSize), m.vae, m.denoiser, s, seed);
    roundtrip_ok += empty == decode(m.vae, z0) ? 1 : 0;
  }
  report.add({1, "preservation", keep_ok == triples && roundtrip_ok == triples,
              std::to_string(keep_ok) + "/" + std::to_string(triples) + " triples with bitwise keep cells (" +
                  std::to_string(keep_cells) + " cells), " + std::to_string(roundtrip_ok) + "/" +
                  std::to_string(triples) + " empty-mask restores equal to the autoencoder round trip",
              since(t0), 120});
}

void restoration_quality(Report& report, const Trained& m, const Schedule& s, const fs::path& out) {
  const auto t0 = Clock::now();
  const int n = 50;
  const auto clean = generate_synthetic_histology(n, kTileSize, derive_seed(kSeed, 7));
  int both = 0;
  int ssim_better = 0;
  int mse_better = 0;
  int per_kind_pass[4] = {0, 0, 0, 0};
  int per_kind_total[4] = {0, 0, 0, 0};
  double ssim_art = 0.0;
  double ssim_res = 0.0;
  double roundtrip_ssim = 0.0;
  std::ofstream csv(out / "restoration.csv");
  csv << "tile,kind,ssim_artifact,ssim_restored,mse_region_artifact,mse_region_restored\n";
  for (int i = 0; i < n; ++i) {
    const ArtifactResult a = artifact_case(clean[i], i, kSeed);
    const Image r = restore(a.image, a.mask, m.vae, m.denoiser, s, derive_seed(kSeed, 100 + i));
    const double sa = ssim(a.image, clean[i]);
    const double sr = ssim(r, clean[i]);
    const double ma = mse_region(a.image, clean[i], a.mask);
    const double mr = mse_region(r, clean[i], a.mask);
    roundtrip_ssim += ssim(decode(m.vae, encode(m.vae, clean[i])), clean[i]);
    ssim_art += sa;
    ssim_res += sr;
    ssim_better += sr > sa ? 1 : 0;
    mse_better += mr < ma ? 1 : 0;
    const bool ok = sr > sa && mr < ma;
    both += ok ? 1 : 0;
    per_kind_total[i % 4] += 1;
    per_kind_pass[i % 4] += ok ? 1 : 0;
    csv << i << ',' << to_string(kKinds[i % 4]) << ',' << sa << ',' << sr << ',' << ma << ',' << mr << '\n';
  }
  const int need = (9 * n + 9) / 10;
  std::string kinds;
  for (int k = 0; k < 4; ++k) {
    kinds += (k ? ", " : "") + to_string(kKinds[k]) + " " + std::to_string(per_kind_pass[k]) + "/" +
             std::to_string(per_kind_total[k]);
  }
  report.add({4, "restoration quality", both >= need,
              std::to_string(both) + "/" + std::to_string(n) + " tiles improve both SSIM and mse_region (need >= " +
                  std::to_string(need) + "); SSIM alone " + std::to_string(ssim_better) + ", mse_region alone " +
                  std::to_string(mse_better),
              since(t0), 600});
  report.note("per kind: " + kinds);
  report.note("mean SSIM artifact " + fmt("%.4f", ssim_art / n) + ", restored " + fmt("%.4f", ssim_res / n) +
              ", autoencoder round trip of the clean tile " + fmt("%.4f", roundtrip_ssim / n));
}

void speedup(Report& report, const Trained& m, const Schedule& latent_s, const fs::path& out) {
  const auto t0 = Clock::now();
  const Schedule pixel_s = build_scaled_schedule(250, 1e-4, 0.02);
  // the pixel model only has to be a real, trained network of the same width
  DenoiserTrainConfig pc;
  pc.model = {3, 32, 64, derive_seed(kSeed, 4)};
  pc.epochs = 1;
  pc.batch = 16;
  pc.lr = 1e-3f;
  pc.seed = derive_seed(kSeed, 5);
  const std::vector<Image> subset(m.train.begin(), m.train.begin() + 160);
  const PixelDenoiserModel pixel = train_pixel_denoiser(subset, pixel_s, pc);

  const int images = 10;
  const auto clean = generate_synthetic_histology(images, kTileSize, derive_seed(kSeed, 8));
  std::vector<BenchCase> cases;
  for (int i = 0; i < images; ++i) {
    ArtifactResult a = artifact_case(clean[i], i, kSeed);
    cases.push_back({std::move(a.image), std::move(a.mask)});
  }
  RunConfig cfg;
  cfg.seed = kSeed;
  const BenchReport r =
      benchmark_restore(cases, m.vae, m.denoiser, latent_s, pixel, pixel_s, kSeed, fingerprint(cfg));
  std::ofstream(out / "bench.csv") << bench_csv(r);
  std::ofstream(out / "bench.txt") << bench_table(r);
  report.add({5, "speedup", r.speedup >= 10.0 && r.latent.steps == 50 && r.pixel.steps == 250,
              "latent T=" + std::to_string(r.latent.steps) + " f=" + std::to_string(r.latent.downsample) + " " +
                  fmt("%.4f", r.latent.mean) + " s/image vs pixel T=" + std::to_string(r.pixel.steps) + " f=" +
                  std::to_string(r.pixel.downsample) + " " + fmt("%.3f", r.pixel.mean) + " s/image over " +
                  std::to_string(images) + " " + std::to_string(kTileSize) + "x" + std::to_string(kTileSize) +
                  " tiles: speedup " + fmt("%.1f", r.speedup) + "x (need >= 10x), written to bench.csv",
              since(t0), 900});
}

void determinism(Report& report, const Trained& m, const Schedule& s, const fs::path& out) {
  const auto t0 = Clock::now();
  save_weights(m.vae, out / "vae.ltaf");
  save_weights(m.denoiser, out / "denoiser.ltaf");
  const VaeModel vae = load_vae(out / "vae.ltaf");
  const DenoiserModel dn = load_denoiser(out / "denoiser.ltaf");
  save_weights(vae, out / "vae_resaved.ltaf");
  save_weights(dn, out / "denoiser_resaved.ltaf");
  const bool weights = vae.checksum() == m.vae.checksum() && dn.checksum() == m.denoiser.checksum() &&
                       file_bytes(out / "vae.ltaf") == file_bytes(out / "vae_resaved.ltaf") &&
                       file_bytes(out / "denoiser.ltaf") == file_bytes(out / "denoiser_resaved.ltaf");

  const Image clean = generate_synthetic_histology(1, kTileSize, derive_seed(kSeed, 9))[0];
  const ArtifactResult a = artifact_case(clean, 0, derive_seed(kSeed, 9));
  // two independent runs: each loads its own models from disk
  for (int run = 0; run < 2; ++run) {
    const VaeModel v = load_vae(out / "vae.ltaf");
    const DenoiserModel d = load_denoiser(out / "denoiser.ltaf");
    save_png(restore(a.image, a.mask, v, d, s, 1234), out / ("restored_run" + std::to_string(run) + ".png"));
  }
  const auto first = file_bytes(out / "restored_run0.png");
  const bool outputs = !first.empty() && first == file_bytes(out / "restored_run1.png");
  report.add({7, "determinism", weights && outputs,
              std::string("weight save/load ") + (weights ? "bitwise exact" : "MISMATCH") +
                  ", fixed-seed restore PNGs " + (outputs ? "byte-identical" : "DIFFER") + " across two runs",
              since(t0), 60});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance run"};
  std::string out_dir = "acceptance_out";
  app.add_option("--out", out_dir, "directory for reports and artifacts");
  CLI11_PARSE(app, argc, argv);
  const fs::path out(out_dir);
  fs::create_directories(out);

  Report report(out / "acceptance.txt");
  const Schedule s = build_scaled_schedule(50, 1e-4, 0.02);
  try {
    schedule_oracles(report);
    metric_oracles(report);
    const Trained m = training(report, s);
    preservation(report, m, s);
    restoration_quality(report, m, s, out);
    speedup(report, m, s, out);
    determinism(report, m, s, out);
  } catch (const std::exception& e) {
    std::cerr << "acceptance run aborted: " << e.what() << '\n';
    return 2;
  }
  std::cout << (report.failures() ? std::to_string(report.failures()) + " criterion(s) failed" : "all criteria passed")
            << std::endl;
  return report.failures() ? 1 : 0;
}
