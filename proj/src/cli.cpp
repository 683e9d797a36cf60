#include "ltaf/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>

#include "ltaf/artifacts.hpp"
#include "ltaf/bench.hpp"
#include "ltaf/denoiser.hpp"
#include "ltaf/errors.hpp"
#include "ltaf/io.hpp"
#include "ltaf/metrics.hpp"
#include "ltaf/pixelspace.hpp"
#include "ltaf/random.hpp"
#include "ltaf/regional.hpp"
#include "ltaf/vae.hpp"

namespace ltaf {
namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string space = "latent";
  std::string out = "ltaf_out";
};

struct Context {
  RunConfig cfg;
  std::uint64_t seed = 0;
  fs::path out;
  bool pixel = false;
  std::ostream& log;
};

std::uint64_t resolve_seed(const Options& o, const RunConfig& cfg) {
  if (o.seed) return *o.seed;
  if (cfg.seed) return *cfg.seed;
  if (const char* env = std::getenv("LTAF_SEED"); env && *env) {
    std::uint64_t v = 0;
    const char* end = env + std::char_traits<char>::length(env);
    auto [ptr, ec] = std::from_chars(env, end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError(std::string("LTAF_SEED is not an unsigned integer: ") + env);
    return v;
  }
  return 0;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

const fs::path& require_path(const std::optional<fs::path>& p, const char* key) {
  if (!p) throw ConfigError(std::string("config key '") + key + "' is required for this command");
  return *p;
}

Schedule latent_schedule(const RunConfig& c) { return build_scaled_schedule(c.steps, c.beta_start, c.beta_end); }
Schedule pixel_schedule(const RunConfig& c) { return build_scaled_schedule(c.pixel_steps, c.beta_start, c.beta_end); }

std::vector<Image> training_images(const Context& ctx) {
  if (ctx.cfg.data_dir) {
    ImageSet set = load_image_dir(*ctx.cfg.data_dir, false);
    for (const auto& reason : set.skipped) ctx.log << "warning: skipped " << reason << '\n';
    return std::move(set.images);
  }
  return generate_synthetic_histology(ctx.cfg.tiles, ctx.cfg.tile_size, ctx.seed);
}

TrainingLog epoch_logger(const Context& ctx, int total) {
  TrainingLog log;
  log.on_epoch = [&ctx, total](const EpochLog& e) {
    ctx.log << "epoch " << e.epoch << "/" << total << " loss " << num(e.mean_loss) << '\n';
  };
  return log;
}

void write_loss_csv(const fs::path& path, const TrainingLog& log) {
  std::ofstream o(path);
  o << "epoch,mean_loss\n";
  for (const auto& e : log.epochs) o << e.epoch << ',' << num(e.mean_loss) << '\n';
}

std::string tile_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "tile_%04zu.png", i);
  return buf;
}

constexpr ArtifactKind kKinds[] = {ArtifactKind::opaque_mask, ArtifactKind::fold_darken, ArtifactKind::bubble_brighten,
                                   ArtifactKind::blur_region};

int gen_data(Context& ctx, std::ostream& out) {
  const auto tiles = generate_synthetic_histology(ctx.cfg.tiles, ctx.cfg.tile_size, ctx.seed);
  for (std::size_t i = 0; i < tiles.size(); ++i) save_png(tiles[i], ctx.out / tile_name(i));
  out << "gen-data: wrote " << tiles.size() << " " << ctx.cfg.tile_size << "x" << ctx.cfg.tile_size << " tiles to "
      << ctx.out.string() << '\n';
  return 0;
}

int synth(Context& ctx, std::ostream& out) {
  std::vector<Image> clean;
  std::vector<std::string> names;
  if (ctx.cfg.data_dir) {
    ImageSet set = load_image_dir(*ctx.cfg.data_dir, false);
    for (const auto& reason : set.skipped) ctx.log << "warning: skipped " << reason << '\n';
    for (const auto& p : set.paths) names.push_back(p.stem().string() + ".png");
    clean = std::move(set.images);
  } else {
    // a stream distinct from the training tiles of the same seed
    clean = generate_synthetic_histology(ctx.cfg.tiles, ctx.cfg.tile_size, derive_seed(ctx.seed, 7));
    for (std::size_t i = 0; i < clean.size(); ++i) names.push_back(tile_name(i));
  }
  for (const char* sub : {"clean", "artifact", "mask"}) fs::create_directories(ctx.out / sub);
  std::vector<ManifestEntry> manifest;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const ArtifactSpec spec =
        random_artifact_spec(kKinds[i % 4], clean[i].height, clean[i].width, derive_seed(ctx.seed, i));
    const ArtifactResult r = synthesize_artifact(clean[i], spec);
    save_png(clean[i], ctx.out / "clean" / names[i]);
    save_png(r.image, ctx.out / "artifact" / names[i]);
    save_mask_png(r.mask, ctx.out / "mask" / names[i]);
    manifest.push_back({fs::path("clean") / names[i], fs::path("artifact") / names[i], fs::path("mask") / names[i]});
  }
  save_manifest(ctx.out / "manifest.txt", manifest);
  out << "synth: wrote " << manifest.size() << " artifact triples and " << (ctx.out / "manifest.txt").string() << '\n';
  return 0;
}

int train_vae_cmd(Context& ctx, std::ostream& out) {
  const auto images = training_images(ctx);
  VaeTrainConfig tc;
  tc.model = {ctx.cfg.downsample, ctx.cfg.latent_channels, ctx.cfg.vae_width, ctx.seed};
  tc.epochs = ctx.cfg.vae_epochs;
  tc.batch = ctx.cfg.batch;
  tc.lr = static_cast<float>(ctx.cfg.lr);
  tc.kl_weight = static_cast<float>(ctx.cfg.kl_weight);
  tc.seed = derive_seed(ctx.seed, 1);
  TrainingLog log = epoch_logger(ctx, tc.epochs);
  const VaeModel m = train_vae(images, tc, &log);
  save_weights(m, ctx.out / "vae.ltaf");
  write_loss_csv(ctx.out / "vae_loss.csv", log);
  out << "train-vae: " << images.size() << " images, " << tc.epochs << " epochs, reconstruction mse "
      << num(reconstruction_mse(m, images)) << ", wrote " << (ctx.out / "vae.ltaf").string() << '\n';
  return 0;
}

int train_denoiser_cmd(Context& ctx, std::ostream& out) {
  const auto images = training_images(ctx);
  DenoiserTrainConfig tc;
  tc.model = {ctx.cfg.latent_channels, ctx.cfg.denoiser_width, ctx.cfg.time_dim, ctx.seed};
  tc.batch = ctx.cfg.batch;
  tc.lr = static_cast<float>(ctx.cfg.lr);
  tc.seed = derive_seed(ctx.seed, 2);
  if (ctx.pixel) {
    tc.epochs = ctx.cfg.pixel_epochs;
    TrainingLog log = epoch_logger(ctx, tc.epochs);
    const DenoiserModel m = train_pixel_denoiser(images, pixel_schedule(ctx.cfg), tc, &log);
    save_weights(m, ctx.out / "pixel_denoiser.ltaf");
    write_loss_csv(ctx.out / "pixel_denoiser_loss.csv", log);
    out << "train-denoiser: pixel space, T=" << ctx.cfg.pixel_steps << ", " << tc.epochs << " epochs, wrote "
        << (ctx.out / "pixel_denoiser.ltaf").string() << '\n';
    return 0;
  }
  const VaeModel vae = load_vae(require_path(ctx.cfg.vae_weights, "vae_weights"));
  tc.model.channels = vae.latent_channels();
  tc.epochs = ctx.cfg.denoiser_epochs;
  TrainingLog log = epoch_logger(ctx, tc.epochs);
  const DenoiserModel m = train_denoiser(vae, images, latent_schedule(ctx.cfg), tc, &log);
  save_weights(m, ctx.out / "denoiser.ltaf");
  write_loss_csv(ctx.out / "denoiser_loss.csv", log);
  out << "train-denoiser: latent space, T=" << ctx.cfg.steps << ", " << tc.epochs << " epochs, final loss "
      << (log.epochs.empty() ? std::string("n/a") : num(log.epochs.back().mean_loss)) << ", wrote "
      << (ctx.out / "denoiser.ltaf").string() << '\n';
  return 0;
}

int restore_cmd(Context& ctx, std::ostream& out) {
  const auto entries = load_manifest(require_path(ctx.cfg.manifest, "manifest"));
  VaeModel vae;
  DenoiserModel model;
  if (ctx.pixel) {
    model = load_denoiser(require_path(ctx.cfg.pixel_weights, "pixel_weights"));
  } else {
    vae = load_vae(require_path(ctx.cfg.vae_weights, "vae_weights"));
    model = load_denoiser(require_path(ctx.cfg.denoiser_weights, "denoiser_weights"));
  }
  const Schedule s = ctx.pixel ? pixel_schedule(ctx.cfg) : latent_schedule(ctx.cfg);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Image x = load_png(entries[i].artifact);
    const PixelMask pm = load_mask_png(entries[i].mask);
    const std::uint64_t seed = derive_seed(ctx.seed, i);
    const Image r = ctx.pixel ? pixel_restore(x, pm, model, s, seed) : restore(x, pm, vae, model, s, seed);
    save_png(r, ctx.out / entries[i].artifact.filename());
  }
  out << "restore: " << (ctx.pixel ? "pixel" : "latent") << " space, T=" << s.steps() << ", restored "
      << entries.size() << " images into " << ctx.out.string() << '\n';
  return 0;
}

int evaluate_cmd(Context& ctx, std::ostream& out) {
  const auto entries = load_manifest(require_path(ctx.cfg.manifest, "manifest"));
  std::ofstream csv(ctx.out / "metrics.csv");
  if (!csv) throw std::runtime_error("cannot write " + (ctx.out / "metrics.csv").string());
  csv << "image,l2_whole,mse_region,ssim,psnr,fsim\n";
  MetricReport sum{0.0, 0.0, 0.0, 0.0, 0.0};
  for (const auto& e : entries) {
    const fs::path result = ctx.cfg.restored_dir ? *ctx.cfg.restored_dir / e.artifact.filename() : e.artifact;
    const MetricReport m = compute_metrics(load_png(result), load_png(e.clean), load_mask_png(e.mask));
    csv << result.filename().string() << ',' << num(m.l2_whole) << ',' << num(m.mse_region) << ',' << num(m.ssim)
        << ',' << num(m.psnr) << ',' << num(m.fsim) << '\n';
    sum.l2_whole += m.l2_whole;
    sum.mse_region += m.mse_region;
    sum.ssim += m.ssim;
    sum.psnr += m.psnr;
    sum.fsim += m.fsim;
  }
  const double n = static_cast<double>(entries.size());
  csv << "mean," << num(sum.l2_whole / n) << ',' << num(sum.mse_region / n) << ',' << num(sum.ssim / n) << ','
      << num(sum.psnr / n) << ',' << num(sum.fsim / n) << '\n';
  out << "evaluate: " << entries.size() << " images, mean ssim " << num(sum.ssim / n) << ", psnr "
      << num(sum.psnr / n) << " dB, fsim " << num(sum.fsim / n) << ", mse_region " << num(sum.mse_region / n)
      << ", wrote " << (ctx.out / "metrics.csv").string() << '\n';
  return 0;
}

int bench_cmd(Context& ctx, std::ostream& out) {
  const VaeModel vae = load_vae(require_path(ctx.cfg.vae_weights, "vae_weights"));
  const DenoiserModel latent = load_denoiser(require_path(ctx.cfg.denoiser_weights, "denoiser_weights"));
  const DenoiserModel pixel = load_denoiser(require_path(ctx.cfg.pixel_weights, "pixel_weights"));
  std::vector<BenchCase> cases;
  if (ctx.cfg.manifest) {
    const auto entries = load_manifest(*ctx.cfg.manifest);
    for (std::size_t i = 0; i < entries.size() && static_cast<int>(i) < ctx.cfg.bench_images; ++i) {
      cases.push_back({load_png(entries[i].artifact), load_mask_png(entries[i].mask)});
    }
  } else {
    const auto tiles =
        generate_synthetic_histology(ctx.cfg.bench_images, ctx.cfg.tile_size, derive_seed(ctx.seed, 8));
    for (std::size_t i = 0; i < tiles.size(); ++i) {
      const auto spec =
          random_artifact_spec(kKinds[i % 4], tiles[i].height, tiles[i].width, derive_seed(ctx.seed, i));
      ArtifactResult r = synthesize_artifact(tiles[i], spec);
      cases.push_back({std::move(r.image), std::move(r.mask)});
    }
  }
  const BenchReport r = benchmark_restore(cases, vae, latent, latent_schedule(ctx.cfg), pixel,
                                          pixel_schedule(ctx.cfg), ctx.seed, fingerprint(ctx.cfg));
  std::ofstream(ctx.out / "bench.csv") << bench_csv(r);
  std::ofstream(ctx.out / "bench.txt") << bench_table(r);
  out << bench_table(r);
  out << "bench: latent T=" << r.latent.steps << " vs pixel T=" << r.pixel.steps << ", speedup " << num(r.speedup)
      << "x, wrote " << (ctx.out / "bench.csv").string() << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent-space regional diffusion restoration of image artifacts", "ltaf"};
  app.fallthrough();
  app.require_subcommand(1, 1);
  Options opt;
  app.add_option("--config", opt.config, "key=value run configuration file");
  app.add_option("--seed", opt.seed, "random seed (falls back to the config, then LTAF_SEED)");
  app.add_option("--space", opt.space, "restoration space")->check(CLI::IsMember({"latent", "pixel"}));
  app.add_option("--out", opt.out, "output directory");

  using Command = int (*)(Context&, std::ostream&);
  const std::vector<std::tuple<const char*, const char*, Command>> commands = {
      {"gen-data", "write synthetic H&E-like tiles", gen_data},
      {"synth", "inject synthetic artifacts and write a manifest", synth},
      {"train-vae", "train the autoencoder", train_vae_cmd},
      {"train-denoiser", "train the noise predictor (latent or pixel space)", train_denoiser_cmd},
      {"restore", "restore the artifact images listed in the manifest", restore_cmd},
      {"evaluate", "compute quality metrics against clean images", evaluate_cmd},
      {"bench", "time latent against pixel-space restoration", bench_cmd},
  };
  Command selected = nullptr;
  for (const auto& [name, help, fn] : commands) {
    app.add_subcommand(name, help)->callback([&selected, fn = fn] { selected = fn; });
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    app.clear();  // top-level usage rather than the partially parsed subcommand's
    err << "ltaf: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    RunConfig cfg = opt.config.empty() ? parse_run_config("", fs::current_path()) : load_run_config(opt.config);
    Context ctx{std::move(cfg), 0, opt.out, opt.space == "pixel", err};
    ctx.seed = resolve_seed(opt, ctx.cfg);
    fs::create_directories(ctx.out);
    return selected(ctx, out);
  } catch (const std::exception& e) {
    err << "ltaf: error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace ltaf
