#include "ltaf/metrics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "ltaf/errors.hpp"

namespace ltaf {
namespace {

void require_same(const Image& a, const Image& b, const char* what) {
  if (!a.same_size(b)) {
    throw ShapeError(std::string(what) + ": images are " + std::to_string(a.height) + "x" + std::to_string(a.width) +
                     " and " + std::to_string(b.height) + "x" + std::to_string(b.width));
  }
}

double q(float v) { return std::round(static_cast<double>(std::clamp(v, 0.0f, 1.0f)) * 255.0); }

double sum_squared(const Image& a, const Image& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = q(a.pixels[i]) - q(b.pixels[i]);
    s += d * d;
  }
  return s;
}

}  // namespace

double l2_whole(const Image& a, const Image& b) {
  require_same(a, b, "l2_whole");
  return sum_squared(a, b);
}

double mse_region(const Image& a, const Image& b, const PixelMask& pm) {
  require_same(a, b, "mse_region");
  if (pm.height != a.height || pm.width != a.width) throw ShapeError("mse_region: mask size differs from the images");
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < a.pixel_count(); ++p) {
    if (!pm.artifact[p]) continue;
    for (int c = 0; c < 3; ++c) {
      const double d = q(a.pixels[p * 3 + c]) - q(b.pixels[p * 3 + c]);
      s += d * d;
    }
    n += 3;
  }
  if (n == 0) throw DomainError("mse_region: the mask marks no pixels");
  return s / static_cast<double>(n);
}

double psnr(const Image& a, const Image& b) {
  require_same(a, b, "psnr");
  const double mse = sum_squared(a, b) / static_cast<double>(a.pixels.size());
  if (mse == 0.0) return psnr_cap_db;
  return std::min(psnr_cap_db, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double ssim(const Image& a, const Image& b) {
  require_same(a, b, "ssim");
  constexpr int win = 11;
  constexpr int r = win / 2;
  if (a.height < win || a.width < win) throw DomainError("ssim needs images of at least 11x11 pixels");
  double g[win];
  double gs = 0.0;
  for (int i = 0; i < win; ++i) {
    g[i] = std::exp(-0.5 * (i - r) * (i - r) / (1.5 * 1.5));
    gs += g[i];
  }
  for (double& v : g) v /= gs;
  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);

  const int h = a.height;
  const int w = a.width;
  const int oh = h - win + 1;
  const int ow = w - win + 1;
  // five moment images filtered separably: x, y, x^2, y^2, xy
  std::vector<double> src(5 * static_cast<std::size_t>(h) * w);
  std::vector<double> rows(5 * static_cast<std::size_t>(h) * ow);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t rplane = static_cast<std::size_t>(h) * ow;
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    for (std::size_t p = 0; p < plane; ++p) {
      const double x = q(a.pixels[p * 3 + c]);
      const double y = q(b.pixels[p * 3 + c]);
      src[p] = x;
      src[plane + p] = y;
      src[2 * plane + p] = x * x;
      src[3 * plane + p] = y * y;
      src[4 * plane + p] = x * y;
    }
    for (int k = 0; k < 5; ++k) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
          double acc = 0.0;
          for (int i = 0; i < win; ++i) acc += g[i] * src[k * plane + static_cast<std::size_t>(y) * w + x + i];
          rows[k * rplane + static_cast<std::size_t>(y) * ow + x] = acc;
        }
      }
    }
    double sum = 0.0;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        double m[5];
        for (int k = 0; k < 5; ++k) {
          double acc = 0.0;
          for (int i = 0; i < win; ++i) acc += g[i] * rows[k * rplane + static_cast<std::size_t>(y + i) * ow + x];
          m[k] = acc;
        }
        const double mx = m[0];
        const double my = m[1];
        const double vx = m[2] - mx * mx;
        const double vy = m[3] - my * my;
        const double cov = m[4] - mx * my;
        sum += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      }
    }
    total += sum / (static_cast<double>(oh) * ow);
  }
  return total / 3.0;
}

std::vector<double> luminance(const Image& img) {
  std::vector<double> y(img.pixel_count());
  for (std::size_t p = 0; p < y.size(); ++p) {
    y[p] = 0.299 * q(img.pixels[p * 3]) + 0.587 * q(img.pixels[p * 3 + 1]) + 0.114 * q(img.pixels[p * 3 + 2]);
  }
  return y;
}

namespace {

using cd = std::complex<double>;

class Fft2 {
 public:
  Fft2(int rows, int cols) : n_(static_cast<std::size_t>(rows) * cols) {
    in_ = fftw_alloc_complex(n_);
    out_ = fftw_alloc_complex(n_);
    fwd_ = fftw_plan_dft_2d(rows, cols, in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_2d(rows, cols, in_, out_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft2() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(in_);
    fftw_free(out_);
  }
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;

  std::vector<cd> forward(const std::vector<cd>& x) { return run(fwd_, x, 1.0); }
  // Normalized inverse (divides by the element count).
  std::vector<cd> inverse(const std::vector<cd>& x) { return run(inv_, x, 1.0 / static_cast<double>(n_)); }

 private:
  std::vector<cd> run(fftw_plan plan, const std::vector<cd>& x, double scale) {
    for (std::size_t i = 0; i < n_; ++i) {
      in_[i][0] = x[i].real();
      in_[i][1] = x[i].imag();
    }
    fftw_execute(plan);
    std::vector<cd> y(n_);
    for (std::size_t i = 0; i < n_; ++i) y[i] = cd(out_[i][0], out_[i][1]) * scale;
    return y;
  }

  std::size_t n_;
  fftw_complex* in_;
  fftw_complex* out_;
  fftw_plan fwd_;
  fftw_plan inv_;
};

// Normalized frequency of FFT index i along an axis of length n, matching a
// centred [-0.5, 0.5) grid moved to the corner.
double axis_frequency(int i, int n) {
  const int k = i < (n + 1) / 2 ? i : i - n;
  return n % 2 == 0 ? static_cast<double>(k) / n : static_cast<double>(k) / (n - 1);
}

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// 'same'-size correlation with zero padding; even kernels extend one row
// and column further forward than backward.
std::vector<double> filter_same(const std::vector<double>& img, int h, int w, const double* k, int kh, int kw) {
  std::vector<double> out(img.size(), 0.0);
  const int oy = (kh - 1) / 2;
  const int ox = (kw - 1) / 2;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kh; ++i) {
        const int yy = y + i - oy;
        if (yy < 0 || yy >= h) continue;
        for (int j = 0; j < kw; ++j) {
          const int xx = x + j - ox;
          if (xx < 0 || xx >= w) continue;
          acc += k[i * kw + j] * img[static_cast<std::size_t>(yy) * w + xx];
        }
      }
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  return out;
}

}  // namespace

std::vector<double> phase_congruency(const std::vector<double>& gray, int rows, int cols) {
  constexpr int nscale = 4;
  constexpr int norient = 4;
  constexpr double min_wavelength = 6.0;
  constexpr double mult = 2.0;
  constexpr double sigma_on_f = 0.55;
  constexpr double d_theta_on_sigma = 1.2;
  constexpr double k = 2.0;
  constexpr double epsilon = 1e-4;
  const double theta_sigma = std::numbers::pi / norient / d_theta_on_sigma;
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  if (gray.size() != n) throw ShapeError("phase_congruency: buffer size does not match the extents");

  Fft2 fft(rows, cols);
  std::vector<cd> spectrum = fft.forward(std::vector<cd>(gray.begin(), gray.end()));

  std::vector<double> radius(n);
  std::vector<double> sintheta(n);
  std::vector<double> costheta(n);
  std::vector<double> lowpass(n);
  for (int i = 0; i < rows; ++i) {
    const double fy = axis_frequency(i, rows);
    for (int j = 0; j < cols; ++j) {
      const double fx = axis_frequency(j, cols);
      const std::size_t p = static_cast<std::size_t>(i) * cols + j;
      const double rad = std::sqrt(fx * fx + fy * fy);
      lowpass[p] = 1.0 / (1.0 + std::pow(rad / 0.45, 2 * 15));
      radius[p] = rad;
      const double theta = std::atan2(-fy, fx);
      sintheta[p] = std::sin(theta);
      costheta[p] = std::cos(theta);
    }
  }
  radius[0] = 1.0;

  std::vector<std::vector<double>> log_gabor(nscale, std::vector<double>(n));
  for (int s = 0; s < nscale; ++s) {
    const double fo = 1.0 / (min_wavelength * std::pow(mult, s));
    const double denom = 2.0 * std::log(sigma_on_f) * std::log(sigma_on_f);
    for (std::size_t p = 0; p < n; ++p) {
      const double l = std::log(radius[p] / fo);
      log_gabor[s][p] = std::exp(-(l * l) / denom) * lowpass[p];
    }
    log_gabor[s][0] = 0.0;
  }

  std::vector<double> energy_all(n, 0.0);
  std::vector<double> an_all(n, 0.0);
  for (int o = 0; o < norient; ++o) {
    const double angle = o * std::numbers::pi / norient;
    std::vector<double> spread(n);
    for (std::size_t p = 0; p < n; ++p) {
      const double ds = sintheta[p] * std::cos(angle) - costheta[p] * std::sin(angle);
      const double dc = costheta[p] * std::cos(angle) + sintheta[p] * std::sin(angle);
      const double dtheta = std::abs(std::atan2(ds, dc));
      spread[p] = std::exp(-(dtheta * dtheta) / (2.0 * theta_sigma * theta_sigma));
    }

    std::vector<double> sum_e(n, 0.0);
    std::vector<double> sum_o(n, 0.0);
    std::vector<double> sum_an(n, 0.0);
    std::vector<std::vector<cd>> eo(nscale);
    std::vector<std::vector<double>> spatial_filter(nscale);
    double em_n = 0.0;
    for (int s = 0; s < nscale; ++s) {
      std::vector<cd> filter(n);
      std::vector<cd> product(n);
      for (std::size_t p = 0; p < n; ++p) {
        const double f = log_gabor[s][p] * spread[p];
        filter[p] = f;
        product[p] = spectrum[p] * f;
        if (s == 0) em_n += f * f;
      }
      const std::vector<cd> impulse = fft.inverse(filter);
      spatial_filter[s].resize(n);
      for (std::size_t p = 0; p < n; ++p) spatial_filter[s][p] = impulse[p].real() * std::sqrt(static_cast<double>(n));
      eo[s] = fft.inverse(product);
      for (std::size_t p = 0; p < n; ++p) {
        sum_an[p] += std::abs(eo[s][p]);
        sum_e[p] += eo[s][p].real();
        sum_o[p] += eo[s][p].imag();
      }
    }

    std::vector<double> energy(n, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
      const double x_energy = std::sqrt(sum_e[p] * sum_e[p] + sum_o[p] * sum_o[p]) + epsilon;
      const double mean_e = sum_e[p] / x_energy;
      const double mean_o = sum_o[p] / x_energy;
      for (int s = 0; s < nscale; ++s) {
        const double e = eo[s][p].real();
        const double od = eo[s][p].imag();
        energy[p] += e * mean_e + od * mean_o - std::abs(e * mean_o - od * mean_e);
      }
    }

    std::vector<double> e2(n);
    for (std::size_t p = 0; p < n; ++p) e2[p] = std::norm(eo[0][p]);
    const double mean_e2n = -median(std::move(e2)) / std::log(0.5);
    const double noise_power = mean_e2n / em_n;
    double sum_an2 = 0.0;
    double sum_aiaj = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (int si = 0; si < nscale; ++si) {
        sum_an2 += spatial_filter[si][p] * spatial_filter[si][p];
        for (int sj = si + 1; sj < nscale; ++sj) sum_aiaj += spatial_filter[si][p] * spatial_filter[sj][p];
      }
    }
    const double noise_energy2 = 2.0 * noise_power * sum_an2 + 4.0 * noise_power * sum_aiaj;
    const double tau = std::sqrt(noise_energy2 / 2.0);
    const double noise_mean = tau * std::sqrt(std::numbers::pi / 2.0);
    const double noise_sigma = std::sqrt((2.0 - std::numbers::pi / 2.0) * tau * tau);
    // empirical correction of the threshold for this congruency measure
    const double threshold = (noise_mean + k * noise_sigma) / 1.7;

    for (std::size_t p = 0; p < n; ++p) {
      energy_all[p] += std::max(energy[p] - threshold, 0.0);
      an_all[p] += sum_an[p];
    }
  }

  std::vector<double> pc(n);
  for (std::size_t p = 0; p < n; ++p) pc[p] = an_all[p] > 0.0 ? energy_all[p] / an_all[p] : 0.0;
  return pc;
}

double fsim(const Image& a, const Image& b) {
  require_same(a, b, "fsim");
  if (a.height < 16 || a.width < 16) throw DomainError("fsim needs images of at least 16x16 pixels");
  int rows = a.height;
  int cols = a.width;
  std::vector<double> y1 = luminance(a);
  std::vector<double> y2 = luminance(b);

  const int f = std::max(1, static_cast<int>(std::lround(std::min(rows, cols) / 256.0)));
  if (f > 1) {
    const std::vector<double> box(static_cast<std::size_t>(f) * f, 1.0 / (f * f));
    const auto a1 = filter_same(y1, rows, cols, box.data(), f, f);
    const auto a2 = filter_same(y2, rows, cols, box.data(), f, f);
    const int nr = (rows + f - 1) / f;
    const int nc = (cols + f - 1) / f;
    y1.assign(static_cast<std::size_t>(nr) * nc, 0.0);
    y2.assign(y1.size(), 0.0);
    for (int i = 0; i < nr; ++i) {
      for (int j = 0; j < nc; ++j) {
        y1[static_cast<std::size_t>(i) * nc + j] = a1[static_cast<std::size_t>(i * f) * cols + j * f];
        y2[static_cast<std::size_t>(i) * nc + j] = a2[static_cast<std::size_t>(i * f) * cols + j * f];
      }
    }
    rows = nr;
    cols = nc;
  }

  const auto pc1 = phase_congruency(y1, rows, cols);
  const auto pc2 = phase_congruency(y2, rows, cols);

  static constexpr double dx[9] = {3 / 16.0, 0, -3 / 16.0, 10 / 16.0, 0, -10 / 16.0, 3 / 16.0, 0, -3 / 16.0};
  static constexpr double dy[9] = {3 / 16.0, 10 / 16.0, 3 / 16.0, 0, 0, 0, -3 / 16.0, -10 / 16.0, -3 / 16.0};
  const auto gx1 = filter_same(y1, rows, cols, dx, 3, 3);
  const auto gy1 = filter_same(y1, rows, cols, dy, 3, 3);
  const auto gx2 = filter_same(y2, rows, cols, dx, 3, 3);
  const auto gy2 = filter_same(y2, rows, cols, dy, 3, 3);

  constexpr double t1 = 0.85;
  constexpr double t2 = 160.0;
  double num = 0.0;
  double den = 0.0;
  double unweighted = 0.0;
  for (std::size_t p = 0; p < pc1.size(); ++p) {
    const double g1 = std::sqrt(gx1[p] * gx1[p] + gy1[p] * gy1[p]);
    const double g2 = std::sqrt(gx2[p] * gx2[p] + gy2[p] * gy2[p]);
    const double s_pc = (2.0 * pc1[p] * pc2[p] + t1) / (pc1[p] * pc1[p] + pc2[p] * pc2[p] + t1);
    const double s_g = (2.0 * g1 * g2 + t2) / (g1 * g1 + g2 * g2 + t2);
    const double pcm = std::max(pc1[p], pc2[p]);
    num += s_g * s_pc * pcm;
    den += pcm;
    unweighted += s_g * s_pc;
  }
  // featureless images: fall back to uniform pooling
  if (den <= 0.0) return unweighted / static_cast<double>(pc1.size());
  return num / den;
}

MetricReport compute_metrics(const Image& result, const Image& clean, const PixelMask& pm) {
  return {l2_whole(result, clean), mse_region(result, clean, pm), ssim(result, clean), psnr(result, clean),
          fsim(result, clean)};
}

}  // namespace ltaf
