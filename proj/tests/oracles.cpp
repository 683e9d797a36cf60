#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace oracle {

double beta(int steps, double beta_start, double beta_end, int t) {
  if (steps == 1) return beta_start;
  return beta_start + (beta_end - beta_start) * t / (steps - 1);
}

double alpha_bar(int steps, double beta_start, double beta_end, int t) {
  double p = 1.0;
  for (int i = 0; i <= t; ++i) p *= 1.0 - beta(steps, beta_start, beta_end, i);
  return p;
}

double forward_diffuse(double z0, double noise, double alpha_bar_t) {
  return std::sqrt(alpha_bar_t) * z0 + std::sqrt(1.0 - alpha_bar_t) * noise;
}

double posterior_step(double z_t, double eps, double noise, double beta_t, double alpha_bar_t) {
  const double alpha_t = 1.0 - beta_t;
  return (z_t - beta_t / std::sqrt(1.0 - alpha_bar_t) * eps) / std::sqrt(alpha_t) + std::sqrt(beta_t) * noise;
}

std::vector<std::uint8_t> latent_keep(const ltaf::PixelMask& pm, int f) {
  const int h = pm.height / f;
  const int w = pm.width / f;
  std::vector<std::uint8_t> keep(static_cast<std::size_t>(h) * w, 1);
  for (int y = 0; y < pm.height; ++y) {
    for (int x = 0; x < pm.width; ++x) {
      if (pm.at(y, x)) keep[static_cast<std::size_t>(y / f) * w + x / f] = 0;
    }
  }
  return keep;
}

std::vector<double> quantize(const ltaf::Image& img) {
  std::vector<double> v(img.pixels.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = std::min(1.0, std::max(0.0, static_cast<double>(img.pixels[i])));
    v[i] = std::round(255.0 * x);
  }
  return v;
}

double l2_whole(const ltaf::Image& a, const ltaf::Image& b) {
  const auto qa = quantize(a);
  const auto qb = quantize(b);
  double s = 0.0;
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < a.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const std::size_t i = (static_cast<std::size_t>(y) * a.width + x) * 3 + c;
        s += (qa[i] - qb[i]) * (qa[i] - qb[i]);
      }
    }
  }
  return s;
}

double mse_region(const ltaf::Image& a, const ltaf::Image& b, const ltaf::PixelMask& pm) {
  const auto qa = quantize(a);
  const auto qb = quantize(b);
  double s = 0.0;
  int n = 0;
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < a.width; ++x) {
      if (!pm.at(y, x)) continue;
      for (int c = 0; c < 3; ++c) {
        const std::size_t i = (static_cast<std::size_t>(y) * a.width + x) * 3 + c;
        s += (qa[i] - qb[i]) * (qa[i] - qb[i]);
        ++n;
      }
    }
  }
  if (n == 0) throw std::invalid_argument("empty mask");
  return s / n;
}

double psnr(const ltaf::Image& a, const ltaf::Image& b) {
  const double mse = l2_whole(a, b) / (3.0 * a.height * a.width);
  if (mse == 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double ssim(const ltaf::Image& a, const ltaf::Image& b) {
  const auto qa = quantize(a);
  const auto qb = quantize(b);
  const int win = 11;
  double window[11][11];
  double total = 0.0;
  for (int i = 0; i < win; ++i) {
    for (int j = 0; j < win; ++j) {
      const double di = i - 5;
      const double dj = j - 5;
      window[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * 1.5 * 1.5));
      total += window[i][j];
    }
  }
  for (auto& row : window) {
    for (double& v : row) v /= total;
  }
  const double c1 = std::pow(0.01 * 255.0, 2);
  const double c2 = std::pow(0.03 * 255.0, 2);
  double result = 0.0;
  for (int c = 0; c < 3; ++c) {
    auto px = [&](const std::vector<double>& q, int y, int x) {
      return q[(static_cast<std::size_t>(y) * a.width + x) * 3 + c];
    };
    double sum = 0.0;
    int count = 0;
    for (int y0 = 0; y0 + win <= a.height; ++y0) {
      for (int x0 = 0; x0 + win <= a.width; ++x0) {
        double mx = 0.0;
        double my = 0.0;
        for (int i = 0; i < win; ++i) {
          for (int j = 0; j < win; ++j) {
            mx += window[i][j] * px(qa, y0 + i, x0 + j);
            my += window[i][j] * px(qb, y0 + i, x0 + j);
          }
        }
        double vx = 0.0;
        double vy = 0.0;
        double cov = 0.0;
        for (int i = 0; i < win; ++i) {
          for (int j = 0; j < win; ++j) {
            const double dx = px(qa, y0 + i, x0 + j) - mx;
            const double dy = px(qb, y0 + i, x0 + j) - my;
            vx += window[i][j] * dx * dx;
            vy += window[i][j] * dy * dy;
            cov += window[i][j] * dx * dy;
          }
        }
        sum += (2 * mx * my + c1) * (2 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
    }
    result += sum / count;
  }
  return result / 3.0;
}

namespace {

using cd = std::complex<double>;
using Grid = std::vector<std::vector<cd>>;

Grid dft2(const Grid& x, bool inverse) {
  const int rows = static_cast<int>(x.size());
  const int cols = static_cast<int>(x[0].size());
  const double sign = inverse ? 1.0 : -1.0;
  Grid out(rows, std::vector<cd>(cols));
  for (int k = 0; k < rows; ++k) {
    for (int l = 0; l < cols; ++l) {
      cd acc = 0.0;
      for (int m = 0; m < rows; ++m) {
        for (int n = 0; n < cols; ++n) {
          const double phase = sign * 2.0 * std::numbers::pi * (static_cast<double>(k * m % rows) / rows +
                                                                 static_cast<double>(l * n % cols) / cols);
          acc += x[m][n] * cd(std::cos(phase), std::sin(phase));
        }
      }
      out[k][l] = inverse ? acc / static_cast<double>(rows * cols) : acc;
    }
  }
  return out;
}

std::vector<double> centred_range(int n) {
  std::vector<double> r(n);
  for (int i = 0; i < n; ++i) {
    r[i] = n % 2 ? (i - (n - 1) / 2.0) / (n - 1) : (i - n / 2.0) / n;
  }
  return r;
}

// MATLAB ifftshift: element floor(n/2) moves to index 0.
std::vector<std::vector<double>> ifftshift(const std::vector<std::vector<double>>& a) {
  const int rows = static_cast<int>(a.size());
  const int cols = static_cast<int>(a[0].size());
  std::vector<std::vector<double>> out(rows, std::vector<double>(cols));
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) out[i][j] = a[(i + rows / 2) % rows][(j + cols / 2) % cols];
  }
  return out;
}

std::vector<std::vector<double>> phasecong(const std::vector<std::vector<double>>& im) {
  const int rows = static_cast<int>(im.size());
  const int cols = static_cast<int>(im[0].size());
  const int nscale = 4;
  const int norient = 4;
  const double min_wavelength = 6.0;
  const double mult = 2.0;
  const double sigma_on_f = 0.55;
  const double d_theta_on_sigma = 1.2;
  const double k = 2.0;
  const double epsilon = 0.0001;
  const double theta_sigma = std::numbers::pi / norient / d_theta_on_sigma;
  using Plane = std::vector<std::vector<double>>;
  auto zeros = [&] { return Plane(rows, std::vector<double>(cols, 0.0)); };

  Grid g(rows, std::vector<cd>(cols));
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) g[i][j] = im[i][j];
  }
  const Grid imagefft = dft2(g, false);

  const auto xr = centred_range(cols);
  const auto yr = centred_range(rows);
  Plane radius = zeros();
  Plane theta = zeros();
  Plane lp = zeros();
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      radius[i][j] = std::sqrt(xr[j] * xr[j] + yr[i] * yr[i]);
      theta[i][j] = std::atan2(-yr[i], xr[j]);
      lp[i][j] = 1.0 / (1.0 + std::pow(radius[i][j] / 0.45, 30));
    }
  }
  radius = ifftshift(radius);
  theta = ifftshift(theta);
  lp = ifftshift(lp);
  radius[0][0] = 1.0;

  std::vector<Plane> log_gabor;
  for (int s = 0; s < nscale; ++s) {
    const double wavelength = min_wavelength * std::pow(mult, s);
    const double fo = 1.0 / wavelength;
    Plane lg = zeros();
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        const double l = std::log(radius[i][j] / fo);
        lg[i][j] = std::exp(-l * l / (2.0 * std::pow(std::log(sigma_on_f), 2))) * lp[i][j];
      }
    }
    lg[0][0] = 0.0;
    log_gabor.push_back(lg);
  }

  Plane energy_all = zeros();
  Plane an_all = zeros();
  for (int o = 0; o < norient; ++o) {
    const double angl = o * std::numbers::pi / norient;
    Plane spread = zeros();
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        const double ds = std::sin(theta[i][j]) * std::cos(angl) - std::cos(theta[i][j]) * std::sin(angl);
        const double dc = std::cos(theta[i][j]) * std::cos(angl) + std::sin(theta[i][j]) * std::sin(angl);
        const double dtheta = std::abs(std::atan2(ds, dc));
        spread[i][j] = std::exp(-dtheta * dtheta / (2.0 * theta_sigma * theta_sigma));
      }
    }
    Plane sum_e = zeros();
    Plane sum_o = zeros();
    Plane sum_an = zeros();
    std::vector<Grid> eo;
    std::vector<Plane> ifft_filters;
    double em_n = 0.0;
    for (int s = 0; s < nscale; ++s) {
      Grid filter(rows, std::vector<cd>(cols));
      Grid product(rows, std::vector<cd>(cols));
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
          filter[i][j] = log_gabor[s][i][j] * spread[i][j];
          product[i][j] = imagefft[i][j] * filter[i][j];
          if (s == 0) em_n += std::norm(filter[i][j]);
        }
      }
      const Grid spatial = dft2(filter, true);
      Plane f = zeros();
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) f[i][j] = spatial[i][j].real() * std::sqrt(static_cast<double>(rows * cols));
      }
      ifft_filters.push_back(f);
      eo.push_back(dft2(product, true));
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
          sum_an[i][j] += std::abs(eo[s][i][j]);
          sum_e[i][j] += eo[s][i][j].real();
          sum_o[i][j] += eo[s][i][j].imag();
        }
      }
    }
    Plane energy = zeros();
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        const double xe = std::sqrt(sum_e[i][j] * sum_e[i][j] + sum_o[i][j] * sum_o[i][j]) + epsilon;
        const double me = sum_e[i][j] / xe;
        const double mo = sum_o[i][j] / xe;
        for (int s = 0; s < nscale; ++s) {
          const double e = eo[s][i][j].real();
          const double od = eo[s][i][j].imag();
          energy[i][j] += e * me + od * mo - std::abs(e * mo - od * me);
        }
      }
    }
    std::vector<double> e2;
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) e2.push_back(std::norm(eo[0][i][j]));
    }
    std::sort(e2.begin(), e2.end());
    const std::size_t n = e2.size();
    const double median_e2n = n % 2 ? e2[n / 2] : (e2[n / 2 - 1] + e2[n / 2]) / 2.0;
    const double mean_e2n = -median_e2n / std::log(0.5);
    const double noise_power = mean_e2n / em_n;
    double est_sum_an2 = 0.0;
    double est_sum_aiaj = 0.0;
    for (int s = 0; s < nscale; ++s) {
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) est_sum_an2 += ifft_filters[s][i][j] * ifft_filters[s][i][j];
      }
    }
    for (int si = 0; si < nscale - 1; ++si) {
      for (int sj = si + 1; sj < nscale; ++sj) {
        for (int i = 0; i < rows; ++i) {
          for (int j = 0; j < cols; ++j) est_sum_aiaj += ifft_filters[si][i][j] * ifft_filters[sj][i][j];
        }
      }
    }
    const double est_noise_energy2 = 2 * noise_power * est_sum_an2 + 4 * noise_power * est_sum_aiaj;
    const double tau = std::sqrt(est_noise_energy2 / 2);
    const double est_noise_energy = tau * std::sqrt(std::numbers::pi / 2);
    const double est_noise_sigma = std::sqrt((2 - std::numbers::pi / 2) * tau * tau);
    const double t = (est_noise_energy + k * est_noise_sigma) / 1.7;
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        energy_all[i][j] += std::max(energy[i][j] - t, 0.0);
        an_all[i][j] += sum_an[i][j];
      }
    }
  }
  Plane pc = zeros();
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) pc[i][j] = energy_all[i][j] / an_all[i][j];
  }
  return pc;
}

// MATLAB conv2(..., 'same') with a 3x3 kernel (true convolution).
std::vector<std::vector<double>> conv2_same(const std::vector<std::vector<double>>& im, const double (&k)[3][3]) {
  const int rows = static_cast<int>(im.size());
  const int cols = static_cast<int>(im[0].size());
  std::vector<std::vector<double>> out(rows, std::vector<double>(cols, 0.0));
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (int u = -1; u <= 1; ++u) {
        for (int v = -1; v <= 1; ++v) {
          const int ii = i - u;
          const int jj = j - v;
          if (ii < 0 || jj < 0 || ii >= rows || jj >= cols) continue;
          acc += k[u + 1][v + 1] * im[ii][jj];
        }
      }
      out[i][j] = acc;
    }
  }
  return out;
}

}  // namespace

double fsim(const ltaf::Image& a, const ltaf::Image& b) {
  if (std::min(a.height, a.width) >= 384) throw std::invalid_argument("oracle covers undownsampled sizes only");
  const auto qa = quantize(a);
  const auto qb = quantize(b);
  const int rows = a.height;
  const int cols = a.width;
  std::vector<std::vector<double>> y1(rows, std::vector<double>(cols));
  std::vector<std::vector<double>> y2 = y1;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const std::size_t p = (static_cast<std::size_t>(i) * cols + j) * 3;
      y1[i][j] = 0.299 * qa[p] + 0.587 * qa[p + 1] + 0.114 * qa[p + 2];
      y2[i][j] = 0.299 * qb[p] + 0.587 * qb[p + 1] + 0.114 * qb[p + 2];
    }
  }
  const auto pc1 = phasecong(y1);
  const auto pc2 = phasecong(y2);
  const double dx[3][3] = {{3 / 16.0, 0, -3 / 16.0}, {10 / 16.0, 0, -10 / 16.0}, {3 / 16.0, 0, -3 / 16.0}};
  const double dy[3][3] = {{3 / 16.0, 10 / 16.0, 3 / 16.0}, {0, 0, 0}, {-3 / 16.0, -10 / 16.0, -3 / 16.0}};
  const auto ix1 = conv2_same(y1, dx);
  const auto iy1 = conv2_same(y1, dy);
  const auto ix2 = conv2_same(y2, dx);
  const auto iy2 = conv2_same(y2, dy);
  const double t1 = 0.85;
  const double t2 = 160.0;
  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double g1 = std::sqrt(ix1[i][j] * ix1[i][j] + iy1[i][j] * iy1[i][j]);
      const double g2 = std::sqrt(ix2[i][j] * ix2[i][j] + iy2[i][j] * iy2[i][j]);
      const double pc_sim = (2 * pc1[i][j] * pc2[i][j] + t1) / (pc1[i][j] * pc1[i][j] + pc2[i][j] * pc2[i][j] + t1);
      const double g_sim = (2 * g1 * g2 + t2) / (g1 * g1 + g2 * g2 + t2);
      const double pcm = std::max(pc1[i][j], pc2[i][j]);
      num += g_sim * pc_sim * pcm;
      den += pcm;
    }
  }
  return num / den;
}

}  // namespace oracle
