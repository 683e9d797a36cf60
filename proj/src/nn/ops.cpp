#include "ltaf/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "ltaf/errors.hpp"

namespace ltaf::nn {
namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

void require_rank(const Tensor& t, int rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " + t.shape_string());
  }
}

struct ConvGeometry {
  int n, cin, h, w, cout, k, stride, pad, ho, wo;
  int patch() const { return cin * k * k; }
  int out_plane() const { return ho * wo; }
};

// Unfolds sample `n` of x into columns [K, N*P] at column offset n*P.
void im2col(const float* x, const ConvGeometry& g, int n, float* col, int ld) {
  const int plane = g.h * g.w;
  const float* xs = x + static_cast<std::size_t>(n) * g.cin * plane;
  const int base = n * g.out_plane();
  for (int c = 0; c < g.cin; ++c) {
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        float* row = col + static_cast<std::size_t>((c * g.k + ky) * g.k + kx) * ld + base;
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          float* dst = row + oy * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst, dst + g.wo, 0.0f);
            continue;
          }
          const float* src = xs + c * plane + iy * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            dst[ox] = (ix >= 0 && ix < g.w) ? src[ix] : 0.0f;
          }
        }
      }
    }
  }
}

void col2im_add(const float* col, const ConvGeometry& g, int n, float* dx, int ld) {
  const int plane = g.h * g.w;
  float* xs = dx + static_cast<std::size_t>(n) * g.cin * plane;
  const int base = n * g.out_plane();
  for (int c = 0; c < g.cin; ++c) {
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        const float* row = col + static_cast<std::size_t>((c * g.k + ky) * g.k + kx) * ld + base;
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          const float* src = row + oy * g.wo;
          float* dst = xs + c * plane + iy * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

float sigmoidf(float v) { return 1.0f / (1.0f + std::exp(-v)); }

}  // namespace

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad) {
  require_rank(x->value, 4, "conv2d input");
  require_rank(weight->value, 4, "conv2d weight");
  ConvGeometry g{};
  g.n = x->value.dim(0);
  g.cin = x->value.dim(1);
  g.h = x->value.dim(2);
  g.w = x->value.dim(3);
  g.cout = weight->value.dim(0);
  g.k = weight->value.dim(2);
  g.stride = stride;
  g.pad = pad;
  if (weight->value.dim(1) != g.cin || weight->value.dim(3) != g.k) {
    throw ShapeError("conv2d: weight " + weight->value.shape_string() + " incompatible with input " +
                     x->value.shape_string());
  }
  if (bias->value.size() != static_cast<std::size_t>(g.cout)) throw ShapeError("conv2d: bias length mismatch");
  g.ho = (g.h + 2 * pad - g.k) / stride + 1;
  g.wo = (g.w + 2 * pad - g.k) / stride + 1;
  if (g.ho <= 0 || g.wo <= 0) throw ShapeError("conv2d: input too small " + x->value.shape_string());

  const int K = g.patch();
  const int P = g.out_plane();
  const int NP = g.n * P;
  std::vector<float> col(static_cast<std::size_t>(K) * NP);
  for (int n = 0; n < g.n; ++n) im2col(x->value.data(), g, n, col.data(), NP);

  RowMat out(g.cout, NP);
  out.noalias() = ConstMapMat(weight->value.data(), g.cout, K) * ConstMapMat(col.data(), K, NP);

  Tensor y({g.n, g.cout, g.ho, g.wo});
  const float* b = bias->value.data();
  for (int n = 0; n < g.n; ++n) {
    for (int c = 0; c < g.cout; ++c) {
      const float* src = out.data() + static_cast<std::size_t>(c) * NP + n * P;
      float* dst = y.data() + (static_cast<std::size_t>(n) * g.cout + c) * P;
      for (int p = 0; p < P; ++p) dst[p] = src[p] + b[c];
    }
  }

  return make_node(std::move(y), {x, weight, bias}, [g](Node& self) {
    const Var& xv = self.inputs[0];
    const Var& wv = self.inputs[1];
    const Var& bv = self.inputs[2];
    const int K = g.patch();
    const int P = g.out_plane();
    const int NP = g.n * P;
    RowMat dout(g.cout, NP);
    for (int n = 0; n < g.n; ++n) {
      for (int c = 0; c < g.cout; ++c) {
        const float* src = self.grad.data() + (static_cast<std::size_t>(n) * g.cout + c) * P;
        std::copy(src, src + P, dout.data() + static_cast<std::size_t>(c) * NP + n * P);
      }
    }
    if (bv->requires_grad) {
      float* db = bv->grad_buffer().data();
      for (int c = 0; c < g.cout; ++c) db[c] += dout.row(c).sum();
    }
    if (wv->requires_grad) {
      std::vector<float> col(static_cast<std::size_t>(K) * NP);
      for (int n = 0; n < g.n; ++n) im2col(xv->value.data(), g, n, col.data(), NP);
      MapMat(wv->grad_buffer().data(), g.cout, K).noalias() += dout * ConstMapMat(col.data(), K, NP).transpose();
    }
    if (xv->requires_grad) {
      RowMat dcol(K, NP);
      dcol.noalias() = ConstMapMat(wv->value.data(), g.cout, K).transpose() * dout;
      float* dx = xv->grad_buffer().data();
      for (int n = 0; n < g.n; ++n) col2im_add(dcol.data(), g, n, dx, NP);
    }
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  require_rank(x->value, 2, "linear input");
  require_rank(weight->value, 2, "linear weight");
  const int n = x->value.dim(0);
  const int d = x->value.dim(1);
  const int o = weight->value.dim(0);
  if (weight->value.dim(1) != d) throw ShapeError("linear: weight " + weight->value.shape_string() + " vs input " + x->value.shape_string());
  if (bias->value.size() != static_cast<std::size_t>(o)) throw ShapeError("linear: bias length mismatch");
  Tensor y({n, o});
  MapMat ym(y.data(), n, o);
  ym.noalias() = ConstMapMat(x->value.data(), n, d) * ConstMapMat(weight->value.data(), o, d).transpose();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < o; ++j) ym(i, j) += bias->value[j];
  }
  return make_node(std::move(y), {x, weight, bias}, [n, d, o](Node& self) {
    ConstMapMat dy(self.grad.data(), n, o);
    const Var& xv = self.inputs[0];
    const Var& wv = self.inputs[1];
    const Var& bv = self.inputs[2];
    if (bv->requires_grad) {
      float* db = bv->grad_buffer().data();
      for (int j = 0; j < o; ++j) db[j] += dy.col(j).sum();
    }
    if (wv->requires_grad) {
      MapMat(wv->grad_buffer().data(), o, d).noalias() += dy.transpose() * ConstMapMat(xv->value.data(), n, d);
    }
    if (xv->requires_grad) {
      MapMat(xv->grad_buffer().data(), n, d).noalias() += dy * ConstMapMat(wv->value.data(), o, d);
    }
  });
}

Var group_norm(const Var& x, const Var& gamma, const Var& beta, int groups, float eps) {
  require_rank(x->value, 4, "group_norm input");
  const int n = x->value.dim(0);
  const int c = x->value.dim(1);
  const int plane = x->value.dim(2) * x->value.dim(3);
  if (groups <= 0 || c % groups != 0) throw ShapeError("group_norm: channels not divisible by groups");
  if (gamma->value.size() != static_cast<std::size_t>(c) || beta->value.size() != static_cast<std::size_t>(c)) {
    throw ShapeError("group_norm: affine length mismatch");
  }
  const int cpg = c / groups;
  const std::size_t group_size = static_cast<std::size_t>(cpg) * plane;

  std::vector<float> mean(static_cast<std::size_t>(n) * groups);
  std::vector<float> rstd(mean.size());
  Tensor y(x->value.shape());
  for (int i = 0; i < n; ++i) {
    for (int g = 0; g < groups; ++g) {
      const float* src = x->value.data() + (static_cast<std::size_t>(i) * c + g * cpg) * plane;
      double s = 0.0;
      double s2 = 0.0;
      for (std::size_t k = 0; k < group_size; ++k) s += src[k];
      const double mu = s / static_cast<double>(group_size);
      for (std::size_t k = 0; k < group_size; ++k) {
        const double dlt = src[k] - mu;
        s2 += dlt * dlt;
      }
      const double var = s2 / static_cast<double>(group_size);
      const float r = static_cast<float>(1.0 / std::sqrt(var + eps));
      mean[static_cast<std::size_t>(i) * groups + g] = static_cast<float>(mu);
      rstd[static_cast<std::size_t>(i) * groups + g] = r;
      float* dst = y.data() + (static_cast<std::size_t>(i) * c + g * cpg) * plane;
      for (int cc = 0; cc < cpg; ++cc) {
        const int ch = g * cpg + cc;
        const float ga = gamma->value[ch];
        const float be = beta->value[ch];
        for (int p = 0; p < plane; ++p) {
          const std::size_t k = static_cast<std::size_t>(cc) * plane + p;
          dst[k] = (src[k] - static_cast<float>(mu)) * r * ga + be;
        }
      }
    }
  }

  return make_node(std::move(y), {x, gamma, beta},
                   [n, c, plane, groups, cpg, group_size, mean = std::move(mean), rstd = std::move(rstd)](Node& self) {
    const Var& xv = self.inputs[0];
    const Var& gv = self.inputs[1];
    const Var& bv = self.inputs[2];
    float* dgamma = gv->requires_grad ? gv->grad_buffer().data() : nullptr;
    float* dbeta = bv->requires_grad ? bv->grad_buffer().data() : nullptr;
    float* dx = xv->requires_grad ? xv->grad_buffer().data() : nullptr;
    std::vector<float> xhat(group_size);
    std::vector<float> dxhat(group_size);
    for (int i = 0; i < n; ++i) {
      for (int g = 0; g < groups; ++g) {
        const std::size_t off = (static_cast<std::size_t>(i) * c + g * cpg) * plane;
        const float* src = xv->value.data() + off;
        const float* dy = self.grad.data() + off;
        const float mu = mean[static_cast<std::size_t>(i) * groups + g];
        const float r = rstd[static_cast<std::size_t>(i) * groups + g];
        double sum_dxhat = 0.0;
        double sum_dxhat_xhat = 0.0;
        for (int cc = 0; cc < cpg; ++cc) {
          const int ch = g * cpg + cc;
          const float ga = gv->value[ch];
          double dga = 0.0;
          double dbe = 0.0;
          for (int p = 0; p < plane; ++p) {
            const std::size_t k = static_cast<std::size_t>(cc) * plane + p;
            xhat[k] = (src[k] - mu) * r;
            dxhat[k] = dy[k] * ga;
            dga += static_cast<double>(dy[k]) * xhat[k];
            dbe += dy[k];
            sum_dxhat += dxhat[k];
            sum_dxhat_xhat += static_cast<double>(dxhat[k]) * xhat[k];
          }
          if (dgamma) dgamma[ch] += static_cast<float>(dga);
          if (dbeta) dbeta[ch] += static_cast<float>(dbe);
        }
        if (dx) {
          const float m1 = static_cast<float>(sum_dxhat / static_cast<double>(group_size));
          const float m2 = static_cast<float>(sum_dxhat_xhat / static_cast<double>(group_size));
          float* d = dx + off;
          for (std::size_t k = 0; k < group_size; ++k) d[k] += r * (dxhat[k] - m1 - xhat[k] * m2);
        }
      }
    }
  });
}

Var silu(const Var& x) {
  Tensor y(x->value.shape());
  const std::size_t count = y.size();
  for (std::size_t i = 0; i < count; ++i) y[i] = x->value[i] * sigmoidf(x->value[i]);
  return make_node(std::move(y), {x}, [](Node& self) {
    const Var& xv = self.inputs[0];
    float* dx = xv->grad_buffer().data();
    const std::size_t count = self.grad.size();
    for (std::size_t i = 0; i < count; ++i) {
      const float v = xv->value[i];
      const float s = sigmoidf(v);
      dx[i] += self.grad[i] * (s + v * s * (1.0f - s));
    }
  });
}

Var sigmoid(const Var& x) {
  Tensor y(x->value.shape());
  const std::size_t count = y.size();
  for (std::size_t i = 0; i < count; ++i) y[i] = sigmoidf(x->value[i]);
  return make_node(std::move(y), {x}, [](Node& self) {
    float* dx = self.inputs[0]->grad_buffer().data();
    const std::size_t count = self.grad.size();
    for (std::size_t i = 0; i < count; ++i) {
      const float s = self.value[i];
      dx[i] += self.grad[i] * s * (1.0f - s);
    }
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a->value, b->value, "add");
  Tensor y(a->value.shape());
  const std::size_t count = y.size();
  for (std::size_t i = 0; i < count; ++i) y[i] = a->value[i] + b->value[i];
  return make_node(std::move(y), {a, b}, [](Node& self) {
    for (const Var& in : self.inputs) {
      if (!in->requires_grad) continue;
      float* d = in->grad_buffer().data();
      const std::size_t count = self.grad.size();
      for (std::size_t i = 0; i < count; ++i) d[i] += self.grad[i];
    }
  });
}

Var scale(const Var& x, float factor) {
  Tensor y(x->value.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x->value[i] * factor;
  return make_node(std::move(y), {x}, [factor](Node& self) {
    float* dx = self.inputs[0]->grad_buffer().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += self.grad[i] * factor;
  });
}

Var add_channel_bias(const Var& x, const Var& v) {
  require_rank(x->value, 4, "add_channel_bias input");
  const int n = x->value.dim(0);
  const int c = x->value.dim(1);
  const int plane = x->value.dim(2) * x->value.dim(3);
  if (v->value.rank() != 2 || v->value.dim(0) != n || v->value.dim(1) != c) {
    throw ShapeError("add_channel_bias: offsets " + v->value.shape_string() + " vs " + x->value.shape_string());
  }
  Tensor y(x->value.shape());
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t off = (static_cast<std::size_t>(i) * c + ch) * plane;
      const float o = v->value[static_cast<std::size_t>(i) * c + ch];
      for (int p = 0; p < plane; ++p) y[off + p] = x->value[off + p] + o;
    }
  }
  return make_node(std::move(y), {x, v}, [n, c, plane](Node& self) {
    const Var& xv = self.inputs[0];
    const Var& vv = self.inputs[1];
    if (xv->requires_grad) {
      float* dx = xv->grad_buffer().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += self.grad[i];
    }
    if (vv->requires_grad) {
      float* dv = vv->grad_buffer().data();
      for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
          const std::size_t off = (static_cast<std::size_t>(i) * c + ch) * plane;
          float s = 0.0f;
          for (int p = 0; p < plane; ++p) s += self.grad[off + p];
          dv[static_cast<std::size_t>(i) * c + ch] += s;
        }
      }
    }
  });
}

Var concat_channels(const Var& a, const Var& b) {
  require_rank(a->value, 4, "concat input");
  require_rank(b->value, 4, "concat input");
  const int n = a->value.dim(0);
  const int ca = a->value.dim(1);
  const int cb = b->value.dim(1);
  const int h = a->value.dim(2);
  const int w = a->value.dim(3);
  if (b->value.dim(0) != n || b->value.dim(2) != h || b->value.dim(3) != w) {
    throw ShapeError("concat_channels: " + a->value.shape_string() + " vs " + b->value.shape_string());
  }
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  Tensor y({n, ca + cb, h, w});
  for (int i = 0; i < n; ++i) {
    const float* sa = a->value.data() + i * ca * plane;
    const float* sb = b->value.data() + i * cb * plane;
    float* dst = y.data() + i * (ca + cb) * plane;
    std::copy(sa, sa + ca * plane, dst);
    std::copy(sb, sb + cb * plane, dst + ca * plane);
  }
  return make_node(std::move(y), {a, b}, [n, ca, cb, plane](Node& self) {
    const Var& av = self.inputs[0];
    const Var& bv = self.inputs[1];
    for (int i = 0; i < n; ++i) {
      const float* src = self.grad.data() + i * (ca + cb) * plane;
      if (av->requires_grad) {
        float* d = av->grad_buffer().data() + i * ca * plane;
        for (std::size_t k = 0; k < ca * plane; ++k) d[k] += src[k];
      }
      if (bv->requires_grad) {
        float* d = bv->grad_buffer().data() + i * cb * plane;
        for (std::size_t k = 0; k < cb * plane; ++k) d[k] += src[ca * plane + k];
      }
    }
  });
}

Var slice_channels(const Var& x, int begin, int count) {
  require_rank(x->value, 4, "slice_channels input");
  const int n = x->value.dim(0);
  const int c = x->value.dim(1);
  if (begin < 0 || count <= 0 || begin + count > c) throw ShapeError("slice_channels: range outside channel extent");
  const std::size_t plane = static_cast<std::size_t>(x->value.dim(2)) * x->value.dim(3);
  Tensor y({n, count, x->value.dim(2), x->value.dim(3)});
  for (int i = 0; i < n; ++i) {
    const float* src = x->value.data() + (i * c + begin) * plane;
    std::copy(src, src + count * plane, y.data() + i * count * plane);
  }
  return make_node(std::move(y), {x}, [n, c, begin, count, plane](Node& self) {
    float* dx = self.inputs[0]->grad_buffer().data();
    for (int i = 0; i < n; ++i) {
      const float* src = self.grad.data() + i * count * plane;
      float* d = dx + (i * c + begin) * plane;
      for (std::size_t k = 0; k < count * plane; ++k) d[k] += src[k];
    }
  });
}

Var upsample_nearest2x(const Var& x) {
  require_rank(x->value, 4, "upsample input");
  const int nc = x->value.dim(0) * x->value.dim(1);
  const int h = x->value.dim(2);
  const int w = x->value.dim(3);
  Tensor y({x->value.dim(0), x->value.dim(1), 2 * h, 2 * w});
  for (int i = 0; i < nc; ++i) {
    const float* src = x->value.data() + static_cast<std::size_t>(i) * h * w;
    float* dst = y.data() + static_cast<std::size_t>(i) * 4 * h * w;
    for (int oy = 0; oy < 2 * h; ++oy) {
      for (int ox = 0; ox < 2 * w; ++ox) dst[oy * 2 * w + ox] = src[(oy / 2) * w + ox / 2];
    }
  }
  return make_node(std::move(y), {x}, [nc, h, w](Node& self) {
    float* dx = self.inputs[0]->grad_buffer().data();
    for (int i = 0; i < nc; ++i) {
      const float* src = self.grad.data() + static_cast<std::size_t>(i) * 4 * h * w;
      float* d = dx + static_cast<std::size_t>(i) * h * w;
      for (int oy = 0; oy < 2 * h; ++oy) {
        for (int ox = 0; ox < 2 * w; ++ox) d[(oy / 2) * w + ox / 2] += src[oy * 2 * w + ox];
      }
    }
  });
}

namespace {
constexpr float kLogvarMin = -30.0f;
constexpr float kLogvarMax = 20.0f;
}  // namespace

Var gaussian_sample(const Var& mean, const Var& logvar, const Tensor& noise) {
  require_same_shape(mean->value, logvar->value, "gaussian_sample");
  require_same_shape(mean->value, noise, "gaussian_sample noise");
  Tensor y(mean->value.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const float lv = std::clamp(logvar->value[i], kLogvarMin, kLogvarMax);
    y[i] = mean->value[i] + std::exp(0.5f * lv) * noise[i];
  }
  return make_node(std::move(y), {mean, logvar}, [noise](Node& self) {
    const Var& mv = self.inputs[0];
    const Var& lvv = self.inputs[1];
    if (mv->requires_grad) {
      float* d = mv->grad_buffer().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i];
    }
    if (lvv->requires_grad) {
      float* d = lvv->grad_buffer().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        const float raw = lvv->value[i];
        if (raw < kLogvarMin || raw > kLogvarMax) continue;
        d[i] += self.grad[i] * 0.5f * std::exp(0.5f * raw) * noise[i];
      }
    }
  });
}

Var kl_standard_normal(const Var& mean, const Var& logvar) {
  require_same_shape(mean->value, logvar->value, "kl_standard_normal");
  const int batch = mean->value.rank() > 0 ? mean->value.dim(0) : 1;
  double s = 0.0;
  for (std::size_t i = 0; i < mean->value.size(); ++i) {
    const double m = mean->value[i];
    const double lv = std::clamp(logvar->value[i], kLogvarMin, kLogvarMax);
    s += m * m + std::exp(lv) - 1.0 - lv;
  }
  Tensor y({1}, static_cast<float>(0.5 * s / batch));
  return make_node(std::move(y), {mean, logvar}, [batch](Node& self) {
    const float g = self.grad[0] / static_cast<float>(batch);
    const Var& mv = self.inputs[0];
    const Var& lvv = self.inputs[1];
    if (mv->requires_grad) {
      float* d = mv->grad_buffer().data();
      for (std::size_t i = 0; i < mv->value.size(); ++i) d[i] += g * mv->value[i];
    }
    if (lvv->requires_grad) {
      float* d = lvv->grad_buffer().data();
      for (std::size_t i = 0; i < lvv->value.size(); ++i) {
        const float raw = lvv->value[i];
        if (raw < kLogvarMin || raw > kLogvarMax) continue;
        d[i] += g * 0.5f * (std::exp(raw) - 1.0f);
      }
    }
  });
}

Var mse_loss(const Var& prediction, const Var& target) {
  require_same_shape(prediction->value, target->value, "mse_loss");
  const std::size_t count = prediction->value.size();
  double s = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double d = static_cast<double>(prediction->value[i]) - target->value[i];
    s += d * d;
  }
  Tensor y({1}, static_cast<float>(s / static_cast<double>(count)));
  return make_node(std::move(y), {prediction, target}, [count](Node& self) {
    const float scale = 2.0f * self.grad[0] / static_cast<float>(count);
    const Var& pv = self.inputs[0];
    const Var& tv = self.inputs[1];
    float* dp = pv->requires_grad ? pv->grad_buffer().data() : nullptr;
    float* dt = tv->requires_grad ? tv->grad_buffer().data() : nullptr;
    for (std::size_t i = 0; i < count; ++i) {
      const float d = scale * (pv->value[i] - tv->value[i]);
      if (dp) dp[i] += d;
      if (dt) dt[i] -= d;
    }
  });
}

}  // namespace ltaf::nn
