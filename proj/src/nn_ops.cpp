#include "occreid/nn_ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

#include "occreid/errors.hpp"

namespace occreid::nn {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<Mat>;
using CMapM = Eigen::Map<const Mat>;

// col: (cin * k * k) x (ho * wo)
void im2col(const double* x, int cin, int h, int w, const ConvGeometry& g, int ho, int wo,
            double* col) {
  const int k = g.kernel;
  for (int c = 0; c < cin; ++c) {
    const double* plane = x + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = col + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          double* dst = row + static_cast<std::size_t>(oy) * wo;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + wo, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            dst[ox] = (ix >= 0 && ix < w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* col, int cin, int h, int w, const ConvGeometry& g, int ho, int wo,
            double* x) {
  const int k = g.kernel;
  for (int c = 0; c < cin; ++c) {
    double* plane = x + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row = col + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= h) continue;
          const double* src = row + static_cast<std::size_t>(oy) * wo;
          double* dst = plane + static_cast<std::size_t>(iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

bool is_pointwise(const ConvGeometry& g) { return g.kernel == 1 && g.stride == 1 && g.pad == 0; }

void check_conv_shapes(const Tensor& x, const Tensor& weight, const ConvGeometry& g) {
  if (weight.c() != x.c() || weight.h() != g.kernel || weight.w() != g.kernel)
    throw ShapeError("conv2d: weight " + weight.shape_string() + " incompatible with input " +
                     x.shape_string());
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias,
                      const ConvGeometry& g) {
  check_conv_shapes(x, weight, g);
  const int n = x.n(), cin = x.c(), h = x.h(), w = x.w();
  const int cout = weight.n();
  const int ho = g.out_size(h), wo = g.out_size(w);
  const int kk = cin * g.kernel * g.kernel;
  Tensor y(n, cout, ho, wo);
  CMapM wmat(weight.data.data(), cout, kk);
  Eigen::Map<const Eigen::VectorXd> b(bias.data.data(), cout);
  std::vector<double> col;
  if (!is_pointwise(g)) col.resize(static_cast<std::size_t>(kk) * ho * wo);
  for (int i = 0; i < n; ++i) {
    const double* xi = x.data.data() + i * x.sample_size();
    const double* cptr = xi;
    if (!is_pointwise(g)) {
      im2col(xi, cin, h, w, g, ho, wo, col.data());
      cptr = col.data();
    }
    MapM out(y.data.data() + i * y.sample_size(), cout, ho * wo);
    out.noalias() = wmat * CMapM(cptr, kk, ho * wo);
    out.colwise() += b;
  }
  return y;
}

Tensor conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& dy,
                       const ConvGeometry& g, Tensor& dweight, Tensor& dbias,
                       bool need_input_grad) {
  const int n = x.n(), cin = x.c(), h = x.h(), w = x.w();
  const int cout = weight.n();
  const int ho = dy.h(), wo = dy.w();
  const int kk = cin * g.kernel * g.kernel;
  CMapM wmat(weight.data.data(), cout, kk);
  MapM dw(dweight.data.data(), cout, kk);
  Eigen::Map<Eigen::VectorXd> db(dbias.data.data(), cout);
  Tensor dx;
  if (need_input_grad) dx = Tensor(n, cin, h, w);
  std::vector<double> col, dcol;
  if (!is_pointwise(g)) {
    col.resize(static_cast<std::size_t>(kk) * ho * wo);
    if (need_input_grad) dcol.resize(col.size());
  }
  for (int i = 0; i < n; ++i) {
    const double* xi = x.data.data() + i * x.sample_size();
    CMapM dyi(dy.data.data() + i * dy.sample_size(), cout, ho * wo);
    const double* cptr = xi;
    if (!is_pointwise(g)) {
      im2col(xi, cin, h, w, g, ho, wo, col.data());
      cptr = col.data();
    }
    dw.noalias() += dyi * CMapM(cptr, kk, ho * wo).transpose();
    // Plain loops: Eigen's vectorized reductions over a Map depend on the
    // pointer's alignment, which would make the sum order vary between runs.
    for (int c = 0; c < cout; ++c) {
      double acc = 0.0;
      for (int k = 0; k < ho * wo; ++k) acc += dyi(c, k);
      db(c) += acc;
    }
    if (!need_input_grad) continue;
    double* dxi = dx.data.data() + i * dx.sample_size();
    if (is_pointwise(g)) {
      MapM(dxi, kk, ho * wo).noalias() = wmat.transpose() * dyi;
    } else {
      MapM(dcol.data(), kk, ho * wo).noalias() = wmat.transpose() * dyi;
      col2im(dcol.data(), cin, h, w, g, ho, wo, dxi);
    }
  }
  return dx;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  // NaN passes through so corrupted inputs surface as a NaN loss.
  for (double& v : y.data) v = v < 0.0 ? 0.0 : v;
  return y;
}

Tensor relu_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.data.size(); ++i)
    if (!(y.data[i] > 0.0)) dx.data[i] = 0.0;
  return dx;
}

namespace {

struct Tap {
  int i0, i1;
  double w1;
};

std::vector<Tap> upsample_taps(int n_in) {
  const int n_out = 2 * n_in;
  std::vector<Tap> taps(n_out);
  for (int i = 0; i < n_out; ++i) {
    double s = (i + 0.5) * 0.5 - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(n_in - 1));
    const int i0 = static_cast<int>(std::floor(s));
    taps[i] = {i0, std::min(i0 + 1, n_in - 1), s - i0};
  }
  return taps;
}

}  // namespace

Tensor upsample2x_forward(const Tensor& x) {
  const int n = x.n(), c = x.c(), h = x.h(), w = x.w();
  const auto ty = upsample_taps(h);
  const auto tx = upsample_taps(w);
  Tensor y(n, c, 2 * h, 2 * w);
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch)
      for (int oy = 0; oy < 2 * h; ++oy) {
        const Tap& a = ty[oy];
        for (int ox = 0; ox < 2 * w; ++ox) {
          const Tap& b = tx[ox];
          const double top = x.at(i, ch, a.i0, b.i0) * (1.0 - b.w1) + x.at(i, ch, a.i0, b.i1) * b.w1;
          const double bot = x.at(i, ch, a.i1, b.i0) * (1.0 - b.w1) + x.at(i, ch, a.i1, b.i1) * b.w1;
          y.at(i, ch, oy, ox) = top * (1.0 - a.w1) + bot * a.w1;
        }
      }
  return y;
}

Tensor upsample2x_backward(const Tensor& dy) {
  const int n = dy.n(), c = dy.c(), h = dy.h() / 2, w = dy.w() / 2;
  const auto ty = upsample_taps(h);
  const auto tx = upsample_taps(w);
  Tensor dx(n, c, h, w);
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch)
      for (int oy = 0; oy < 2 * h; ++oy) {
        const Tap& a = ty[oy];
        for (int ox = 0; ox < 2 * w; ++ox) {
          const Tap& b = tx[ox];
          const double g = dy.at(i, ch, oy, ox);
          dx.at(i, ch, a.i0, b.i0) += g * (1.0 - a.w1) * (1.0 - b.w1);
          dx.at(i, ch, a.i0, b.i1) += g * (1.0 - a.w1) * b.w1;
          dx.at(i, ch, a.i1, b.i0) += g * a.w1 * (1.0 - b.w1);
          dx.at(i, ch, a.i1, b.i1) += g * a.w1 * b.w1;
        }
      }
  return dx;
}

Tensor global_avg_pool_forward(const Tensor& x) {
  Tensor y(x.n(), x.c(), 1, 1);
  const std::size_t plane = x.plane();
  for (int i = 0; i < x.n(); ++i)
    for (int c = 0; c < x.c(); ++c) {
      const double* p = x.data.data() + (static_cast<std::size_t>(i) * x.c() + c) * plane;
      double s = 0.0;
      for (std::size_t k = 0; k < plane; ++k) s += p[k];
      y.at(i, c, 0, 0) = s / static_cast<double>(plane);
    }
  return y;
}

Tensor global_avg_pool_backward(const Tensor& dy, int h, int w) {
  Tensor dx(dy.n(), dy.c(), h, w);
  const std::size_t plane = dx.plane();
  for (int i = 0; i < dy.n(); ++i)
    for (int c = 0; c < dy.c(); ++c) {
      const double g = dy.at(i, c, 0, 0) / static_cast<double>(plane);
      double* p = dx.data.data() + (static_cast<std::size_t>(i) * dy.c() + c) * plane;
      std::fill(p, p + plane, g);
    }
  return dx;
}

Tensor linear_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const int n = x.n(), in = x.c(), out = weight.n();
  if (weight.c() != in)
    throw ShapeError("linear: weight " + weight.shape_string() + " incompatible with input " +
                     x.shape_string());
  Tensor y(n, out, 1, 1);
  MapM ym(y.data.data(), n, out);
  ym.noalias() = CMapM(x.data.data(), n, in) * CMapM(weight.data.data(), out, in).transpose();
  ym.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.data.data(), out);
  return y;
}

Tensor linear_backward(const Tensor& x, const Tensor& weight, const Tensor& dy, Tensor& dweight,
                       Tensor& dbias) {
  const int n = x.n(), in = x.c(), out = weight.n();
  CMapM dym(dy.data.data(), n, out);
  CMapM xm(x.data.data(), n, in);
  MapM(dweight.data.data(), out, in).noalias() += dym.transpose() * xm;
  for (int o = 0; o < out; ++o) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += dym(i, o);
    dbias.data[static_cast<std::size_t>(o)] += acc;
  }
  Tensor dx(n, in, 1, 1);
  MapM(dx.data.data(), n, in).noalias() = dym * CMapM(weight.data.data(), out, in);
  return dx;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw ShapeError("add: shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  Tensor y = a;
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += b.data[i];
  return y;
}

}  // namespace occreid::nn
