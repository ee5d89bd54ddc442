#include <doctest.h>

#include <cmath>
#include <functional>

#include "occreid/nn_ops.hpp"
#include "occreid/random.hpp"

using namespace occreid;
using namespace occreid::nn;

namespace {

Tensor random_tensor(int n, int c, int h, int w, RandomSource& rng) {
  Tensor t(n, c, h, w);
  for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
  return t;
}

// Direct seven-loop convolution.
Tensor naive_conv(const Tensor& x, const Tensor& wt, const Tensor& b, const ConvGeometry& g) {
  const int oh = g.out_size(x.h()), ow = g.out_size(x.w());
  Tensor y(x.n(), wt.n(), oh, ow);
  for (int n = 0; n < x.n(); ++n)
    for (int o = 0; o < wt.n(); ++o)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double s = b.data[static_cast<std::size_t>(o)];
          for (int c = 0; c < x.c(); ++c)
            for (int ky = 0; ky < g.kernel; ++ky)
              for (int kx = 0; kx < g.kernel; ++kx) {
                const int iy = oy * g.stride - g.pad + ky, ix = ox * g.stride - g.pad + kx;
                if (iy < 0 || ix < 0 || iy >= x.h() || ix >= x.w()) continue;
                s += wt.at(o, c, ky, kx) * x.at(n, c, iy, ix);
              }
          y.at(n, o, oy, ox) = s;
        }
  return y;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

// Checks d<dy, f(t)>/dt against central differences on every entry of t.
void check_gradient(Tensor& t, const std::function<double()>& objective, const Tensor& analytic) {
  const double h = 1e-6;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double saved = t.data[i];
    t.data[i] = saved + h;
    const double up = objective();
    t.data[i] = saved - h;
    const double down = objective();
    t.data[i] = saved;
    const double numeric = (up - down) / (2 * h);
    REQUIRE(analytic.data[i] == doctest::Approx(numeric).epsilon(1e-6).scale(1.0));
  }
}

}  // namespace

TEST_CASE("convolution matches the direct loop") {
  RandomSource rng(1);
  for (const ConvGeometry g : {ConvGeometry{3, 1, 1}, ConvGeometry{3, 2, 1}, ConvGeometry{1, 1, 0}}) {
    const Tensor x = random_tensor(2, 3, 8, 6, rng);
    const Tensor w = random_tensor(4, 3, g.kernel, g.kernel, rng);
    const Tensor b = random_tensor(4, 1, 1, 1, rng);
    const Tensor y = conv2d_forward(x, w, b, g);
    const Tensor ref = naive_conv(x, w, b, g);
    REQUIRE(y.shape == ref.shape);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("convolution gradients match finite differences") {
  RandomSource rng(2);
  for (const ConvGeometry g : {ConvGeometry{3, 1, 1}, ConvGeometry{3, 2, 1}, ConvGeometry{1, 1, 0}}) {
    Tensor x = random_tensor(2, 2, 6, 6, rng);
    Tensor w = random_tensor(3, 2, g.kernel, g.kernel, rng);
    Tensor b = random_tensor(3, 1, 1, 1, rng);
    const Tensor dy = random_tensor(2, 3, g.out_size(6), g.out_size(6), rng);
    Tensor dw(3, 2, g.kernel, g.kernel), db(3, 1, 1, 1);
    const Tensor dx = conv2d_backward(x, w, dy, g, dw, db);
    auto obj = [&] { return dot(conv2d_forward(x, w, b, g), dy); };
    check_gradient(x, obj, dx);
    check_gradient(w, obj, dw);
    check_gradient(b, obj, db);
  }
}

TEST_CASE("conv backward accumulates parameter gradients") {
  RandomSource rng(3);
  const ConvGeometry g{3, 1, 1};
  const Tensor x = random_tensor(1, 2, 4, 4, rng);
  const Tensor w = random_tensor(2, 2, 3, 3, rng);
  const Tensor dy = random_tensor(1, 2, 4, 4, rng);
  Tensor dw1(2, 2, 3, 3), db1(2, 1, 1, 1), dw2(2, 2, 3, 3), db2(2, 1, 1, 1);
  conv2d_backward(x, w, dy, g, dw1, db1);
  conv2d_backward(x, w, dy, g, dw2, db2, false);
  conv2d_backward(x, w, dy, g, dw2, db2, false);
  for (std::size_t i = 0; i < dw1.size(); ++i) CHECK(dw2.data[i] == doctest::Approx(2 * dw1.data[i]));
}

TEST_CASE("relu and its gradient") {
  Tensor x(1, 1, 1, 4);
  x.data = {-1.0, 0.0, 2.0, -3.0};
  const Tensor y = relu_forward(x);
  CHECK(y.data == std::vector<double>{0.0, 0.0, 2.0, 0.0});
  Tensor dy(1, 1, 1, 4, 1.0);
  CHECK(relu_backward(y, dy).data == std::vector<double>{0.0, 0.0, 1.0, 0.0});
  x.data[0] = std::nan("");
  CHECK(std::isnan(relu_forward(x).data[0]));
}

TEST_CASE("bilinear upsampling preserves constants and doubles the size") {
  Tensor x(2, 3, 4, 5, 0.7);
  const Tensor y = upsample2x_forward(x);
  CHECK(y.shape == std::array<int, 4>{2, 3, 8, 10});
  for (double v : y.data) CHECK(v == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("upsampling taps on a ramp") {
  Tensor x(1, 1, 1, 3);
  x.data = {0.0, 1.0, 2.0};
  const Tensor y = upsample2x_forward(x);
  // Output centers map to -0.25, 0.25, 0.75, 1.25, 1.75, 2.25 (clamped at both ends).
  const std::vector<double> expected{0.0, 0.25, 0.75, 1.25, 1.75, 2.0};
  for (int i = 0; i < 6; ++i) CHECK(y.data[static_cast<std::size_t>(i)] == doctest::Approx(expected[static_cast<std::size_t>(i)]));
}

TEST_CASE("upsampling backward is the adjoint of forward") {
  RandomSource rng(4);
  Tensor x = random_tensor(2, 2, 3, 5, rng);
  const Tensor dy = random_tensor(2, 2, 6, 10, rng);
  const Tensor dx = upsample2x_backward(dy);
  check_gradient(x, [&] { return dot(upsample2x_forward(x), dy); }, dx);
}

TEST_CASE("global average pooling is the spatial mean") {
  RandomSource rng(5);
  Tensor x = random_tensor(2, 3, 4, 2, rng);
  const Tensor y = global_avg_pool_forward(x);
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 3; ++c) {
      double s = 0;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 2; ++j) s += x.at(n, c, i, j);
      CHECK(y.at(n, c, 0, 0) == doctest::Approx(s / 8));
    }
  const Tensor dy = random_tensor(2, 3, 1, 1, rng);
  check_gradient(x, [&] { return dot(global_avg_pool_forward(x), dy); }, global_avg_pool_backward(dy, 4, 2));
}

TEST_CASE("linear layer and gradients") {
  RandomSource rng(6);
  Tensor x = random_tensor(3, 4, 1, 1, rng);
  Tensor w = random_tensor(2, 4, 1, 1, rng);
  Tensor b = random_tensor(2, 1, 1, 1, rng);
  const Tensor y = linear_forward(x, w, b);
  for (int n = 0; n < 3; ++n)
    for (int o = 0; o < 2; ++o) {
      double s = b.data[static_cast<std::size_t>(o)];
      for (int i = 0; i < 4; ++i) s += w.at(o, i, 0, 0) * x.at(n, i, 0, 0);
      CHECK(y.at(n, o, 0, 0) == doctest::Approx(s));
    }
  const Tensor dy = random_tensor(3, 2, 1, 1, rng);
  Tensor dw(2, 4, 1, 1), db(2, 1, 1, 1);
  const Tensor dx = linear_backward(x, w, dy, dw, db);
  auto obj = [&] { return dot(linear_forward(x, w, b), dy); };
  check_gradient(x, obj, dx);
  check_gradient(w, obj, dw);
  check_gradient(b, obj, db);
}
