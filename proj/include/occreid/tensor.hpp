#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace occreid {

// Dense NCHW tensor of doubles. Matrices use shape (rows, cols, 1, 1).
struct Tensor {
  std::array<int, 4> shape{0, 0, 0, 0};
  std::vector<double> data;

  Tensor() = default;
  Tensor(int n, int c, int h, int w, double fill = 0.0)
      : shape{n, c, h, w}, data(static_cast<std::size_t>(n) * c * h * w, fill) {}

  int n() const { return shape[0]; }
  int c() const { return shape[1]; }
  int h() const { return shape[2]; }
  int w() const { return shape[3]; }
  std::size_t size() const { return data.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(shape[2]) * shape[3]; }
  std::size_t sample_size() const { return static_cast<std::size_t>(shape[1]) * plane(); }

  double& at(int in, int ic, int iy, int ix) {
    return data[((static_cast<std::size_t>(in) * shape[1] + ic) * shape[2] + iy) * shape[3] + ix];
  }
  double at(int in, int ic, int iy, int ix) const {
    return data[((static_cast<std::size_t>(in) * shape[1] + ic) * shape[2] + iy) * shape[3] + ix];
  }
  // Row-major 2-D access for (rows, cols, 1, 1) tensors.
  double& at(int row, int col) { return data[static_cast<std::size_t>(row) * shape[1] + col]; }
  double at(int row, int col) const { return data[static_cast<std::size_t>(row) * shape[1] + col]; }

  std::span<double> sample(int in) { return {data.data() + in * sample_size(), sample_size()}; }
  std::span<const double> sample(int in) const {
    return {data.data() + in * sample_size(), sample_size()};
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  void fill(double v) { std::fill(data.begin(), data.end(), v); }
  bool all_finite() const;
  std::string shape_string() const;

  bool operator==(const Tensor&) const = default;
};

double squared_norm(const Tensor& t);

}  // namespace occreid
