#include "occreid/tensor.hpp"

#include <cmath>

namespace occreid {

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_string() const {
  return std::to_string(shape[0]) + "x" + std::to_string(shape[1]) + "x" +
         std::to_string(shape[2]) + "x" + std::to_string(shape[3]);
}

double squared_norm(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data) s += v * v;
  return s;
}

}  // namespace occreid
