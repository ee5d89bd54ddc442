#pragma once

// Forward/backward kernels for the layers used by the co-saliency network.
// Backward functions accumulate (+=) into parameter gradients and return the
// gradient with respect to the layer input.

#include "occreid/tensor.hpp"

namespace occreid::nn {

struct ConvGeometry {
  int kernel = 3;
  int stride = 1;
  int pad = 1;

  int out_size(int in) const { return (in + 2 * pad - kernel) / stride + 1; }
};

// weight: (out, in, k, k); bias: (out, 1, 1, 1).
Tensor conv2d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias,
                      const ConvGeometry& g);
// When need_input_grad is false the returned tensor is empty.
Tensor conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& dy,
                       const ConvGeometry& g, Tensor& dweight, Tensor& dbias,
                       bool need_input_grad = true);

Tensor relu_forward(const Tensor& x);
// Uses the forward output: gradient passes where y > 0.
Tensor relu_backward(const Tensor& y, const Tensor& dy);

// Bilinear x2 upsampling with half-pixel centers and edge clamping.
Tensor upsample2x_forward(const Tensor& x);
Tensor upsample2x_backward(const Tensor& dy);

// (N, C, H, W) -> (N, C, 1, 1) mean over spatial positions.
Tensor global_avg_pool_forward(const Tensor& x);
Tensor global_avg_pool_backward(const Tensor& dy, int h, int w);

// x: (N, in, 1, 1); weight: (out, in, 1, 1); bias: (out, 1, 1, 1). Returns (N, out, 1, 1).
Tensor linear_forward(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor linear_backward(const Tensor& x, const Tensor& weight, const Tensor& dy, Tensor& dweight,
                       Tensor& dbias);

Tensor add(const Tensor& a, const Tensor& b);

}  // namespace occreid::nn
