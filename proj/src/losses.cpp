#include "occreid/losses.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "occreid/errors.hpp"

namespace occreid {

void LossWeights::validate(bool allow_override) const {
  for (auto [name, v] : {std::pair{"alpha", alpha}, std::pair{"beta", beta}}) {
    if (!(v >= 0.0 && v <= 1.0))
      throw ConfigError(std::string("loss weight ") + name + " must lie in [0, 1]");
    const bool unusual = v < 0.5 || v >= 1.0;
    if (unusual && !allow_override)
      throw ConfigError(std::string("loss weight ") + name + "=" + std::to_string(v) +
                        " outside [0.5, 1); set allow_override to use it");
    if (unusual)
      std::cerr << "warning: loss weight " << name << "=" << v << " outside [0.5, 1)\n";
  }
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels, Tensor* grad,
                             const char* what) {
  const int b = logits.n(), c = logits.c();
  if (b == 0) throw ArgumentError(std::string(what) + ": empty batch");
  if (static_cast<int>(labels.size()) != b)
    throw ArgumentError(std::string(what) + ": label count does not match batch");
  if (grad) *grad = Tensor(b, c, 1, 1);
  double total = 0.0;
  for (int i = 0; i < b; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= c)
      throw ArgumentError(std::string(what) + ": label " + std::to_string(y) + " outside [0, " +
                          std::to_string(c) + ")");
    double m = logits.at(i, 0);
    for (int k = 1; k < c; ++k) m = std::max(m, logits.at(i, k));
    double z = 0.0;
    for (int k = 0; k < c; ++k) z += std::exp(logits.at(i, k) - m);
    const double log_z = m + std::log(z);
    total += log_z - logits.at(i, y);
    if (grad) {
      for (int k = 0; k < c; ++k)
        grad->at(i, k) = (std::exp(logits.at(i, k) - log_z) - (k == y ? 1.0 : 0.0)) / b;
    }
  }
  return total / b;
}

}  // namespace

double identity_loss(const Tensor& logits, std::span<const int> labels, Tensor* grad) {
  return softmax_cross_entropy(logits, labels, grad, "identity_loss");
}

double obc_loss(const Tensor& logits, std::span<const int> labels, Tensor* grad) {
  if (logits.c() != 2) throw ArgumentError("obc_loss: logits must have 2 columns");
  return softmax_cross_entropy(logits, labels, grad, "obc_loss");
}

double saliency_loss(const Tensor& logits, const Tensor& targets, Tensor* grad) {
  if (!logits.same_shape(targets))
    throw ArgumentError("saliency_loss: logits " + logits.shape_string() +
                        " and targets " + targets.shape_string() + " differ");
  if (logits.size() == 0) throw ArgumentError("saliency_loss: empty input");
  const double inv_n = 1.0 / static_cast<double>(logits.size());
  if (grad) *grad = Tensor(logits.n(), logits.c(), logits.h(), logits.w());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double x = logits.data[i];
    const double t = targets.data[i];
    // max(x, 0) - x t + log(1 + exp(-|x|))
    total += std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::abs(x)));
    if (grad) grad->data[i] = (sigmoid(x) - t) * inv_n;
  }
  return total * inv_n;
}

double multitask_loss(double identity, double obc, const LossWeights& w) {
  return w.beta * identity + (1.0 - w.beta) * obc;
}

LossBreakdown total_loss(std::span<const DomainTerms> per_domain, const LossWeights& w) {
  if (per_domain.empty() || per_domain.size() > 2)
    throw ArgumentError("total_loss: expects one or two domain contributions");
  LossBreakdown out;
  for (const auto& d : per_domain) {
    const double m = multitask_loss(d.identity, d.obc, w);
    out.identity += d.identity;
    out.obc += d.obc;
    out.saliency += d.saliency;
    out.multitask += m;
    out.total += w.alpha * m + (1.0 - w.alpha) * d.saliency;
  }
  return out;
}

}  // namespace occreid
