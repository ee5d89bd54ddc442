#pragma once

#include <span>
#include <vector>

#include "occreid/tensor.hpp"

namespace occreid {

// alpha blends the classification branch against the saliency branch,
// beta blends identity against OBC inside the classification branch.
struct LossWeights {
  double alpha = 0.8;
  double beta = 0.8;

  // Both weights must lie in [0, 1]. Values below 0.5 are rejected unless
  // allow_override is set, in which case a warning is printed. Values of
  // exactly 1 (an ablated term) also require allow_override.
  void validate(bool allow_override = false) const;
};

struct LossBreakdown {
  double identity = 0.0;
  double saliency = 0.0;
  double obc = 0.0;
  double multitask = 0.0;
  double total = 0.0;
};

// Mean softmax cross-entropy over the batch. logits: (B, C, 1, 1).
// If grad is non-null it receives dLoss/dlogits.
double identity_loss(const Tensor& logits, std::span<const int> labels, Tensor* grad = nullptr);

// Mean two-class softmax cross-entropy. logits: (B, 2, 1, 1), labels in {0,1}.
double obc_loss(const Tensor& logits, std::span<const int> labels, Tensor* grad = nullptr);

// Mean binary cross-entropy between sigmoid(logits) and targets in [0, 1]
// over all pixels and the batch. Targets may be soft.
double saliency_loss(const Tensor& logits, const Tensor& targets, Tensor* grad = nullptr);

// beta * identity + (1 - beta) * obc.
double multitask_loss(double identity, double obc, const LossWeights& w);

struct DomainTerms {
  double identity = 0.0;
  double obc = 0.0;
  double saliency = 0.0;
};

// Sums alpha * multitask_d + (1 - alpha) * saliency_d over the given domains
// (one or two). Breakdown component fields hold the sums of the per-domain
// components, so the blend equalities hold for the totals too.
LossBreakdown total_loss(std::span<const DomainTerms> per_domain, const LossWeights& w);

double sigmoid(double x);

}  // namespace occreid
