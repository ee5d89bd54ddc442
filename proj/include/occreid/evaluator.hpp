#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "occreid/image.hpp"
#include "occreid/tensor.hpp"

namespace occreid {

// Row-major (P, G) matrix of Euclidean distances between probe rows and
// gallery rows. Features are (N, d, 1, 1) tensors.
Tensor distance_matrix(const Tensor& probe_feats, const Tensor& gallery_feats);

struct RetrievalResult {
  std::vector<double> cmc;           // rank-k accuracy, k = 1..max_rank
  double map = 0.0;
  std::vector<double> per_probe_ap;  // evaluated probes only, in probe order
  std::vector<int> excluded_probes;  // probe indices without any gallery match
};

// Rank-k accuracy with gallery sorted by ascending distance, ties broken by
// gallery index. Probes whose identity is missing from the gallery are left
// out and listed in `excluded`. max_rank > G is clipped with a warning.
std::vector<double> cmc(const Tensor& dist, std::span<const int> probe_ids,
                        std::span<const int> gallery_ids, int max_rank,
                        std::vector<int>* excluded = nullptr);

// Per-probe AP is the mean, over relevant gallery items, of the precision at
// their rank. Returns {mAP, per-probe AP}.
std::pair<double, std::vector<double>> mean_average_precision(const Tensor& dist,
                                                              std::span<const int> probe_ids,
                                                              std::span<const int> gallery_ids);

RetrievalResult evaluate_retrieval(const Tensor& dist, std::span<const int> probe_ids,
                                   std::span<const int> gallery_ids, int max_rank);

inline constexpr double kFMeasureBeta2 = 0.3;

// (1 + b2) P R / (b2 P + R); 0 when the denominator is 0.
double f_measure(double precision, double recall, double beta2 = kFMeasureBeta2);

struct SaliencyScore {
  // Micro: pixel counts pooled over all pairs.
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  // Macro: per-image scores averaged.
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f_measure = 0.0;
  double threshold = 0.5;
  bool zero_denominator = false;  // some micro ratio had a zero denominator
};

// Predictions are binarized with pred >= threshold; ground truth with gt >= 0.5.
SaliencyScore saliency_metrics(std::span<const Raster> pred_masks, std::span<const Raster> gt_masks,
                               double threshold = 0.5);

struct EvaluationReport {
  std::optional<RetrievalResult> retrieval;
  std::optional<SaliencyScore> saliency;
  std::map<std::string, double> extra;                   // additional scalars
  std::vector<std::pair<std::string, Raster>> saliency_maps;  // relative name, map
};

// Writes metrics.json, and when retrieval is present cmc_curve.csv and
// per_probe_ap.csv; saliency maps go to saliency_maps/<name>.png. Output is
// byte-identical for identical inputs.
std::vector<std::filesystem::path> emit_report(const EvaluationReport& report,
                                               const std::filesystem::path& out_dir);

}  // namespace occreid
