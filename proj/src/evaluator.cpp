#include "occreid/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "occreid/errors.hpp"

namespace occreid {

namespace fs = std::filesystem;

Tensor distance_matrix(const Tensor& probe_feats, const Tensor& gallery_feats) {
  const int p = probe_feats.n(), g = gallery_feats.n();
  const std::size_t d = probe_feats.sample_size();
  if (d != gallery_feats.sample_size())
    throw ArgumentError("distance_matrix: feature dimensions differ (" + std::to_string(d) +
                        " vs " + std::to_string(gallery_feats.sample_size()) + ")");
  Tensor dist(p, g, 1, 1);
  for (int i = 0; i < p; ++i) {
    const auto a = probe_feats.sample(i);
    for (int j = 0; j < g; ++j) {
      const auto b = gallery_feats.sample(j);
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = a[k] - b[k];
        s += diff * diff;
      }
      dist.at(i, j) = std::sqrt(s);
    }
  }
  return dist;
}

namespace {

void check_inputs(const Tensor& dist, std::span<const int> probe_ids,
                  std::span<const int> gallery_ids) {
  if (static_cast<std::size_t>(dist.n()) != probe_ids.size() ||
      static_cast<std::size_t>(dist.c()) != gallery_ids.size())
    throw ArgumentError("retrieval: distance matrix shape does not match id lists");
  if (gallery_ids.empty()) throw EvaluationSetupError("retrieval: empty gallery");
  if (probe_ids.empty()) throw EvaluationSetupError("retrieval: no probes");
}

// Gallery indices sorted by (distance, index).
std::vector<int> ranking(const Tensor& dist, int probe) {
  std::vector<int> order(static_cast<std::size_t>(dist.c()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return dist.at(probe, a) < dist.at(probe, b); });
  return order;
}

bool has_match(int id, std::span<const int> gallery_ids) {
  return std::find(gallery_ids.begin(), gallery_ids.end(), id) != gallery_ids.end();
}

}  // namespace

std::vector<double> cmc(const Tensor& dist, std::span<const int> probe_ids,
                        std::span<const int> gallery_ids, int max_rank,
                        std::vector<int>* excluded) {
  check_inputs(dist, probe_ids, gallery_ids);
  if (max_rank < 1) throw ArgumentError("cmc: max_rank must be >= 1");
  const int g = dist.c();
  if (max_rank > g) {
    std::cerr << "warning: max_rank " << max_rank << " exceeds gallery size " << g
              << "; clipped\n";
    max_rank = g;
  }
  std::vector<double> hits(static_cast<std::size_t>(max_rank), 0.0);
  int evaluated = 0;
  for (int i = 0; i < dist.n(); ++i) {
    const int id = probe_ids[static_cast<std::size_t>(i)];
    if (!has_match(id, gallery_ids)) {
      if (excluded) excluded->push_back(i);
      continue;
    }
    ++evaluated;
    const auto order = ranking(dist, i);
    int first = 0;
    while (gallery_ids[static_cast<std::size_t>(order[static_cast<std::size_t>(first)])] != id)
      ++first;
    for (int k = first; k < max_rank; ++k) hits[static_cast<std::size_t>(k)] += 1.0;
  }
  if (evaluated == 0) throw EvaluationSetupError("cmc: no probe has a gallery match");
  for (double& h : hits) h /= evaluated;
  return hits;
}

std::pair<double, std::vector<double>> mean_average_precision(const Tensor& dist,
                                                              std::span<const int> probe_ids,
                                                              std::span<const int> gallery_ids) {
  check_inputs(dist, probe_ids, gallery_ids);
  std::vector<double> aps;
  for (int i = 0; i < dist.n(); ++i) {
    const int id = probe_ids[static_cast<std::size_t>(i)];
    if (!has_match(id, gallery_ids)) continue;
    const auto order = ranking(dist, i);
    double sum = 0.0;
    int found = 0;
    for (std::size_t r = 0; r < order.size(); ++r) {
      if (gallery_ids[static_cast<std::size_t>(order[r])] != id) continue;
      ++found;
      sum += static_cast<double>(found) / static_cast<double>(r + 1);
    }
    aps.push_back(sum / found);
  }
  if (aps.empty()) throw EvaluationSetupError("mAP: no probe has a gallery match");
  const double map = std::accumulate(aps.begin(), aps.end(), 0.0) / static_cast<double>(aps.size());
  return {map, std::move(aps)};
}

RetrievalResult evaluate_retrieval(const Tensor& dist, std::span<const int> probe_ids,
                                   std::span<const int> gallery_ids, int max_rank) {
  RetrievalResult r;
  r.cmc = cmc(dist, probe_ids, gallery_ids, max_rank, &r.excluded_probes);
  std::tie(r.map, r.per_probe_ap) = mean_average_precision(dist, probe_ids, gallery_ids);
  return r;
}

double f_measure(double precision, double recall, double beta2) {
  const double denom = beta2 * precision + recall;
  if (denom <= 0.0) return 0.0;
  return (1.0 + beta2) * precision * recall / denom;
}

SaliencyScore saliency_metrics(std::span<const Raster> pred_masks, std::span<const Raster> gt_masks,
                               double threshold) {
  if (pred_masks.size() != gt_masks.size())
    throw ArgumentError("saliency_metrics: prediction and ground-truth counts differ");
  if (pred_masks.empty()) throw ArgumentError("saliency_metrics: no masks");
  SaliencyScore s;
  s.threshold = threshold;
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred_masks.size(); ++i) {
    const Raster& p = pred_masks[i];
    const Raster& g = gt_masks[i];
    if (!p.same_size(g) || p.channels != 1 || g.channels != 1)
      throw ArgumentError("saliency_metrics: shape mismatch for pair " + std::to_string(i));
    double itp = 0, ifp = 0, ifn = 0;
    for (std::size_t k = 0; k < p.data.size(); ++k) {
      const bool pred = p.data[k] >= threshold;
      const bool truth = g.data[k] >= 0.5f;
      itp += pred && truth;
      ifp += pred && !truth;
      ifn += !pred && truth;
    }
    const double ip = itp + ifp > 0 ? itp / (itp + ifp) : 0.0;
    const double ir = itp + ifn > 0 ? itp / (itp + ifn) : 0.0;
    s.macro_precision += ip;
    s.macro_recall += ir;
    s.macro_f_measure += f_measure(ip, ir);
    tp += itp;
    fp += ifp;
    fn += ifn;
  }
  const double n = static_cast<double>(pred_masks.size());
  s.macro_precision /= n;
  s.macro_recall /= n;
  s.macro_f_measure /= n;
  s.zero_denominator = (tp + fp == 0) || (tp + fn == 0);
  s.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  s.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  s.f_measure = f_measure(s.precision, s.recall);
  return s;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::vector<fs::path> emit_report(const EvaluationReport& report, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    throw IoError("cannot create report directory " + out_dir.string());
  std::vector<fs::path> written;
  nlohmann::ordered_json metrics;
  if (report.retrieval) {
    const auto& r = *report.retrieval;
    metrics["cmc"] = r.cmc;
    metrics["map"] = r.map;
    for (int k : {1, 5, 10})
      if (static_cast<std::size_t>(k) <= r.cmc.size())
        metrics["rank" + std::to_string(k)] = r.cmc[static_cast<std::size_t>(k - 1)];
    metrics["evaluated_probes"] = r.per_probe_ap.size();
    metrics["excluded_probes"] = r.excluded_probes;

    std::string cmc_csv = "rank,accuracy\n";
    for (std::size_t k = 0; k < r.cmc.size(); ++k)
      cmc_csv += std::to_string(k + 1) + "," + fmt_double(r.cmc[k]) + "\n";
    write_text(out_dir / "cmc_curve.csv", cmc_csv);
    written.push_back(out_dir / "cmc_curve.csv");

    std::string ap_csv = "probe,ap\n";
    // Probe column holds the original probe index; excluded probes are skipped.
    std::size_t probe = 0;
    for (double ap : r.per_probe_ap) {
      while (std::find(r.excluded_probes.begin(), r.excluded_probes.end(), static_cast<int>(probe)) !=
             r.excluded_probes.end())
        ++probe;
      ap_csv += std::to_string(probe) + "," + fmt_double(ap) + "\n";
      ++probe;
    }
    write_text(out_dir / "per_probe_ap.csv", ap_csv);
    written.push_back(out_dir / "per_probe_ap.csv");
  }
  if (report.saliency) {
    const auto& s = *report.saliency;
    metrics["saliency"] = {{"precision", s.precision},
                           {"recall", s.recall},
                           {"f_measure", s.f_measure},
                           {"macro_precision", s.macro_precision},
                           {"macro_recall", s.macro_recall},
                           {"macro_f_measure", s.macro_f_measure},
                           {"threshold", s.threshold},
                           {"beta2", kFMeasureBeta2},
                           {"zero_denominator", s.zero_denominator}};
  }
  for (const auto& [k, v] : report.extra) metrics[k] = v;
  write_text(out_dir / "metrics.json", metrics.dump(2) + "\n");
  written.push_back(out_dir / "metrics.json");

  if (!report.saliency_maps.empty()) {
    for (const auto& [name, map] : report.saliency_maps) {
      const fs::path path = out_dir / "saliency_maps" / (name + ".png");
      fs::create_directories(path.parent_path());
      write_png(path, map);
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace occreid
