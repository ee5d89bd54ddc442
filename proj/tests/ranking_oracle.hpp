#pragma once

// Exhaustive reference for CMC and AP: ranks are counted by pairwise
// comparison instead of sorting.

#include <algorithm>
#include <span>
#include <vector>

#include "occreid/tensor.hpp"

namespace occreid::oracle {

// 1-based rank of gallery item j for probe i under (distance, index) order.
inline int rank_of(const Tensor& dist, int i, int j) {
  int r = 1;
  for (int k = 0; k < dist.c(); ++k) {
    if (k == j) continue;
    const double dk = dist.at(i, k), dj = dist.at(i, j);
    if (dk < dj || (dk == dj && k < j)) ++r;
  }
  return r;
}

struct Reference {
  std::vector<double> cmc;
  double map = 0.0;
  std::vector<double> aps;
  int evaluated = 0;
};

inline Reference brute_force(const Tensor& dist, std::span<const int> probe_ids,
                             std::span<const int> gallery_ids, int max_rank) {
  Reference ref;
  const int g = dist.c();
  max_rank = std::min(max_rank, g);
  std::vector<int> hits(static_cast<std::size_t>(max_rank), 0);
  for (int i = 0; i < dist.n(); ++i) {
    std::vector<int> relevant_ranks;
    for (int j = 0; j < g; ++j)
      if (gallery_ids[static_cast<std::size_t>(j)] == probe_ids[static_cast<std::size_t>(i)])
        relevant_ranks.push_back(rank_of(dist, i, j));
    if (relevant_ranks.empty()) continue;
    // Accumulate in rank order so the sum is reproducible term by term.
    std::sort(relevant_ranks.begin(), relevant_ranks.end());
    ++ref.evaluated;
    const int best = *std::min_element(relevant_ranks.begin(), relevant_ranks.end());
    for (int k = 1; k <= max_rank; ++k)
      if (best <= k) ++hits[static_cast<std::size_t>(k - 1)];
    double ap = 0;
    for (int r : relevant_ranks) {
      int better = 0;
      for (int q : relevant_ranks) better += q <= r;
      ap += static_cast<double>(better) / r;
    }
    ap /= static_cast<double>(relevant_ranks.size());
    ref.aps.push_back(ap);
  }
  for (int h : hits) ref.cmc.push_back(ref.evaluated ? static_cast<double>(h) / ref.evaluated : 0.0);
  double s = 0;
  for (double a : ref.aps) s += a;
  ref.map = ref.aps.empty() ? 0.0 : s / static_cast<double>(ref.aps.size());
  return ref;
}

}  // namespace occreid::oracle
