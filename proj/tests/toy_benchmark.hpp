#pragma once

#include <cstdint>
#include <string>

#include "occreid/datamodel.hpp"
#include "occreid/trainer.hpp"

namespace occreid::bench {

// Synthetic two-domain benchmark: a full-body teacher set, and an occluded
// domain with disjoint identities split into a student training half and a
// held-out half (occluded probes against full-body gallery).
struct ToyBenchmark {
  Dataset teacher_train;
  Dataset student_train;
  Dataset probes;
  Dataset gallery;
};

inline constexpr int kTeacherIds = 16;
inline constexpr int kTeacherPerId = 8;
inline constexpr int kOccludedIds = 16;
inline constexpr int kOccludedPerKind = 5;
inline constexpr int kStudentTrainIds = 8;

ToyBenchmark make_toy_benchmark(std::uint64_t seed);

// The ablation variants of the teacher.
enum class Variant { c, c_s, c_s_d, c_s_d_o };
std::string to_string(Variant v);

TrainConfig teacher_config(Variant v, std::uint64_t seed);
TrainConfig student_config(std::uint64_t seed);

// Rank-1 of the model on the benchmark's held-out probes.
double rank1(const CoSaliencyNet& net, const ToyBenchmark& b);

}  // namespace occreid::bench
