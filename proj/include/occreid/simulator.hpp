#pragma once

#include <utility>

#include "occreid/datamodel.hpp"

namespace occreid {

enum class ScheduleMode { constant_0, constant_1, growing };
enum class OccluderOrigin { border_crop, solid, noise };

std::string_view to_string(ScheduleMode m);
std::string_view to_string(OccluderOrigin o);
ScheduleMode parse_schedule_mode(std::string_view s);
OccluderOrigin parse_occluder_origin(std::string_view s);

struct OcclusionSchedule {
  int epoch_max = 30;
  ScheduleMode mode = ScheduleMode::growing;
};

// growing: epoch / epoch_max; constant modes: 0 or 1. Throws ArgumentError
// for epochs outside [0, epoch_max].
double schedule_probability(int epoch, const OcclusionSchedule& schedule);

struct OccluderPatch {
  Raster pixels;  // 3 x h x w
  OccluderOrigin origin = OccluderOrigin::noise;
};

struct SimulatorConfig {
  double area_lo = 0.1;
  double area_hi = 0.4;
  OccluderOrigin bank_mode = OccluderOrigin::border_crop;
  int max_retries = 16;

  void validate() const;
};

// Donor images for border-crop patches. Holds a reference; the dataset must
// outlive the bank.
struct OccluderBank {
  const Dataset* donors = nullptr;
  SimulatorConfig config;
};

// Draws an occluder whose area is a fraction in [area_lo, area_hi] of a
// target_h x target_w image. border_crop patches come from a donor's margins,
// outside the donor mask's bounding box; when no donor can host the patch the
// sampler falls back to a noise patch (and says so on stderr).
OccluderPatch sample_occluder(const OccluderBank& bank, int target_h, int target_w,
                              RandomSource& rng);

// Pastes the patch at a uniformly drawn position, zeroes the same rectangle
// of the mask, marks the record occluded. The input is not modified.
ImageRecord apply_occlusion(const ImageRecord& record, const OccluderPatch& patch,
                            RandomSource& rng);

// Same, at an explicit top-left corner.
ImageRecord apply_occlusion_at(const ImageRecord& record, const OccluderPatch& patch, int top,
                               int left);

// round(p * n) with ties rounded up.
std::size_t occluded_count(double p, std::size_t n);

// Shuffles the dataset and replaces exactly occluded_count(p, N) records with
// occluded variants; the rest keep obc = 0.
Dataset simulate_epoch(const Dataset& dataset, double p, const OccluderBank& bank,
                       RandomSource& rng);

}  // namespace occreid
