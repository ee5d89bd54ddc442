#include "occreid/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "occreid/errors.hpp"

namespace occreid {

std::string_view to_string(ScheduleMode m) {
  switch (m) {
    case ScheduleMode::constant_0: return "constant_0";
    case ScheduleMode::constant_1: return "constant_1";
    case ScheduleMode::growing: return "growing";
  }
  return "growing";
}

std::string_view to_string(OccluderOrigin o) {
  switch (o) {
    case OccluderOrigin::border_crop: return "border_crop";
    case OccluderOrigin::solid: return "solid";
    case OccluderOrigin::noise: return "noise";
  }
  return "noise";
}

ScheduleMode parse_schedule_mode(std::string_view s) {
  if (s == "constant_0") return ScheduleMode::constant_0;
  if (s == "constant_1") return ScheduleMode::constant_1;
  if (s == "growing") return ScheduleMode::growing;
  throw ConfigError("unknown schedule mode '" + std::string(s) + "'");
}

OccluderOrigin parse_occluder_origin(std::string_view s) {
  if (s == "border_crop") return OccluderOrigin::border_crop;
  if (s == "solid") return OccluderOrigin::solid;
  if (s == "noise") return OccluderOrigin::noise;
  throw ConfigError("unknown occluder origin '" + std::string(s) + "'");
}

double schedule_probability(int epoch, const OcclusionSchedule& schedule) {
  if (schedule.epoch_max <= 0) throw ArgumentError("schedule: epoch_max must be positive");
  if (epoch < 0 || epoch > schedule.epoch_max)
    throw ArgumentError("schedule: epoch " + std::to_string(epoch) + " outside [0, " +
                        std::to_string(schedule.epoch_max) + "]");
  switch (schedule.mode) {
    case ScheduleMode::constant_0: return 0.0;
    case ScheduleMode::constant_1: return 1.0;
    case ScheduleMode::growing:
      return static_cast<double>(epoch) / static_cast<double>(schedule.epoch_max);
  }
  return 0.0;
}

void SimulatorConfig::validate() const {
  if (!(area_lo > 0.0 && area_lo <= area_hi && area_hi < 1.0))
    throw ConfigError("simulator: area fraction range must satisfy 0 < lo <= hi < 1");
  if (max_retries < 1) throw ConfigError("simulator: max_retries must be >= 1");
}

namespace {

struct PatchSize {
  int height;
  int width;
};

constexpr double kMaxAspect = 3.0;

// Picks w and h = round(area / w) with h <= h_max, w <= w_max, preferring
// aspect ratios within [1/kMaxAspect, kMaxAspect]. Returns {0, 0} if the
// area cannot fit.
PatchSize size_for_area(double area, int h_max, int w_max, RandomSource& rng) {
  int w_min = std::max(1, static_cast<int>(std::ceil(area / h_max)));
  if (w_min > w_max) return {0, 0};
  const int w_lo = std::max(w_min, static_cast<int>(std::ceil(std::sqrt(area / kMaxAspect))));
  const int w_hi = std::min(w_max, static_cast<int>(std::floor(std::sqrt(area * kMaxAspect))));
  int hi = w_max;
  if (w_lo <= w_hi) {
    w_min = w_lo;
    hi = w_hi;
  }
  const int w = static_cast<int>(rng.uniform_int(w_min, hi));
  const int h = std::clamp(static_cast<int>(std::lround(area / w)), 1, h_max);
  return {h, w};
}

OccluderPatch solid_patch(PatchSize size, RandomSource& rng) {
  OccluderPatch patch{Raster(3, size.height, size.width), OccluderOrigin::solid};
  for (int c = 0; c < 3; ++c) {
    const float v = quantize_unit(static_cast<float>(rng.uniform()));
    for (int y = 0; y < size.height; ++y)
      for (int x = 0; x < size.width; ++x) patch.pixels.at(c, y, x) = v;
  }
  return patch;
}

OccluderPatch noise_patch(PatchSize size, RandomSource& rng) {
  OccluderPatch patch{Raster(3, size.height, size.width), OccluderOrigin::noise};
  for (float& v : patch.pixels.data) v = quantize_unit(static_cast<float>(rng.uniform()));
  return patch;
}

// Margin strips of a donor that avoid its mask bounding box.
std::vector<Rect> donor_margins(const ImageRecord& donor) {
  const int h = donor.height(), w = donor.width();
  const Rect box = bounding_box(donor.mask);
  if (box.height == 0) return {{0, 0, h, w}};
  std::vector<Rect> strips;
  if (box.left > 0) strips.push_back({0, 0, h, box.left});
  if (box.left + box.width < w) strips.push_back({0, box.left + box.width, h, w - box.left - box.width});
  if (box.top > 0) strips.push_back({0, 0, box.top, w});
  if (box.top + box.height < h) strips.push_back({box.top + box.height, 0, h - box.top - box.height, w});
  return strips;
}

}  // namespace

OccluderPatch sample_occluder(const OccluderBank& bank, int target_h, int target_w,
                              RandomSource& rng) {
  const SimulatorConfig& cfg = bank.config;
  cfg.validate();
  if (target_h <= 0 || target_w <= 0) throw ArgumentError("sample_occluder: empty target");
  const double area = rng.uniform(cfg.area_lo, cfg.area_hi) * target_h * target_w;

  if (cfg.bank_mode == OccluderOrigin::solid)
    return solid_patch(size_for_area(area, target_h, target_w, rng), rng);
  if (cfg.bank_mode == OccluderOrigin::noise)
    return noise_patch(size_for_area(area, target_h, target_w, rng), rng);

  if (bank.donors == nullptr || bank.donors->empty())
    throw ArgumentError("sample_occluder: border_crop needs a non-empty donor bank");
  const auto& donors = bank.donors->records;
  for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
    const auto& donor = donors[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(donors.size()) - 1))];
    auto strips = donor_margins(donor);
    // Keep strips large enough to host the patch.
    std::erase_if(strips, [&](const Rect& r) { return r.area() < area; });
    if (strips.empty()) continue;
    const Rect strip = strips[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(strips.size()) - 1))];
    const PatchSize size = size_for_area(area, std::min(strip.height, target_h),
                                         std::min(strip.width, target_w), rng);
    if (size.height == 0) continue;
    const int top = strip.top + static_cast<int>(rng.uniform_int(0, strip.height - size.height));
    const int left = strip.left + static_cast<int>(rng.uniform_int(0, strip.width - size.width));
    return {crop(donor.image, {top, left, size.height, size.width}), OccluderOrigin::border_crop};
  }
  std::cerr << "simulator: no donor margin fits a " << area
            << " px patch; falling back to a noise patch\n";
  return noise_patch(size_for_area(area, target_h, target_w, rng), rng);
}

ImageRecord apply_occlusion_at(const ImageRecord& record, const OccluderPatch& patch, int top,
                               int left) {
  const int ph = patch.pixels.height, pw = patch.pixels.width;
  if (ph <= 0 || pw <= 0 || ph > record.height() || pw > record.width())
    throw ArgumentError("apply_occlusion: patch " + std::to_string(ph) + "x" + std::to_string(pw) +
                        " does not fit image " + std::to_string(record.height()) + "x" +
                        std::to_string(record.width()));
  if (top < 0 || left < 0 || top + ph > record.height() || left + pw > record.width())
    throw ArgumentError("apply_occlusion: patch position outside image");
  ImageRecord out = record;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < ph; ++y)
      for (int x = 0; x < pw; ++x) out.image.at(c, top + y, left + x) = patch.pixels.at(c, y, x);
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x) out.mask.at(0, top + y, left + x) = 0.0f;
  out.obc = 1;
  out.domain = Domain::simulated_occluded;
  out.occluder = Rect{top, left, ph, pw};
  return out;
}

ImageRecord apply_occlusion(const ImageRecord& record, const OccluderPatch& patch,
                            RandomSource& rng) {
  const int ph = patch.pixels.height, pw = patch.pixels.width;
  if (ph <= 0 || pw <= 0 || ph > record.height() || pw > record.width())
    return apply_occlusion_at(record, patch, 0, 0);  // throws with the size message
  const int top = static_cast<int>(rng.uniform_int(0, record.height() - ph));
  const int left = static_cast<int>(rng.uniform_int(0, record.width() - pw));
  return apply_occlusion_at(record, patch, top, left);
}

std::size_t occluded_count(double p, std::size_t n) {
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("occlusion probability outside [0,1]");
  // Guard against p*n landing a hair below an integer.
  const double scaled = p * static_cast<double>(n);
  const double k = std::floor(scaled + 0.5 + 1e-9);
  return std::min(n, static_cast<std::size_t>(k));
}

Dataset simulate_epoch(const Dataset& dataset, double p, const OccluderBank& bank,
                       RandomSource& rng) {
  const std::size_t n = dataset.size();
  const std::size_t k = occluded_count(p, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<ImageRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ImageRecord& src = dataset.records[order[i]];
    if (i < k) {
      const OccluderPatch patch = sample_occluder(bank, src.height(), src.width(), rng);
      out.push_back(apply_occlusion(src, patch, rng));
    } else {
      ImageRecord kept = src;
      kept.obc = 0;
      out.push_back(std::move(kept));
    }
  }
  // The selected subset is the first k of a fresh permutation; reshuffle so
  // occluded records are not grouped at the front.
  rng.shuffle(std::span<ImageRecord>(out));
  Dataset result;
  result.records = std::move(out);
  result.identities = dataset.identities;
  result.domain_tag = dataset.domain_tag;
  return result;
}

}  // namespace occreid
