#include <doctest.h>

#include <set>

#include <algorithm>
#include <map>

#include "occreid/datamodel.hpp"
#include "occreid/errors.hpp"
#include "occreid/simulator.hpp"

using namespace occreid;

namespace {

Dataset toy(int ids, int per_id, std::uint64_t seed) {
  ToyConfig c;
  c.n_identities = ids;
  c.images_per_identity = per_id;
  return generate_toy_dataset(c, seed);
}

std::map<int, int> histogram(const Dataset& d) {
  std::map<int, int> h;
  for (const auto& r : d.records) ++h[r.identity];
  return h;
}

}  // namespace

TEST_CASE("growing schedule follows epoch over epoch_max") {
  const OcclusionSchedule s{50, ScheduleMode::growing};
  CHECK(schedule_probability(0, s) == 0.0);
  CHECK(schedule_probability(25, s) == 0.5);
  CHECK(schedule_probability(50, s) == 1.0);
  double prev = -1.0;
  for (int e = 0; e <= 50; ++e) {
    const double p = schedule_probability(e, s);
    CHECK(p >= prev);
    CHECK(p == static_cast<double>(e) / 50.0);
    prev = p;
  }
  CHECK_THROWS_AS(schedule_probability(51, s), ArgumentError);
  CHECK_THROWS_AS(schedule_probability(-1, s), ArgumentError);
}

TEST_CASE("constant schedules") {
  CHECK(schedule_probability(7, {10, ScheduleMode::constant_0}) == 0.0);
  CHECK(schedule_probability(7, {10, ScheduleMode::constant_1}) == 1.0);
  CHECK(parse_schedule_mode("growing") == ScheduleMode::growing);
  CHECK_THROWS_AS(parse_schedule_mode("sometimes"), ConfigError);
}

TEST_CASE("simulator config validation") {
  SimulatorConfig c;
  CHECK_NOTHROW(c.validate());
  c.area_lo = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimulatorConfig{};
  c.area_lo = 0.5;
  c.area_hi = 0.4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimulatorConfig{};
  c.area_hi = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("solid patch area matches the configured fraction") {
  OccluderBank bank;
  bank.config.bank_mode = OccluderOrigin::solid;
  bank.config.area_lo = bank.config.area_hi = 0.1;
  RandomSource rng(1);
  for (int i = 0; i < 100; ++i) {
    const OccluderPatch p = sample_occluder(bank, 64, 64, rng);
    CHECK(p.origin == OccluderOrigin::solid);
    const int h = p.pixels.height, w = p.pixels.width;
    // h = round(409.6 / w): within half a row of width w.
    CHECK(std::abs(h * w - 409.6) <= 0.5 * w + 1e-9);
  }
}

TEST_CASE("sampled area fractions stay in range") {
  const Dataset donors = toy(4, 4, 2);
  for (auto mode : {OccluderOrigin::solid, OccluderOrigin::noise, OccluderOrigin::border_crop}) {
    OccluderBank bank{&donors, SimulatorConfig{}};
    bank.config.bank_mode = mode;
    RandomSource rng(3);
    for (int i = 0; i < 1000; ++i) {
      const OccluderPatch p = sample_occluder(bank, 64, 64, rng);
      const int h = p.pixels.height, w = p.pixels.width;
      REQUIRE(h > 0);
      REQUIRE(w > 0);
      REQUIRE(h <= 64);
      REQUIRE(w <= 64);
      const double frac = static_cast<double>(h * w) / (64.0 * 64.0);
      // Rounding slack of half a row of the patch width.
      const double slack = 0.5 * w / (64.0 * 64.0) + 1e-12;
      REQUIRE(frac >= 0.1 - slack);
      REQUIRE(frac <= 0.4 + slack);
      for (float v : p.pixels.data) REQUIRE((v >= 0.0f && v <= 1.0f));
    }
  }
}

TEST_CASE("border crops come from outside the donor figure") {
  const Dataset donors = toy(3, 3, 4);
  OccluderBank bank{&donors, SimulatorConfig{}};
  bank.config.area_lo = 0.05;
  bank.config.area_hi = 0.08;
  RandomSource rng(5);
  int border = 0;
  for (int i = 0; i < 100; ++i) border += sample_occluder(bank, 64, 64, rng).origin == OccluderOrigin::border_crop;
  CHECK(border == 100);
}

TEST_CASE("border crop without donors is an argument error") {
  OccluderBank bank;
  RandomSource rng(0);
  CHECK_THROWS_AS(sample_occluder(bank, 64, 64, rng), ArgumentError);
}

TEST_CASE("sampling is deterministic for a fixed seed") {
  const Dataset donors = toy(3, 3, 6);
  const OccluderBank bank{&donors, SimulatorConfig{}};
  RandomSource a(8), b(8);
  for (int i = 0; i < 20; ++i) {
    const OccluderPatch pa = sample_occluder(bank, 64, 64, a);
    const OccluderPatch pb = sample_occluder(bank, 64, 64, b);
    CHECK(pa.pixels == pb.pixels);
  }
}

TEST_CASE("apply_occlusion at a known rectangle") {
  const Dataset d = toy(2, 2, 1);
  const ImageRecord& in = d.records[0];
  OccluderPatch patch{Raster(3, 10, 10, 0.25f), OccluderOrigin::solid};
  const ImageRecord out = apply_occlusion_at(in, patch, 10, 5);
  CHECK(out.identity == in.identity);
  CHECK(out.obc == 1);
  CHECK(out.domain == Domain::simulated_occluded);
  CHECK(out.occluder == Rect{10, 5, 10, 10});
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      const bool inside = y >= 10 && y < 20 && x >= 5 && x < 15;
      REQUIRE(out.mask.at(0, y, x) == (inside ? 0.0f : in.mask.at(0, y, x)));
      for (int c = 0; c < 3; ++c)
        REQUIRE(out.image.at(c, y, x) == (inside ? 0.25f : in.image.at(c, y, x)));
    }
  // Input untouched.
  CHECK(in == d.records[0]);
}

TEST_CASE("random placement keeps image and mask rectangles in sync") {
  const Dataset d = toy(3, 3, 2);
  const OccluderBank bank{&d, SimulatorConfig{}};
  RandomSource rng(4);
  for (const auto& in : d.records) {
    const ImageRecord out = apply_occlusion(in, sample_occluder(bank, 64, 64, rng), rng);
    REQUIRE(out.occluder.has_value());
    const Rect r = *out.occluder;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        if (r.contains(y, x)) {
          REQUIRE(out.mask.at(0, y, x) == 0.0f);
        } else {
          REQUIRE(out.mask.at(0, y, x) == in.mask.at(0, y, x));
          for (int c = 0; c < 3; ++c) REQUIRE(out.image.at(c, y, x) == in.image.at(c, y, x));
        }
      }
  }
}

TEST_CASE("patch larger than the image is rejected") {
  const Dataset d = toy(2, 2, 1);
  OccluderPatch big{Raster(3, 65, 10), OccluderOrigin::solid};
  RandomSource rng(0);
  CHECK_THROWS_AS(apply_occlusion(d.records[0], big, rng), ArgumentError);
  OccluderPatch ok{Raster(3, 10, 10), OccluderOrigin::solid};
  CHECK_THROWS_AS(apply_occlusion_at(d.records[0], ok, 60, 0), ArgumentError);
}

TEST_CASE("occluded count rounds half up") {
  CHECK(occluded_count(0.3, 20) == 6);
  CHECK(occluded_count(0.5, 5) == 3);
  CHECK(occluded_count(0.25, 2) == 1);
  CHECK(occluded_count(0.0, 7) == 0);
  CHECK(occluded_count(1.0, 7) == 7);
  CHECK(occluded_count(0.1, 30) == 3);
  CHECK_THROWS_AS(occluded_count(1.5, 3), ArgumentError);
}

TEST_CASE("simulate_epoch with p = 0, 1 and 0.3") {
  const Dataset d = toy(4, 5, 3);
  const OccluderBank bank{&d, SimulatorConfig{}};
  RandomSource rng(12);

  const Dataset none = simulate_epoch(d, 0.0, bank, rng);
  REQUIRE(none.size() == 20);
  std::multiset<std::string> ids_in, ids_out;
  for (const auto& r : d.records) ids_in.insert(r.source_id);
  for (const auto& r : none.records) {
    CHECK(r.obc == 0);
    ids_out.insert(r.source_id);
    const auto it = std::find_if(d.records.begin(), d.records.end(),
                                 [&](const ImageRecord& x) { return x.source_id == r.source_id; });
    CHECK(it->image == r.image);
  }
  CHECK(ids_in == ids_out);

  const Dataset all = simulate_epoch(d, 1.0, bank, rng);
  for (const auto& r : all.records) CHECK(r.obc == 1);

  const Dataset some = simulate_epoch(d, 0.3, bank, rng);
  int occluded = 0;
  for (const auto& r : some.records) occluded += r.obc;
  CHECK(occluded == 6);
  CHECK(histogram(some) == histogram(d));
  CHECK(some.identities == d.identities);
}

TEST_CASE("simulate_epoch is a pure function of its inputs and rng") {
  const Dataset d = toy(3, 4, 5);
  const OccluderBank bank{&d, SimulatorConfig{}};
  RandomSource a(99), b(99);
  CHECK(simulate_epoch(d, 0.5, bank, a) == simulate_epoch(d, 0.5, bank, b));
}
