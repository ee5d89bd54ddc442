#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "occreid/random.hpp"

using namespace occreid;

TEST_CASE("derived seeds depend on tag and index") {
  CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a", 0) != derive_seed(1, "a", 1));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
}

TEST_CASE("uniform draws stay in range") {
  RandomSource rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const auto k = rng.uniform_int(-2, 5);
    REQUIRE(k >= -2);
    REQUIRE(k <= 5);
  }
}

TEST_CASE("uniform_int covers every value with plausible frequency") {
  RandomSource rng(11);
  std::vector<int> counts(6, 0);
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(rng.uniform_int(0, 5))];
  for (int c : counts) CHECK(std::abs(c - n / 6) < 500);
}

TEST_CASE("normal draws have unit moments") {
  RandomSource rng(5);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.01).scale(1.0));
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("shuffle is a permutation and reproducible") {
  std::vector<int> a(50), b;
  std::iota(a.begin(), a.end(), 0);
  b = a;
  RandomSource r1(9), r2(9);
  r1.shuffle(std::span<int>(a));
  r2.shuffle(std::span<int>(b));
  CHECK(a == b);
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("state round trip resumes the stream") {
  RandomSource rng(42);
  for (int i = 0; i < 17; ++i) rng.next_u64();
  const std::string state = rng.save_state();
  const auto expected = rng.next_u64();
  RandomSource other(0);
  other.load_state(state);
  CHECK(other.next_u64() == expected);
}
