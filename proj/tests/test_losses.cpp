#include <doctest.h>

#include <cmath>
#include <vector>

#include "occreid/errors.hpp"
#include "occreid/losses.hpp"
#include "occreid/random.hpp"

using namespace occreid;

namespace {

Tensor logits_from(const std::vector<std::vector<double>>& rows) {
  Tensor t(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()), 1, 1);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) t.at(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  return t;
}

// Textbook mean negative log-softmax, without the max shift.
double softmax_oracle(const Tensor& logits, const std::vector<int>& labels) {
  double total = 0;
  for (int i = 0; i < logits.n(); ++i) {
    double z = 0;
    for (int j = 0; j < logits.c(); ++j) z += std::exp(logits.at(i, j));
    total += -std::log(std::exp(logits.at(i, labels[static_cast<std::size_t>(i)])) / z);
  }
  return total / logits.n();
}

double bce_oracle(const Tensor& logits, const Tensor& target) {
  double total = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-logits.data[i]));
    const double y = target.data[i];
    total += -(y * std::log(p) + (1 - y) * std::log(1 - p));
  }
  return total / static_cast<double>(logits.size());
}

}  // namespace

TEST_CASE("identity loss examples") {
  const std::vector<int> labels{1, 0};
  CHECK(identity_loss(logits_from({{0, 25, 0}, {30, 0, 5}}), labels) < 1e-8);
  CHECK(identity_loss(Tensor(3, 4, 1, 1, 0.0), std::vector<int>{0, 1, 3}) == doctest::Approx(std::log(4.0)));
  CHECK(std::log(4.0) == doctest::Approx(1.3863).epsilon(1e-4));

  RandomSource rng(1);
  Tensor l(3, 5, 1, 1);
  for (double& v : l.data) v = rng.uniform(-3, 3);
  const std::vector<int> y{4, 0, 2};
  CHECK(identity_loss(l, y) == doctest::Approx(softmax_oracle(l, y)).epsilon(1e-12));
}

TEST_CASE("identity loss is stable for large logits") {
  const double v = identity_loss(logits_from({{1000, 0}, {0, -1000}}), std::vector<int>{1, 1});
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(1000.0));
}

TEST_CASE("label validation") {
  const Tensor l(2, 3, 1, 1, 0.0);
  CHECK_THROWS_AS(identity_loss(l, std::vector<int>{0, 3}), ArgumentError);
  CHECK_THROWS_AS(identity_loss(l, std::vector<int>{-1, 0}), ArgumentError);
  CHECK_THROWS_AS(identity_loss(l, std::vector<int>{0}), ArgumentError);
  CHECK_THROWS_AS(obc_loss(Tensor(2, 2, 1, 1), std::vector<int>{0, 2}), ArgumentError);
  CHECK_THROWS_AS(obc_loss(Tensor(2, 3, 1, 1), std::vector<int>{0, 1}), ArgumentError);
}

TEST_CASE("obc loss examples") {
  CHECK(obc_loss(logits_from({{20, -20}, {-20, 20}}), std::vector<int>{0, 1}) < 1e-8);
  CHECK(obc_loss(Tensor(4, 2, 1, 1, 0.0), std::vector<int>{0, 1, 1, 0}) == doctest::Approx(std::log(2.0)));
  RandomSource rng(2);
  Tensor l(6, 2, 1, 1);
  for (double& v : l.data) v = rng.uniform(-2, 2);
  const std::vector<int> y{0, 1, 1, 0, 1, 0};
  CHECK(obc_loss(l, y) == doctest::Approx(softmax_oracle(l, y)).epsilon(1e-12));
}

TEST_CASE("saliency loss examples") {
  RandomSource rng(3);
  Tensor mask(2, 1, 8, 8);
  for (double& v : mask.data) v = rng.uniform() < 0.4 ? 1.0 : 0.0;
  Tensor peaked = mask;
  for (double& v : peaked.data) v = v > 0.5 ? 20.0 : -20.0;
  CHECK(saliency_loss(peaked, mask) < 1e-8);
  CHECK(saliency_loss(Tensor(2, 1, 8, 8, 0.0), mask) == doctest::Approx(std::log(2.0)));

  Tensor logits(1, 1, 8, 8), soft(1, 1, 8, 8);
  for (double& v : logits.data) v = rng.uniform(-4, 4);
  for (double& v : soft.data) v = rng.uniform();
  CHECK(saliency_loss(logits, soft) == doctest::Approx(bce_oracle(logits, soft)).epsilon(1e-12));
  CHECK_THROWS_AS(saliency_loss(Tensor(1, 1, 8, 8), Tensor(1, 1, 4, 4)), ArgumentError);
}

TEST_CASE("loss gradients match finite differences") {
  RandomSource rng(4);
  Tensor l(3, 4, 1, 1);
  for (double& v : l.data) v = rng.uniform(-2, 2);
  const std::vector<int> y{3, 1, 0};
  Tensor g;
  identity_loss(l, y, &g);
  Tensor s(2, 1, 3, 3), t(2, 1, 3, 3);
  for (double& v : s.data) v = rng.uniform(-2, 2);
  for (double& v : t.data) v = rng.uniform();
  Tensor gs;
  saliency_loss(s, t, &gs);
  const double h = 1e-6;
  for (std::size_t i = 0; i < l.size(); ++i) {
    Tensor a = l, b = l;
    a.data[i] += h;
    b.data[i] -= h;
    CHECK(g.data[i] == doctest::Approx((identity_loss(a, y) - identity_loss(b, y)) / (2 * h)).epsilon(1e-6));
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    Tensor a = s, b = s;
    a.data[i] += h;
    b.data[i] -= h;
    CHECK(gs.data[i] == doctest::Approx((saliency_loss(a, t) - saliency_loss(b, t)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("multitask blend") {
  CHECK(multitask_loss(2.0, 0.5, {0.8, 0.8}) == doctest::Approx(1.7));
  CHECK(multitask_loss(1.3, 1.3, {0.8, 0.65}) == doctest::Approx(1.3));
  CHECK(multitask_loss(2.0, 0.5, {0.8, 1.0}) == 2.0);
}

TEST_CASE("total loss single and two domains") {
  const LossWeights w{0.8, 0.8};
  // identity 2.0, obc 0.5 -> multitask 1.7; saliency 0.25 -> 0.8*1.7 + 0.2*0.25 = 1.41
  const DomainTerms one{2.0, 0.5, 0.25};
  const LossBreakdown b = total_loss(std::span(&one, 1), w);
  CHECK(b.multitask == doctest::Approx(1.7));
  CHECK(b.total == doctest::Approx(1.41));

  const DomainTerms same{1.0, 1.0, 1.0};
  CHECK(total_loss(std::span(&same, 1), w).total == doctest::Approx(1.0));

  const std::vector<DomainTerms> two{{2.0, 0.5, 0.25}, {1.0, 0.2, 0.6}};
  const double second = 0.8 * (0.8 * 1.0 + 0.2 * 0.2) + 0.2 * 0.6;
  const LossBreakdown t = total_loss(two, w);
  CHECK(t.total == doctest::Approx(1.41 + second));
  CHECK(t.identity == doctest::Approx(3.0));
  CHECK(t.multitask == doctest::Approx(w.beta * t.identity + (1 - w.beta) * t.obc));
  CHECK(t.total == doctest::Approx(w.alpha * t.multitask + (1 - w.alpha) * t.saliency));
  CHECK_THROWS_AS(total_loss(std::vector<DomainTerms>{}, w), ArgumentError);
}

TEST_CASE("weight validation") {
  CHECK_NOTHROW(LossWeights{0.8, 0.8}.validate());
  CHECK_NOTHROW(LossWeights{0.5, 0.5}.validate());
  CHECK_THROWS_AS((LossWeights{0.4, 0.8}.validate()), ConfigError);
  CHECK_THROWS_AS((LossWeights{1.0, 0.8}.validate()), ConfigError);
  CHECK_NOTHROW(LossWeights{0.4, 1.0}.validate(true));
  CHECK_THROWS_AS((LossWeights{1.2, 0.8}.validate(true)), ConfigError);
}

TEST_CASE("blend bounds for random inputs") {
  RandomSource rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(0, 10), b = rng.uniform(0, 10), lambda = rng.uniform();
    const double m = multitask_loss(a, b, {0.8, lambda});
    CHECK(m >= std::min(a, b) - 1e-12);
    CHECK(m <= std::max(a, b) + 1e-12);
  }
}
