#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "emohead/errors.hpp"
#include "emohead/gradcheck.hpp"
#include "emohead/loss.hpp"
#include "emohead/metrics.hpp"
#include "json.hpp"
#include "oracles.hpp"

namespace emohead {
namespace {

TEST(ClassWeights, HandExamples) {
  const auto lit = class_weights({30, 10}, ClassWeightMode::kLiteral);
  EXPECT_DOUBLE_EQ(lit[0], 600.0);
  EXPECT_DOUBLE_EQ(lit[1], 200.0);
  const auto inv = class_weights({30, 10}, ClassWeightMode::kInverseFrequency);
  EXPECT_NEAR(inv[0], 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(inv[1], 2.0);
  for (const auto mode : {ClassWeightMode::kLiteral, ClassWeightMode::kInverseFrequency}) {
    const auto w = class_weights({5, 5, 5}, mode);
    EXPECT_DOUBLE_EQ(w[0], w[2]);
  }
  EXPECT_THROW(class_weights({3, 0}, ClassWeightMode::kInverseFrequency), DomainError);
  EXPECT_THROW(class_weights({}, ClassWeightMode::kLiteral), DomainError);
}

TEST(SmoothLabels, Examples) {
  const auto one_hot = smooth_labels(3, 8, 0.0);
  EXPECT_DOUBLE_EQ(one_hot.distribution[3], 1.0);
  EXPECT_DOUBLE_EQ(one_hot.distribution[0], 0.0);
  const auto s = smooth_labels(2, 8, 0.1);
  EXPECT_DOUBLE_EQ(s.distribution[2], 0.9);
  EXPECT_DOUBLE_EQ(s.distribution[5], 0.1 / 7);
  const auto two = smooth_labels(0, 2, 0.2);
  EXPECT_DOUBLE_EQ(two.distribution[0], 0.8);
  EXPECT_DOUBLE_EQ(two.distribution[1], 0.2);
  for (const double g : {0.0, 0.1, 0.2}) {
    for (const std::size_t m : {2u, 8u}) {
      const auto d = smooth_labels(1, m, g).distribution;
      EXPECT_NEAR(std::accumulate(d.begin(), d.end(), 0.0), 1.0, 1e-9);
    }
  }
  EXPECT_THROW(smooth_labels(0, 8, 1.0), DomainError);
  EXPECT_THROW(smooth_labels(0, 8, -0.1), DomainError);
  EXPECT_THROW(smooth_labels(0, 1, 0.0), DomainError);
  EXPECT_THROW(smooth_labels(8, 8, 0.0), DomainError);
}

std::vector<SmoothedTarget> targets(const std::vector<int>& labels, double gamma = 0.0) {
  std::vector<SmoothedTarget> out;
  for (const int l : labels) out.push_back(smooth_labels(l, 8, gamma));
  return out;
}

TEST(WeightedCrossEntropy, UniformLogitsGiveLog8) {
  const auto loss = weighted_cross_entropy(Tensor64::zeros({3, 8}), targets({0, 4, 7}), std::vector<double>(8, 1.0));
  EXPECT_NEAR(loss.item(), std::log(8.0), 1e-12);
  const auto lf = weighted_cross_entropy(Tensor::zeros({1, 8}), targets({2}), std::vector<double>(8, 1.0));
  EXPECT_NEAR(lf.item(), std::log(8.0), 1e-5);
}

TEST(WeightedCrossEntropy, PeakedLogitsGiveNearZero) {
  std::vector<double> v(8, 0.0);
  v[5] = 50.0;
  const auto loss = weighted_cross_entropy(Tensor64({1, 8}, v), targets({5}), std::vector<double>(8, 1.0));
  EXPECT_LT(loss.item(), 1e-12);
  EXPECT_GE(loss.item(), 0.0);
}

TEST(WeightedCrossEntropy, WeightScaleCancelsInMean) {
  std::mt19937_64 rng(1);
  const auto logits = testing::random_matrix(4, 8, rng);
  std::vector<double> w = {1, 2, 3, 4, 5, 6, 7, 8}, w2;
  for (const double x : w) w2.push_back(2 * x);
  const auto t = targets({0, 3, 3, 6}, 0.1);
  EXPECT_NEAR(weighted_cross_entropy(logits, t, w).item(), weighted_cross_entropy(logits, t, w2).item(), 1e-12);
  EXPECT_NEAR(2 * weighted_cross_entropy(logits, t, w, LossReduction::kSum).item(),
              weighted_cross_entropy(logits, t, w2, LossReduction::kSum).item(), 1e-12);
}

TEST(WeightedCrossEntropy, EqualWeightsMatchPlainCrossEntropy) {
  std::mt19937_64 rng(2);
  const auto logits = testing::random_matrix(3, 8, rng);
  const std::vector<int> labels = {1, 2, 7};
  double plain = 0.0;
  for (std::size_t b = 0; b < 3; ++b) {
    double z = 0.0;
    for (std::size_t c = 0; c < 8; ++c) z += std::exp(logits[b * 8 + c]);
    plain -= logits[b * 8 + static_cast<std::size_t>(labels[b])] - std::log(z);
  }
  const auto loss = weighted_cross_entropy(logits, targets(labels), std::vector<double>(8, 3.0));
  EXPECT_NEAR(loss.item(), plain / 3, 1e-12);
}

TEST(WeightedCrossEntropy, Gradient) {
  std::mt19937_64 rng(3);
  auto logits = testing::random_matrix(5, 8, rng).set_requires_grad(true);
  const std::vector<double> w = {0.5, 1, 2, 1, 1, 3, 1, 0.7};
  for (const auto red : {LossReduction::kWeightedMean, LossReduction::kSum}) {
    const auto t = targets({0, 1, 5, 5, 7}, 0.2);
    const auto r = finite_diff_check<double>([&] { return weighted_cross_entropy(logits, t, w, red); }, logits, 1e-6);
    EXPECT_LT(r.max_rel_error, 1e-6);
  }
}

TEST(WeightedCrossEntropy, Errors) {
  std::vector<double> v(8, 0.0);
  v[0] = NAN;
  EXPECT_THROW(weighted_cross_entropy(Tensor64({1, 8}, v, false), targets({0}), std::vector<double>(8, 1.0)),
               Error);
  EXPECT_THROW(weighted_cross_entropy(Tensor64::zeros({2, 8}), targets({0}), std::vector<double>(8, 1.0)),
               DimensionError);
  EXPECT_THROW(weighted_cross_entropy(Tensor64::zeros({1, 8}), targets({0}), std::vector<double>(8, -1.0)),
               DomainError);
}

TEST(F1, Examples) {
  const std::vector<int> refs = {0, 0, 1, 1}, preds = {0, 1, 1, 1};
  const auto r = f1_scores(preds, refs, 2);
  EXPECT_NEAR(r.per_class[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.per_class[1], 0.8, 1e-12);
  EXPECT_NEAR(r.macro, 0.7333333333333, 1e-9);
  EXPECT_DOUBLE_EQ(f1_scores(refs, refs, 2).macro, 1.0);
  std::vector<int> uniform, zeros(80, 0);
  for (int i = 0; i < 80; ++i) uniform.push_back(i % 8);
  EXPECT_LT(f1_scores(zeros, uniform, 8).macro, 0.1);
  EXPECT_THROW(f1_scores(std::vector<int>{0}, refs, 2), DimensionError);
  EXPECT_THROW(f1_scores(std::vector<int>{2}, std::vector<int>{0}, 2), DomainError);
}

TEST(F1, AbsentClassesCountAsZero) {
  const std::vector<int> same = {0, 1};
  EXPECT_DOUBLE_EQ(f1_scores(same, same, 4).macro, 0.5);
}

TEST(F1, MatchesBruteForceAndIsPermutationInvariant) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> cls(0, 7);
  std::vector<int> p(1000), r(1000);
  for (int trial = 0; trial < 20; ++trial) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      r[i] = cls(rng);
      p[i] = (rng() % 3 == 0) ? r[i] : cls(rng);
    }
    const auto got = f1_scores(p, r, 8);
    const auto want = testing::brute_force_f1(p, r, 8);
    EXPECT_EQ(got.per_class, want.per_class);
    EXPECT_EQ(got.macro, want.macro);
    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> ps, rs;
    for (const auto i : order) {
      ps.push_back(p[i]);
      rs.push_back(r[i]);
    }
    EXPECT_NEAR(f1_scores(ps, rs, 8).macro, got.macro, 1e-15);
  }
}

TEST(MetricsJson, CanonicalLayout) {
  std::vector<int> x = {0, 1, 2, 3, 4, 5, 6, 7};
  const auto text = metrics_json(f1_scores(x, x, 8));
  const auto j = nlohmann::ordered_json::parse(text);
  EXPECT_EQ(j.begin().key(), "f1_macro");
  EXPECT_DOUBLE_EQ(j["f1_macro"].get<double>(), 1.0);
  EXPECT_EQ(j["f1_per_class"].begin().key(), "Neutral");
  EXPECT_EQ(text.back(), '\n');
}

}  // namespace
}  // namespace emohead
