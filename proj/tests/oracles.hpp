#pragma once

// Naive reference implementations and randomized identity sweeps shared by
// the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "emohead/conditioning.hpp"
#include "emohead/metrics.hpp"
#include "emohead/pooling.hpp"

namespace emohead::testing {

inline Tensor64 random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = n(rng);
  return Tensor64({rows, cols}, std::move(v));
}

inline Tensor64 random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  return reshape(random_matrix(1, n, rng, scale), {n});
}

// Per-element loops straight from the definitions.
inline std::vector<double> naive_average(const Tensor64& x) {
  const std::size_t m = x.dim(0), d = x.dim(1);
  std::vector<double> out(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t t = 0; t < m; ++t) out[k] += x[t * d + k];
    out[k] /= static_cast<double>(m);
  }
  return out;
}

inline std::vector<double> naive_std_pool(const Tensor64& x) {
  const std::size_t m = x.dim(0), d = x.dim(1);
  auto mean = naive_average(x);
  std::vector<double> out = mean;
  for (std::size_t k = 0; k < d; ++k) {
    double v = 0.0;
    for (std::size_t t = 0; t < m; ++t) v += (x[t * d + k] - mean[k]) * (x[t * d + k] - mean[k]);
    out.push_back(std::sqrt(v / static_cast<double>(m)));
  }
  return out;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

// Largest deviation of std_pool / average_pool from the naive loops over
// `trials` random inputs with m <= 50 frames and d <= 32 features.
inline double pooling_oracle_error(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> frames(1, 50), dims(1, 32);
  double worst = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto x = random_matrix(frames(rng), dims(rng), rng, 3.0);
    worst = std::max(worst, max_abs_diff(std_pool(x).data(), naive_std_pool(x)));
    worst = std::max(worst, max_abs_diff(average_pool(x).data(), naive_average(x)));
  }
  return worst;
}

// attentive_stats with a zero probe against std_pool.
inline double attentive_zero_probe_error(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> frames(1, 50), dims(1, 32);
  double worst = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto x = random_matrix(frames(rng), dims(rng), rng, 3.0);
    const auto p = Tensor64::zeros({x.dim(1)});
    worst = std::max(worst, max_abs_diff(attention_pool(x, p, AttentionMode::kAttentiveStats).data(),
                                         std_pool(x).data()));
  }
  return worst;
}

inline Tensor64 ones(std::size_t n) { return Tensor64::full({n}, 1.0); }

// Identity ClnParams: f maps anything to ones, g to `shift`'s constant.
inline ClnParams<double> constant_cln(std::size_t cond, std::size_t q, const Tensor64& shift_bias) {
  return {{Tensor64::zeros({cond, q}), ones(q)}, {Tensor64::zeros({cond, q}), shift_bias}};
}

struct IdentityReport {
  std::string mode;
  double max_error = 0.0;
};

// Runs every conditioning identity on `trials` random vectors per mode.
inline std::vector<IdentityReport> conditioning_identity_errors(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(2, 64);
  std::vector<IdentityReport> out = {{"gender.sum(e=0)"},           {"gender.multiplication(e=1)"},
                                     {"gender.sum_half(e=x)"},      {"gender.cln(constant x)"},
                                     {"text.sum_third(e=F=x)"},     {"text.multiplication(e=F=1)"},
                                     {"cln.shift_invariance"}};
  for (std::size_t i = 0; i < trials; ++i) {
    const std::size_t q = len(rng);
    const auto x = random_vector(q, rng, 2.0);
    const auto e = random_vector(q, rng);
    auto track = [&](std::size_t k, std::span<const double> got, std::span<const double> want) {
      out[k].max_error = std::max(out[k].max_error, max_abs_diff(got, want));
    };
    track(0, gender_condition(x, Tensor64::zeros({q}), GenderMode::kSum).data(), x.data());
    track(1, gender_condition(x, ones(q), GenderMode::kMultiplication).data(), x.data());
    track(2, gender_condition(x, x, GenderMode::kSumHalf).data(), x.data());

    // Constant input: normalized part is 0 so the output is g(e) alone.
    const auto constant = Tensor64::full({q}, x[0]);
    ClnParams<double> cp{{random_matrix(q, q, rng), random_vector(q, rng)},
                         {random_matrix(q, q, rng), random_vector(q, rng)}};
    track(3, gender_condition<double>(constant, e, GenderMode::kCln, nullptr, &cp).data(), apply(cp.g, e).data());

    track(4, text_condition_projected(x, x, x, TextMode::kSumThird).data(), x.data());
    track(5, text_condition_projected(x, ones(q), ones(q), TextMode::kMultiplication).data(), x.data());

    if (var_all(x).item() > kNormEps) {
      const auto shifted = add(x, 3.7);
      track(6, cln(shifted, e, cp).data(), cln(x, e, cp).data());
    }
  }
  return out;
}

// F1 by counting per class directly, no confusion matrix.
inline F1Report brute_force_f1(const std::vector<int>& pred, const std::vector<int>& ref, std::size_t m) {
  F1Report r;
  for (std::size_t c = 0; c < m; ++c) {
    const int k = static_cast<int>(c);
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] == k && ref[i] == k) ++tp;
      if (pred[i] == k && ref[i] != k) ++fp;
      if (pred[i] != k && ref[i] == k) ++fn;
    }
    const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double rc = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    r.per_class.push_back(p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0);
  }
  double s = 0.0;
  for (const double f : r.per_class) s += f;
  r.macro = s / static_cast<double>(m);
  return r;
}

}  // namespace emohead::testing
