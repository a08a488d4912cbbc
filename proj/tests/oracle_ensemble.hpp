#pragma once

// Two-model ensemble where each model is reliable on half of the classes
// and confidently wrong on the other half. Uniform fusion is fooled; giving
// model A the columns 0..3 and model B the columns 4..7 classifies
// everything correctly.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "emohead/fusion.hpp"

namespace emohead::testing {

inline std::array<double, kNumClasses> peaked(std::size_t cls, double mass) {
  std::array<double, kNumClasses> p{};
  p.fill((1.0 - mass) / static_cast<double>(kNumClasses - 1));
  p[cls] = mass;
  return p;
}

// Same half (0..3 or 4..7), next class over.
inline std::size_t confusable(std::size_t c) { return (c / 4) * 4 + (c % 4 + 1) % 4; }

inline PredictionSet oracle_ensemble(std::size_t per_class = 10) {
  ModelPredictions a{.name = "model_a"}, b{.name = "model_b"};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (std::size_t k = 0; k < per_class; ++k) {
      const std::string id = "utt_" + std::to_string(c) + "_" + std::to_string(k);
      const bool low = c < 4;
      for (auto* m : {&a, &b}) {
        m->ids.push_back(id);
        m->labels.push_back(static_cast<int>(c));
      }
      a.probabilities.push_back(low ? peaked(c, 0.7) : peaked(confusable(c), 0.9));
      b.probabilities.push_back(low ? peaked(confusable(c), 0.9) : peaked(c, 0.7));
    }
  }
  return make_prediction_set({a, b});
}

// Exhaustive search over per-class weights w_A[j] in {0, 0.5, 1} (w_B = 1 - w_A).
inline double best_grid_f1(const PredictionSet& preds) {
  double best = 0.0;
  std::size_t combos = 1;
  for (std::size_t j = 0; j < kNumClasses; ++j) combos *= 3;
  for (std::size_t code = 0; code < combos; ++code) {
    auto w = FusionWeights::uniform(FusionMode::kPerClassSimplex, 2);
    std::size_t rest = code;
    for (std::size_t j = 0; j < kNumClasses; ++j) {
      const double wa = 0.5 * static_cast<double>(rest % 3);
      rest /= 3;
      w.w[j] = wa;
      w.w[kNumClasses + j] = 1.0 - wa;
    }
    best = std::max(best, f1_scores(fuse_predict_all(preds, w), preds.labels, kNumClasses).macro);
  }
  return best;
}

}  // namespace emohead::testing
