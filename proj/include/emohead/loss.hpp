#pragma once

// Class weighting, label smoothing and weighted cross-entropy.

#include <cmath>
#include <string_view>
#include <vector>

#include "emohead/ops.hpp"

namespace emohead {

enum class ClassWeightMode {
  kLiteral,           // w_i = N_total * N_i / m
  kInverseFrequency,  // w_i = N_total / (m * N_i)
};

enum class LossReduction { kWeightedMean, kSum };

// Throws DomainError on an empty count list and on a zero count in
// inverse-frequency mode (literal mode tolerates zeros, yielding weight 0).
std::vector<double> class_weights(const std::vector<std::size_t>& counts, ClassWeightMode mode);

struct SmoothedTarget {
  int label = 0;
  std::vector<double> distribution;
};

// 1 - gamma on `label`, gamma / (m - 1) on every other class.
SmoothedTarget smooth_labels(int label, std::size_t num_classes, double gamma);

// Per-sample loss  -Σ_c target_c log softmax(logits_b)_c  scaled by
// weights[label_b]; reduced by Σ sample losses / Σ applied weights
// (kWeightedMean) or by the plain sum.
template <typename T>
BasicTensor<T> weighted_cross_entropy(const BasicTensor<T>& logits,
                                      const std::vector<SmoothedTarget>& targets,
                                      const std::vector<double>& weights,
                                      LossReduction reduction = LossReduction::kWeightedMean) {
  if (logits.rank() != 2 || logits.dim(0) != targets.size() || logits.dim(1) != weights.size()) {
    throw DimensionError("weighted_cross_entropy: logits " + shape_str(logits.shape()) + " vs " +
                         std::to_string(targets.size()) + " targets and " +
                         std::to_string(weights.size()) + " weights");
  }
  const std::size_t batch = logits.dim(0), m = logits.dim(1);
  const auto lv = logits.data();
  for (const T v : lv) {
    if (!std::isfinite(v)) throw NumericError("weighted_cross_entropy: non-finite logit");
  }
  for (const double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw DomainError("weighted_cross_entropy: class weights must be finite and >= 0");
    }
  }
  std::vector<double> probs(batch * m);
  std::vector<double> sample_w(batch);
  double total = 0.0, weight_sum = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const auto& target = targets[b];
    if (target.distribution.size() != m || target.label < 0 ||
        static_cast<std::size_t>(target.label) >= m) {
      throw DimensionError("weighted_cross_entropy: target " + std::to_string(b) +
                           " does not match " + std::to_string(m) + " classes");
    }
    double mx = lv[b * m];
    for (std::size_t c = 1; c < m; ++c) mx = std::max<double>(mx, lv[b * m + c]);
    double z = 0.0;
    for (std::size_t c = 0; c < m; ++c) z += std::exp(static_cast<double>(lv[b * m + c]) - mx);
    const double log_z = mx + std::log(z);
    double loss = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const double log_p = static_cast<double>(lv[b * m + c]) - log_z;
      probs[b * m + c] = std::exp(log_p);
      loss -= target.distribution[c] * log_p;
    }
    sample_w[b] = weights[static_cast<std::size_t>(target.label)];
    if (!(sample_w[b] > 0.0)) {
      throw DomainError("weighted_cross_entropy: zero weight for present class " +
                        std::to_string(target.label));
    }
    total += sample_w[b] * loss;
    weight_sum += sample_w[b];
  }
  const double norm = (reduction == LossReduction::kWeightedMean && batch > 0) ? weight_sum : 1.0;
  const double value = batch > 0 ? total / norm : 0.0;
  return BasicTensor<T>::from_op(
      "weighted_cross_entropy", {1}, {static_cast<T>(value)}, {logits},
      [batch, m, norm, targets, probs = std::move(probs),
       sample_w = std::move(sample_w)](detail::Node<T>& self) {
        auto g = detail::input(self, 0).grad_buffer();
        const double upstream = self.grad[0];
        for (std::size_t b = 0; b < batch; ++b) {
          const auto& dist = targets[b].distribution;
          double mass = 0.0;
          for (const double t : dist) mass += t;
          const double s = upstream * sample_w[b] / norm;
          for (std::size_t c = 0; c < m; ++c) {
            g[b * m + c] += static_cast<T>(s * (probs[b * m + c] * mass - dist[c]));
          }
        }
      });
}

std::string_view to_string(ClassWeightMode m);
std::string_view to_string(LossReduction r);
ClassWeightMode parse_class_weight_mode(std::string_view s);
LossReduction parse_loss_reduction(std::string_view s);

}  // namespace emohead
