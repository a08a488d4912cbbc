#include "emohead/loss.hpp"

#include <numeric>

namespace emohead {

std::vector<double> class_weights(const std::vector<std::size_t>& counts, ClassWeightMode mode) {
  if (counts.empty()) throw DomainError("class_weights: no classes");
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  const double m = static_cast<double>(counts.size());
  std::vector<double> w(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double n = static_cast<double>(counts[i]);
    if (mode == ClassWeightMode::kLiteral) {
      w[i] = total * n / m;
    } else {
      if (counts[i] == 0) {
        throw DomainError("class_weights: class " + std::to_string(i) + " has zero samples");
      }
      w[i] = total / (m * n);
    }
  }
  return w;
}

SmoothedTarget smooth_labels(int label, std::size_t num_classes, double gamma) {
  if (num_classes < 2) throw DomainError("smooth_labels: need at least 2 classes");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("smooth_labels: gamma must be in [0,1)");
  if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
    throw DomainError("smooth_labels: label " + std::to_string(label) + " out of range");
  }
  SmoothedTarget t;
  t.label = label;
  t.distribution.assign(num_classes, gamma / static_cast<double>(num_classes - 1));
  t.distribution[static_cast<std::size_t>(label)] = 1.0 - gamma;
  return t;
}

}  // namespace emohead
