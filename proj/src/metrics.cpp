#include "emohead/metrics.hpp"

#include "emohead/errors.hpp"
#include "emohead/manifest.hpp"
#include "json.hpp"

namespace emohead {

std::vector<std::size_t> confusion_matrix(std::span<const int> predictions,
                                          std::span<const int> references, std::size_t m) {
  if (predictions.size() != references.size()) {
    throw DimensionError("f1: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(references.size()) + " references");
  }
  std::vector<std::size_t> counts(m * m, 0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int p = predictions[i], r = references[i];
    if (p < 0 || r < 0 || static_cast<std::size_t>(p) >= m || static_cast<std::size_t>(r) >= m) {
      throw DomainError("f1: class id out of range at index " + std::to_string(i));
    }
    ++counts[static_cast<std::size_t>(r) * m + static_cast<std::size_t>(p)];
  }
  return counts;
}

F1Report f1_scores(std::span<const int> predictions, std::span<const int> references,
                   std::size_t m) {
  const auto cm = confusion_matrix(predictions, references, m);
  F1Report report;
  report.per_class.assign(m, 0.0);
  double total = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t tp = cm[c * m + c], predicted = 0, actual = 0;
    for (std::size_t k = 0; k < m; ++k) {
      predicted += cm[k * m + c];
      actual += cm[c * m + k];
    }
    // 2PR/(P+R) == 2TP/(predicted+actual); same zero cases.
    if (tp > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(predicted);
      const double recall = static_cast<double>(tp) / static_cast<double>(actual);
      report.per_class[c] = 2.0 * precision * recall / (precision + recall);
    }
    total += report.per_class[c];
  }
  report.macro = m > 0 ? total / static_cast<double>(m) : 0.0;
  return report;
}

std::string metrics_json(const F1Report& report) {
  if (report.per_class.size() != kNumClasses) {
    throw DimensionError("metrics_json expects 8 classes");
  }
  nlohmann::ordered_json j;
  j["f1_macro"] = report.macro;
  auto& per = j["f1_per_class"];
  per = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < kNumClasses; ++c) per[std::string(kClassNames[c])] = report.per_class[c];
  return j.dump(2) + "\n";
}

}  // namespace emohead
