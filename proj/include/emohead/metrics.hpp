#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace emohead {

struct F1Report {
  std::vector<double> per_class;
  double macro = 0.0;
};

// counts[ref * m + pred]
std::vector<std::size_t> confusion_matrix(std::span<const int> predictions,
                                          std::span<const int> references, std::size_t m);

// Per-class F1 = 2PR/(P+R), defined as 0 whenever the denominator is 0
// (including classes that are neither predicted nor referenced). Macro is
// the unweighted mean over all m classes.
F1Report f1_scores(std::span<const int> predictions, std::span<const int> references,
                   std::size_t m);

// {"f1_macro": x, "f1_per_class": {"Neutral": x, ..., "Fear": x}} with the
// eight class names in canonical order. Requires m == 8.
std::string metrics_json(const F1Report& report);

}  // namespace emohead
