#pragma once

// Finite-difference check of the full training loss, grouped by model
// component. Runs in double precision on a small random batch with dropout
// off.

#include <cstdint>
#include <string>
#include <vector>

#include "emohead/model.hpp"

namespace emohead {

struct ModelGradcheckOptions {
  std::size_t batch = 4;
  std::size_t frames = 12;
  double eps = 1e-6;
  // Coordinates probed per parameter tensor (all of them when smaller).
  std::size_t max_coordinates = 200;
  double tolerance = 1e-3;
  std::uint64_t seed = 0;
};

struct ComponentGradcheck {
  std::string component;  // e.g. "projection", "gender", "classifier"
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
};

struct ModelGradcheck {
  std::vector<ComponentGradcheck> components;  // in parameter order
  double max_rel_error = 0.0;
  bool passed = false;
};

ModelGradcheck model_gradcheck(const Architecture& arch, const ModelGradcheckOptions& options = {});

// Fixed-width table, one row per component plus an overall row.
std::string gradcheck_table(const ModelGradcheck& result, double tolerance);

}  // namespace emohead
