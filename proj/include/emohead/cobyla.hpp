#pragma once

// Derivative-free constrained minimization by linear approximation
// (Powell's COBYLA): linear interpolation models of the objective and every
// constraint over an n+1 vertex simplex, trust-region steps of radius rho,
// and rho halving when progress at the current radius stalls.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace emohead {

// Evaluates the objective at x and writes one value per constraint into
// `constraints`; a constraint is satisfied when its value is >= 0.
using CobylaFunction = std::function<double(std::span<const double> x, std::span<double> constraints)>;

struct CobylaOptions {
  double rho_begin = 0.5;
  double rho_end = 1e-6;
  std::size_t max_evals = 2000;
  // Maximum violation still counted as feasible when picking the result.
  double feasibility_tol = 1e-6;
};

enum class CobylaStatus {
  kConverged,       // rho reached rho_end
  kMaxEvals,        // evaluation budget exhausted
  kRoundingErrors,  // simplex inverse degraded beyond repair
};

struct CobylaResult {
  std::vector<double> x;  // best feasible point, else least violating one
  double f = 0.0;
  double max_violation = 0.0;
  bool feasible = false;
  std::size_t evaluations = 0;
  double final_rho = 0.0;
  CobylaStatus status = CobylaStatus::kConverged;
};

// Deterministic for identical inputs. Throws DomainError unless
// rho_begin > rho_end > 0 and max_evals >= n + 2. When no evaluated point is
// feasible the result carries feasible = false and the least violating
// point (the infeasibility report).
CobylaResult cobyla_minimize(const CobylaFunction& fn, std::size_t num_constraints,
                             std::vector<double> x0, const CobylaOptions& options = {});

}  // namespace emohead
