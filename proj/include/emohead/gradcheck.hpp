#pragma once

// Central finite-difference verification of analytic gradients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "emohead/tensor.hpp"

namespace emohead {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// |analytic - numeric| / max(1, |analytic|)
inline double gradient_rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
}

// Compares d(loss)/d(params[k]) from backward() against
// (f(x+eps) - f(x-eps)) / 2eps for the selected coordinates of every
// parameter. `coordinates[k]` lists the flat indices to probe in params[k];
// an empty list probes all of them. `loss_fn` must rebuild the graph from
// the current parameter values on each call and be deterministic.
template <typename T>
std::vector<GradCheckResult> finite_diff_check(
    const std::function<BasicTensor<T>()>& loss_fn,
    std::vector<BasicTensor<T>> params, double eps,
    const std::vector<std::vector<std::size_t>>& coordinates = {}) {
  if (!(eps > 0.0)) throw DomainError("finite_diff_check: eps must be > 0");
  for (auto& p : params) {
    if (!p.requires_grad()) p.set_requires_grad(true);
    p.zero_grad();
  }
  const BasicTensor<T> base = loss_fn();
  const double base_value = base.item();
  base.backward();
  const double again = loss_fn().item();
  if (again != base_value) {
    throw FlakyCheckError(
        "loss differs between identical evaluations; fix seeds or disable "
        "dropout");
  }

  std::vector<GradCheckResult> results(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    const std::vector<T> analytic(p.grad().begin(), p.grad().end());
    std::vector<std::size_t> all;
    const std::vector<std::size_t>* idx = nullptr;
    if (k < coordinates.size() && !coordinates[k].empty()) {
      idx = &coordinates[k];
    } else {
      all.resize(p.numel());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      idx = &all;
    }
    auto values = p.mutable_data();
    for (const std::size_t i : *idx) {
      const T saved = values[i];
      values[i] = static_cast<T>(saved + eps);
      const double up = loss_fn().item();
      values[i] = static_cast<T>(saved - eps);
      const double down = loss_fn().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = gradient_rel_error(analytic[i], numeric);
      if (results[k].checked == 0 || err > results[k].max_rel_error) {
        results[k].max_rel_error = err;
        results[k].worst_index = i;
      }
      ++results[k].checked;
    }
  }
  return results;
}

template <typename T>
GradCheckResult finite_diff_check(
    const std::function<BasicTensor<T>()>& loss_fn, BasicTensor<T> param,
    double eps) {
  return finite_diff_check<T>(loss_fn, std::vector<BasicTensor<T>>{param},
                              eps)[0];
}

}  // namespace emohead
