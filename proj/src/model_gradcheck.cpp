#include "emohead/model_gradcheck.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "emohead/gradcheck.hpp"

namespace emohead {

namespace {

Tensor64 gaussian(Shape shape, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = n(rng);
  return Tensor64(std::move(shape), std::move(v));
}

// Evenly spaced indices, always including the first and last.
std::vector<std::size_t> probe_indices(std::size_t n, std::size_t cap) {
  std::vector<std::size_t> idx;
  if (n <= cap || cap < 2) {
    idx.resize(std::min(n, std::max<std::size_t>(cap, 1)));
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
  }
  for (std::size_t k = 0; k < cap; ++k) idx.push_back(k * (n - 1) / (cap - 1));
  return idx;
}

}  // namespace

ModelGradcheck model_gradcheck(const Architecture& arch, const ModelGradcheckOptions& options) {
  arch.validate();
  auto init_rng = named_stream(options.seed, "init");
  auto params = init_parameters(arch, init_rng).cast<double>();

  // Layer weights start at zero and the norm gain at one; nudge every
  // parameter so no symmetric starting point hides a wrong gradient.
  auto perturb_rng = named_stream(options.seed, "gradcheck/perturb");
  std::normal_distribution<double> nudge(0.0, 0.05);
  for (auto& [name, t] : params.entries()) {
    for (auto& v : t.mutable_data()) v += nudge(perturb_rng);
  }

  auto data_rng = named_stream(options.seed, "gradcheck/data");
  std::vector<Example<double>> batch;
  for (std::size_t b = 0; b < options.batch; ++b) {
    batch.push_back({gaussian({arch.num_layers, options.frames, arch.hidden}, data_rng),
                     gaussian({kTextDim}, data_rng), static_cast<int>(b % 2),
                     static_cast<int>((3 * b + 1) % kNumClasses)});
  }
  std::vector<std::size_t> counts(kNumClasses);
  for (std::size_t c = 0; c < kNumClasses; ++c) counts[c] = 1 + c;
  const auto weights = class_weights(counts, arch.class_weights);

  std::vector<Tensor64> tensors;
  std::vector<std::vector<std::size_t>> coords;
  for (const auto& [name, t] : params.entries()) {
    tensors.push_back(t);
    coords.push_back(probe_indices(t.numel(), options.max_coordinates));
  }
  const auto per_param = finite_diff_check<double>(
      [&] { return batch_loss(arch, params, batch, weights, false, nullptr); }, tensors, options.eps, coords);

  ModelGradcheck out;
  const auto& entries = params.entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto comp = component_of(entries[k].first);
    auto it = std::find_if(out.components.begin(), out.components.end(),
                           [&](const ComponentGradcheck& c) { return c.component == comp; });
    if (it == out.components.end()) {
      out.components.push_back({comp, 0, 0.0, entries[k].first, 0});
      it = std::prev(out.components.end());
    }
    const auto& r = per_param[k];
    if (it->checked == 0 || r.max_rel_error > it->max_rel_error) {
      it->max_rel_error = r.max_rel_error;
      it->worst_parameter = entries[k].first;
      it->worst_index = r.worst_index;
    }
    it->checked += r.checked;
    out.max_rel_error = std::max(out.max_rel_error, r.max_rel_error);
  }
  out.passed = out.max_rel_error < options.tolerance;
  return out;
}

std::string gradcheck_table(const ModelGradcheck& result, double tolerance) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %8s %14s  %s\n", "component", "checked", "max_rel_err", "status");
  out += line;
  for (const auto& c : result.components) {
    std::snprintf(line, sizeof line, "%-14s %8zu %14.3e  %s\n", c.component.c_str(), c.checked, c.max_rel_error,
                  c.max_rel_error < tolerance ? "PASS" : "FAIL");
    out += line;
  }
  std::snprintf(line, sizeof line, "%-14s %8s %14.3e  %s\n", "overall", "", result.max_rel_error,
                result.passed ? "PASS" : "FAIL");
  out += line;
  return out;
}

}  // namespace emohead
