#include "emohead/adamw.hpp"

#include <cmath>

namespace emohead {

void AdamW::step(ParameterSet<float>& params) {
  auto& entries = params.entries();
  for (const auto& [name, t] : entries) {
    if (t.grad().size() != t.numel()) throw ContractError("parameter " + name + " has no gradient buffer");
    for (const float g : t.grad()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in " + name + "; step skipped");
    }
  }
  if (m_.empty()) {
    for (const auto& [name, t] : entries) {
      m_.emplace_back(t.numel(), 0.0);
      v_.emplace_back(t.numel(), 0.0);
    }
  }
  if (m_.size() != entries.size()) throw ContractError("AdamW: parameter set changed between steps");
  ++step_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  const double decay = 1.0 - config_.lr * config_.weight_decay;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    auto& t = entries[k].second;
    auto p = t.mutable_data();
    const auto g = t.grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      double x = static_cast<double>(p[i]) * decay;
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * static_cast<double>(g[i]) * g[i];
      x -= config_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config_.eps);
      p[i] = static_cast<float>(x);
    }
  }
}

}  // namespace emohead
