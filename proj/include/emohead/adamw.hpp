#pragma once

#include <cstddef>
#include <vector>

#include "emohead/model.hpp"

namespace emohead {

struct AdamWConfig {
  double lr = 1e-5;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with decoupled weight decay:
//   p <- p - lr * wd * p
//   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
//   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
class AdamW {
 public:
  explicit AdamW(AdamWConfig config) : config_(config) {}

  // Updates every parameter from its accumulated gradient. Throws
  // NumericError (leaving parameters and state untouched) if any gradient is
  // non-finite.
  void step(ParameterSet<float>& params);

  std::size_t steps() const { return step_; }
  const AdamWConfig& config() const { return config_; }

 private:
  AdamWConfig config_;
  std::size_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace emohead
