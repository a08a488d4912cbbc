#pragma once

// Layer aggregation, framewise projection and temporal pooling.
//
// Pipeline: Z[l,m,h] --aggregate--> [m,h] --project--> [m,d] --pool--> [d|2d]

#include <string>
#include <string_view>

#include "emohead/ops.hpp"

namespace emohead {

enum class LayerWeightMode { kSoftmax, kRaw };
enum class PoolingType { kAverage, kStd, kAttention };
enum class AttentionMode { kPaperLiteral, kAttentiveStats };

// sqrt floor for the standard-deviation branch of the statistics pools.
inline constexpr double kStdFloor = 1e-12;

// Pooled vector length for a projection size d.
inline std::size_t pooled_size(PoolingType type, std::size_t d) {
  return type == PoolingType::kAverage ? d : 2 * d;
}

// Ẑ[t,k] = Σ_j eff_w[j] Z[j,t,k], eff_w = softmax(w) or w.
template <typename T>
BasicTensor<T> layer_aggregate(const BasicTensor<T>& z, const BasicTensor<T>& w,
                               LayerWeightMode mode) {
  if (z.rank() != 3 || w.rank() != 1 || w.numel() != z.dim(0)) {
    throw DimensionError("layer_aggregate: features " + shape_str(z.shape()) +
                         " vs layer weights " + shape_str(w.shape()));
  }
  const std::size_t l = z.dim(0), m = z.dim(1), h = z.dim(2);
  const auto eff = mode == LayerWeightMode::kSoftmax ? softmax(w) : w;
  auto flat = matmul(reshape(eff, {1, l}), reshape(z, {l, m * h}));
  return reshape(flat, {m, h});
}

// Per-frame affine map X W + b.
template <typename T>
BasicTensor<T> project_frames(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                              const BasicTensor<T>& bias) {
  if (x.rank() != 2 || weight.rank() != 2 || x.dim(1) != weight.dim(0) ||
      bias.rank() != 1 || bias.numel() != weight.dim(1)) {
    throw DimensionError("project_frames: " + shape_str(x.shape()) + " x " +
                         shape_str(weight.shape()) + " + " + shape_str(bias.shape()));
  }
  return add(matmul(x, weight), bias);
}

template <typename T>
BasicTensor<T> average_pool(const BasicTensor<T>& x) {
  return reduce(x, Reduce::kMean);
}

// [mean, sqrt(population var)] over frames.
template <typename T>
BasicTensor<T> std_pool(const BasicTensor<T>& x) {
  auto mean = reduce(x, Reduce::kMean);
  auto stdev = sqrt_clamped(reduce(x, Reduce::kVar), static_cast<T>(kStdFloor));
  return concat(mean, stdev);
}

// Frame weights softmax_t(tanh(X[t]) · p), an m-vector.
template <typename T>
BasicTensor<T> attention_weights(const BasicTensor<T>& x, const BasicTensor<T>& p) {
  if (x.rank() != 2 || p.rank() != 1 || p.numel() != x.dim(1)) {
    throw DimensionError("attention: frames " + shape_str(x.shape()) + " vs probe " +
                         shape_str(p.shape()));
  }
  auto scores = matmul(tanh(x), reshape(p, {p.numel(), 1}));
  return softmax(reshape(scores, {x.dim(0)}));
}

// kPaperLiteral: rescale each frame by its weight, then std_pool the result
// with plain 1/m averaging. kAttentiveStats: weighted mean and weighted
// variance, i.e. the weights replace the 1/m.
template <typename T>
BasicTensor<T> attention_pool(const BasicTensor<T>& x, const BasicTensor<T>& p,
                              AttentionMode mode) {
  const auto w = attention_weights(x, p);
  const std::size_t m = x.dim(0);
  if (mode == AttentionMode::kPaperLiteral) {
    return std_pool(mul(x, reshape(w, {m, 1})));
  }
  const auto w_row = reshape(w, {1, m});
  auto mean = reshape(matmul(w_row, x), {x.dim(1)});
  auto centered = sub(x, mean);
  auto var = reshape(matmul(w_row, square(centered)), {x.dim(1)});
  return concat(mean, sqrt_clamped(var, static_cast<T>(kStdFloor)));
}

template <typename T>
BasicTensor<T> temporal_pool(const BasicTensor<T>& x, PoolingType type,
                             const BasicTensor<T>* probe, AttentionMode mode) {
  switch (type) {
    case PoolingType::kAverage:
      return average_pool(x);
    case PoolingType::kStd:
      return std_pool(x);
    case PoolingType::kAttention:
      if (probe == nullptr) throw ContractError("attention pooling needs a probe vector");
      return attention_pool(x, *probe, mode);
  }
  throw ContractError("unknown pooling type");
}

std::string_view to_string(PoolingType t);
std::string_view to_string(AttentionMode m);
std::string_view to_string(LayerWeightMode m);
PoolingType parse_pooling(std::string_view s);
AttentionMode parse_attention_mode(std::string_view s);
LayerWeightMode parse_layer_weight_mode(std::string_view s);

}  // namespace emohead
