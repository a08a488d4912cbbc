#pragma once

// Gender and text conditioning of the pooled utterance vector.

#include <string_view>

#include "emohead/ops.hpp"
#include "emohead/rng.hpp"

namespace emohead {

enum class GenderMode { kNone, kSum, kSumHalf, kMultiplication, kStackLinear, kCln, kSumThird };
enum class TextMode { kNone, kSumThird, kMultiplication, kCln };

inline constexpr double kNormEps = 1e-5;

template <typename T>
struct AffineParams {
  BasicTensor<T> weight;  // [in, out]
  BasicTensor<T> bias;    // [out]
};

// F = Linear -> LayerNorm -> ReLU -> Dropout, mapping a text embedding to q.
template <typename T>
struct TextProjector {
  AffineParams<T> linear;
  BasicTensor<T> ln_gain;
  BasicTensor<T> ln_bias;
  double dropout = 0.1;
};

// y = f(c) ⊙ (x - mean x) / sqrt(var x + eps) + g(c)
template <typename T>
struct ClnParams {
  AffineParams<T> f;
  AffineParams<T> g;
};

template <typename T>
BasicTensor<T> apply(const AffineParams<T>& a, const BasicTensor<T>& x) {
  return affine(x, a.weight, a.bias);
}

// (x - mean) / sqrt(var + eps) with scalar statistics over the features.
template <typename T>
BasicTensor<T> normalize_features(const BasicTensor<T>& x) {
  auto centered = sub(x, mean_all(x));
  auto denom = sqrt(add(var_all(x), static_cast<T>(kNormEps)));
  return div(centered, denom);
}

template <typename T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gain,
                          const BasicTensor<T>& bias) {
  return add(mul(normalize_features(x), gain), bias);
}

template <typename T>
BasicTensor<T> cln(const BasicTensor<T>& x, const BasicTensor<T>& condition,
                   const ClnParams<T>& params) {
  auto scale_v = apply(params.f, condition);
  auto shift_v = apply(params.g, condition);
  if (scale_v.numel() != x.numel()) {
    throw DimensionError("cln: condition maps to " + shape_str(scale_v.shape()) +
                         " but input is " + shape_str(x.shape()));
  }
  return add(mul(scale_v, normalize_features(x)), shift_v);
}

// F(e_text). Dropout is active only when `training` and `rng` is non-null.
template <typename T>
BasicTensor<T> project_text(const BasicTensor<T>& e_text, const TextProjector<T>& tp,
                            bool training, Rng* rng) {
  auto h = relu(layer_norm(apply(tp.linear, e_text), tp.ln_gain, tp.ln_bias));
  if (training && rng != nullptr) return dropout(h, tp.dropout, true, *rng);
  return h;
}

namespace detail {
inline void check_same_length(const char* what, std::size_t a, std::size_t b) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": lengths " + std::to_string(a) + " and " +
                         std::to_string(b) + " differ");
  }
}
}  // namespace detail

// `stack` is required for kStackLinear ([2q -> q]); `cln_params` for kCln.
template <typename T>
BasicTensor<T> gender_condition(const BasicTensor<T>& x, const BasicTensor<T>& e_gender,
                                GenderMode mode, const AffineParams<T>* stack = nullptr,
                                const ClnParams<T>* cln_params = nullptr) {
  detail::check_same_length("gender_condition", x.numel(), e_gender.numel());
  switch (mode) {
    case GenderMode::kNone:
      return x;
    case GenderMode::kSum:
      return add(x, e_gender);
    case GenderMode::kSumHalf:
      return scale(add(x, e_gender), static_cast<T>(0.5));
    case GenderMode::kMultiplication:
      return mul(x, e_gender);
    case GenderMode::kStackLinear:
      if (stack == nullptr) throw ContractError("stack_linear needs its [2q,q] map");
      return apply(*stack, concat(x, e_gender));
    case GenderMode::kCln:
      if (cln_params == nullptr) throw ContractError("cln needs f and g maps");
      return cln(x, e_gender, *cln_params);
    case GenderMode::kSumThird:
      throw ContractError("sum_third combines gender with text; use text_condition");
  }
  throw ContractError("unknown gender conditioning mode");
}

// Conditions on gender and an already projected text vector F(e_text).
// kCln needs `reduce` ([2q -> q], applied to [e_gender; F(e_text)]) and
// `cln_params`.
template <typename T>
BasicTensor<T> text_condition_projected(const BasicTensor<T>& x, const BasicTensor<T>& e_gender,
                                        const BasicTensor<T>& f_text, TextMode mode,
                                        const AffineParams<T>* reduce = nullptr,
                                        const ClnParams<T>* cln_params = nullptr) {
  detail::check_same_length("text_condition", x.numel(), e_gender.numel());
  detail::check_same_length("text_condition", x.numel(), f_text.numel());
  switch (mode) {
    case TextMode::kSumThird:
      return scale(add(add(x, e_gender), f_text), static_cast<T>(1.0 / 3.0));
    case TextMode::kMultiplication:
      return mul(mul(x, e_gender), f_text);
    case TextMode::kCln: {
      if (reduce == nullptr || cln_params == nullptr) {
        throw ContractError("text cln needs the reduction map and f/g maps");
      }
      auto condition = apply(*reduce, concat(e_gender, f_text));
      return cln(x, condition, *cln_params);
    }
    case TextMode::kNone:
      throw ContractError("text_condition called with mode none");
  }
  throw ContractError("unknown text conditioning mode");
}

template <typename T>
BasicTensor<T> text_condition(const BasicTensor<T>& x, const BasicTensor<T>& e_gender,
                              const BasicTensor<T>& e_text_raw, const TextProjector<T>& tp,
                              TextMode mode, bool training, Rng* rng,
                              const AffineParams<T>* reduce = nullptr,
                              const ClnParams<T>* cln_params = nullptr) {
  auto f_text = project_text(e_text_raw, tp, training, rng);
  return text_condition_projected(x, e_gender, f_text, mode, reduce, cln_params);
}

std::string_view to_string(GenderMode m);
std::string_view to_string(TextMode m);
GenderMode parse_gender_mode(std::string_view s);
TextMode parse_text_mode(std::string_view s);

}  // namespace emohead
