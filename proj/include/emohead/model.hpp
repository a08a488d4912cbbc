#pragma once

// Head model: architecture descriptor, named parameters, and the forward
// pass aggregate -> project -> pool -> condition -> classify.

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "emohead/conditioning.hpp"
#include "emohead/loss.hpp"
#include "emohead/manifest.hpp"
#include "emohead/pooling.hpp"
#include "emohead/rng.hpp"
#include "json.hpp"

namespace emohead {

struct Architecture {
  std::size_t num_layers = 4;
  std::size_t hidden = 32;
  std::size_t projection = 256;
  LayerWeightMode layer_weights = LayerWeightMode::kSoftmax;
  PoolingType pooling = PoolingType::kStd;
  AttentionMode attention_mode = AttentionMode::kPaperLiteral;
  GenderMode gender = GenderMode::kNone;
  TextMode text = TextMode::kNone;
  double dropout = 0.1;
  double label_smoothing = 0.0;
  ClassWeightMode class_weights = ClassWeightMode::kInverseFrequency;
  LossReduction reduction = LossReduction::kWeightedMean;

  std::size_t pooled() const { return pooled_size(pooling, projection); }
  bool uses_gender() const { return gender != GenderMode::kNone || text != TextMode::kNone; }
  bool uses_text() const { return text != TextMode::kNone; }

  // Throws ValidationError naming the offending field.
  void validate() const;

  nlohmann::ordered_json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static Architecture from_json(const nlohmann::json& j);

  bool operator==(const Architecture&) const = default;
};

// Models 1-5 of the submission table (1-based): attention pooling with
// d=256 (baseline); std pooling with d=32; std d=256 with gender
// multiplication; std d=256 with gender and text sum/3; the same with
// label smoothing 0.1. Desk-scale l and h defaults.
Architecture preset_architecture(int model);
inline constexpr int kNumPresets = 5;

// Ordered name -> tensor map.
template <typename T>
class ParameterSet {
 public:
  using Entry = std::pair<std::string, BasicTensor<T>>;

  void add(std::string name, BasicTensor<T> t) {
    if (find(name) != nullptr) throw ContractError("duplicate parameter " + name);
    entries_.emplace_back(std::move(name), std::move(t));
  }

  const BasicTensor<T>* find(std::string_view name) const {
    for (const auto& [n, t] : entries_) {
      if (n == name) return &t;
    }
    return nullptr;
  }

  const BasicTensor<T>& at(std::string_view name) const {
    const auto* t = find(name);
    if (t == nullptr) throw ContractError("missing parameter " + std::string(name));
    return *t;
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }

  std::vector<BasicTensor<T>> tensors() const {
    std::vector<BasicTensor<T>> out;
    for (const auto& [n, t] : entries_) out.push_back(t);
    return out;
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : entries_) n += t.numel();
    return n;
  }

  // Independent copy of the values; copies are trainable leaves.
  ParameterSet clone() const { return cast<T>(); }

  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (const auto& [n, t] : entries_) out.add(n, t.template cast<U>(true));
    return out;
  }

  void zero_grad() {
    for (auto& [n, t] : entries_) t.zero_grad();
  }

 private:
  std::vector<Entry> entries_;
};

// Top-level component a parameter belongs to, e.g. "projection" for
// "projection.weight".
inline std::string component_of(std::string_view name) {
  return std::string(name.substr(0, name.find('.')));
}

// Fresh trainable parameters for `arch`, drawn from `rng`.
ParameterSet<float> init_parameters(const Architecture& arch, Rng& rng);

namespace detail {

template <typename T>
AffineParams<T> affine_params(const ParameterSet<T>& p, const std::string& prefix) {
  return {p.at(prefix + ".weight"), p.at(prefix + ".bias")};
}

template <typename T>
ClnParams<T> cln_params(const ParameterSet<T>& p) {
  return {affine_params(p, "cln.f"), affine_params(p, "cln.g")};
}

}  // namespace detail

// Class logits [8] for one utterance. Dropout applies only when `training`
// and `rng` is non-null.
template <typename T>
BasicTensor<T> utterance_logits(const Architecture& arch, const ParameterSet<T>& params,
                                const BasicTensor<T>& features, int gender_id,
                                const BasicTensor<T>& text, bool training = false,
                                Rng* rng = nullptr) {
  auto aggregated = layer_aggregate(features, params.at("layer_weights"), arch.layer_weights);
  auto projected =
      project_frames(aggregated, params.at("projection.weight"), params.at("projection.bias"));
  const BasicTensor<T>* probe = params.find("attention.probe");
  auto pooled = temporal_pool(projected, arch.pooling, probe, arch.attention_mode);

  BasicTensor<T> conditioned = pooled;
  if (arch.uses_gender()) {
    if (gender_id != 0 && gender_id != 1) {
      throw DomainError("gender id " + std::to_string(gender_id) + " not in {0,1}");
    }
    auto e_gender = select_row(params.at("gender.embedding"), static_cast<std::size_t>(gender_id));
    if (arch.uses_text()) {
      TextProjector<T> tp{detail::affine_params(params, "text.linear"), params.at("text.norm.gain"),
                          params.at("text.norm.bias"), arch.dropout};
      AffineParams<T> reduce;
      ClnParams<T> cp;
      const bool is_cln = arch.text == TextMode::kCln;
      if (is_cln) {
        reduce = detail::affine_params(params, "text.reduce");
        cp = detail::cln_params(params);
      }
      conditioned = text_condition(pooled, e_gender, text, tp, arch.text, training, rng,
                                   is_cln ? &reduce : nullptr, is_cln ? &cp : nullptr);
    } else {
      AffineParams<T> stack;
      ClnParams<T> cp;
      if (arch.gender == GenderMode::kStackLinear) stack = detail::affine_params(params, "gender.stack");
      if (arch.gender == GenderMode::kCln) cp = detail::cln_params(params);
      conditioned = gender_condition(pooled, e_gender, arch.gender,
                                     arch.gender == GenderMode::kStackLinear ? &stack : nullptr,
                                     arch.gender == GenderMode::kCln ? &cp : nullptr);
    }
  }
  return affine(conditioned, params.at("classifier.weight"), params.at("classifier.bias"));
}

template <typename T>
struct Example {
  BasicTensor<T> features;  // [l, m, h]
  BasicTensor<T> text;      // [384]
  int gender_id = 0;
  int label_id = 0;
};

// Logits [batch, 8] stacked in example order.
template <typename T>
BasicTensor<T> batch_logits(const Architecture& arch, const ParameterSet<T>& params,
                            const std::vector<Example<T>>& batch, bool training = false,
                            Rng* rng = nullptr) {
  std::vector<BasicTensor<T>> rows;
  rows.reserve(batch.size());
  for (const auto& ex : batch) {
    rows.push_back(utterance_logits(arch, params, ex.features, ex.gender_id, ex.text, training, rng));
  }
  return reshape(concat(rows), {batch.size(), kNumClasses});
}

// Full training objective for a batch.
template <typename T>
BasicTensor<T> batch_loss(const Architecture& arch, const ParameterSet<T>& params,
                          const std::vector<Example<T>>& batch, const std::vector<double>& weights,
                          bool training = false, Rng* rng = nullptr) {
  std::vector<SmoothedTarget> targets;
  targets.reserve(batch.size());
  for (const auto& ex : batch) {
    targets.push_back(smooth_labels(ex.label_id, kNumClasses, arch.label_smoothing));
  }
  return weighted_cross_entropy(batch_logits(arch, params, batch, training, rng), targets, weights,
                                arch.reduction);
}

// Checkpoint directory: model.json (architecture + parameter index) and one
// SERT file per parameter.
void save_checkpoint(const Architecture& arch, const ParameterSet<float>& params,
                     const std::filesystem::path& dir);

struct Checkpoint {
  Architecture arch;
  ParameterSet<float> params;
};

Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace emohead
