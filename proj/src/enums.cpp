#include <array>
#include <string>
#include <utility>

#include "emohead/conditioning.hpp"
#include "emohead/fusion.hpp"
#include "emohead/loss.hpp"
#include "emohead/pooling.hpp"

namespace emohead {

namespace {

template <typename E, std::size_t N>
using Names = std::array<std::pair<E, std::string_view>, N>;

constexpr Names<PoolingType, 3> kPooling = {{
    {PoolingType::kAverage, "average"}, {PoolingType::kStd, "std"}, {PoolingType::kAttention, "attention"}}};
constexpr Names<AttentionMode, 2> kAttention = {{
    {AttentionMode::kPaperLiteral, "paper_literal"}, {AttentionMode::kAttentiveStats, "attentive_stats"}}};
constexpr Names<LayerWeightMode, 2> kLayerWeights = {{
    {LayerWeightMode::kSoftmax, "softmax"}, {LayerWeightMode::kRaw, "raw"}}};
constexpr Names<GenderMode, 7> kGender = {{{GenderMode::kNone, "none"},
                                           {GenderMode::kSum, "sum"},
                                           {GenderMode::kSumHalf, "sum_half"},
                                           {GenderMode::kMultiplication, "multiplication"},
                                           {GenderMode::kStackLinear, "stack_linear"},
                                           {GenderMode::kCln, "cln"},
                                           {GenderMode::kSumThird, "sum_third"}}};
constexpr Names<TextMode, 4> kText = {{{TextMode::kNone, "none"},
                                       {TextMode::kSumThird, "sum_third"},
                                       {TextMode::kMultiplication, "multiplication"},
                                       {TextMode::kCln, "cln"}}};
constexpr Names<ClassWeightMode, 2> kWeights = {{
    {ClassWeightMode::kLiteral, "literal"}, {ClassWeightMode::kInverseFrequency, "inverse_frequency"}}};
constexpr Names<LossReduction, 2> kReduction = {{
    {LossReduction::kWeightedMean, "weighted_mean"}, {LossReduction::kSum, "sum"}}};
constexpr Names<FusionMode, 2> kFusion = {{
    {FusionMode::kPerClassSimplex, "per_class_simplex"}, {FusionMode::kGlobalSums, "global_sums"}}};

template <typename E, std::size_t N>
std::string_view name_of(const Names<E, N>& table, E value) {
  for (const auto& [e, s] : table) {
    if (e == value) return s;
  }
  return "?";
}

template <typename E, std::size_t N>
E parse_name(const Names<E, N>& table, std::string_view s, const char* what) {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  std::string allowed;
  for (const auto& [e, name] : table) {
    if (!allowed.empty()) allowed += ", ";
    allowed += name;
  }
  throw ValidationError("unknown " + std::string(what) + " '" + std::string(s) + "' (expected one of: " +
                        allowed + ")");
}

}  // namespace

std::string_view to_string(PoolingType t) { return name_of(kPooling, t); }
std::string_view to_string(AttentionMode m) { return name_of(kAttention, m); }
std::string_view to_string(LayerWeightMode m) { return name_of(kLayerWeights, m); }
std::string_view to_string(GenderMode m) { return name_of(kGender, m); }
std::string_view to_string(TextMode m) { return name_of(kText, m); }
std::string_view to_string(ClassWeightMode m) { return name_of(kWeights, m); }
std::string_view to_string(LossReduction r) { return name_of(kReduction, r); }
std::string_view to_string(FusionMode m) { return name_of(kFusion, m); }

PoolingType parse_pooling(std::string_view s) { return parse_name(kPooling, s, "pooling type"); }
AttentionMode parse_attention_mode(std::string_view s) { return parse_name(kAttention, s, "attention mode"); }
LayerWeightMode parse_layer_weight_mode(std::string_view s) {
  return parse_name(kLayerWeights, s, "layer weight mode");
}
GenderMode parse_gender_mode(std::string_view s) { return parse_name(kGender, s, "gender conditioning"); }
TextMode parse_text_mode(std::string_view s) { return parse_name(kText, s, "text conditioning"); }
ClassWeightMode parse_class_weight_mode(std::string_view s) {
  return parse_name(kWeights, s, "class weight mode");
}
LossReduction parse_loss_reduction(std::string_view s) { return parse_name(kReduction, s, "loss reduction"); }
FusionMode parse_fusion_mode(std::string_view s) { return parse_name(kFusion, s, "fusion mode"); }

}  // namespace emohead
