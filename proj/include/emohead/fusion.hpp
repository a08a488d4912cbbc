#pragma once

// Weighted-argmax fusion of several models' class probabilities, with the
// weight matrix fitted by COBYLA to maximize F1-macro on a given set.

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "emohead/cobyla.hpp"
#include "emohead/manifest.hpp"
#include "emohead/metrics.hpp"

namespace emohead {

// One model's per-utterance probabilities, as read from or written to CSV.
struct ModelPredictions {
  std::string name;
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<std::array<double, kNumClasses>> probabilities;
};

// Header "utterance_id,label,p_Neutral,...,p_Fear". Rows must sum to 1
// within 1e-4 (ValidationError listing offending lines otherwise).
ModelPredictions read_predictions_csv(const std::filesystem::path& path, std::string name = {});
void write_predictions_csv(const ModelPredictions& preds, const std::filesystem::path& path);
std::string predictions_csv(const ModelPredictions& preds);

// All models' predictions over a shared utterance list, aligned by id.
struct PredictionSet {
  std::vector<std::string> model_names;
  std::vector<std::string> ids;
  std::vector<int> labels;
  // probabilities[u][i * classes + j] = model i's probability of class j.
  std::vector<std::vector<double>> probabilities;
  std::size_t classes = kNumClasses;

  std::size_t num_models() const { return model_names.size(); }
  std::size_t size() const { return ids.size(); }
};

// Aligns by the first model's id order. Every model must cover exactly the
// same ids with the same labels.
PredictionSet make_prediction_set(const std::vector<ModelPredictions>& models);

enum class FusionMode {
  kPerClassSimplex,  // column j: w[i,j] >= 0, Σ_i w[i,j] = 1
  kGlobalSums,       // Σ_ij w[i,j] = 1, entries unrestricted in sign
};

struct FusionWeights {
  FusionMode mode = FusionMode::kPerClassSimplex;
  std::size_t models = 0;
  std::size_t classes = kNumClasses;
  std::vector<double> w;  // row-major [models, classes]

  double at(std::size_t i, std::size_t j) const { return w[i * classes + j]; }

  // Feasible starting point: 1/n_m per entry (per-class) or 1/(n_m l).
  static FusionWeights uniform(FusionMode mode, std::size_t models, std::size_t classes = kNumClasses);
  // Largest violation of the mode's constraints.
  double constraint_residual() const;
};

// argmax_j Σ_i M[i,j] w[i,j] with the lowest index winning ties. `m` is the
// row-major [models, classes] probability matrix.
int fuse_predict(std::span<const double> m, const FusionWeights& w);
std::vector<int> fuse_predict_all(const PredictionSet& preds, const FusionWeights& w);

struct FusionOptions {
  FusionMode mode = FusionMode::kPerClassSimplex;
  double rho_begin = 0.2;
  double rho_end = 1e-4;
  std::size_t max_evals = 5000;
};

struct FusionFit {
  FusionWeights weights;
  F1Report initial;  // uniform weights
  F1Report fitted;
  std::vector<F1Report> per_model;
  bool no_gain = false;
  std::size_t evaluations = 0;
  CobylaStatus status = CobylaStatus::kConverged;
};

// Maximizes fused F1-macro on `preds`. The returned weights are the best
// feasible point seen (projected onto the constraint set), so the fitted
// F1 is never below the uniform initialization's.
FusionFit fit_fusion_weights(const PredictionSet& preds, const FusionOptions& options = {});

// Report JSON: per-class F1 rows in canonical class order for each model,
// the uniform initialization and the fitted fusion.
std::string fusion_report_json(const PredictionSet& preds, const FusionFit& fit);
// "utterance_id,predicted_class" with class names.
std::string fused_csv(const PredictionSet& preds, const std::vector<int>& predictions);

std::string_view to_string(FusionMode m);
FusionMode parse_fusion_mode(std::string_view s);

}  // namespace emohead
