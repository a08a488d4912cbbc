#include "emohead/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "emohead/errors.hpp"
#include "json.hpp"

namespace emohead {

namespace {

// Slack on each side of an equality written as two inequalities.
constexpr double kEqualityTol = 1e-6;
constexpr double kRowSumTol = 1e-4;

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string expected_header() {
  std::string h = "utterance_id,label";
  for (const auto name : kClassNames) h += ",p_" + std::string(name);
  return h;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

int label_index(const std::string& s) {
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (kClassNames[c] == s) return static_cast<int>(c);
  }
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (!s.empty() && end == s.c_str() + s.size() && v >= 0 && v < static_cast<long>(kNumClasses)) {
    return static_cast<int>(v);
  }
  return -1;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Euclidean projection of v onto {x >= 0, Σx = 1}.
void project_simplex(std::vector<double>& v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumulative += u[k];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  for (auto& x : v) x = std::max(0.0, x - theta);
}

// Nearest point of the mode's constraint set.
FusionWeights project(const FusionWeights& in) {
  FusionWeights out = in;
  if (in.mode == FusionMode::kPerClassSimplex) {
    std::vector<double> column(in.models);
    for (std::size_t j = 0; j < in.classes; ++j) {
      for (std::size_t i = 0; i < in.models; ++i) column[i] = in.at(i, j);
      project_simplex(column);
      for (std::size_t i = 0; i < in.models; ++i) out.w[i * in.classes + j] = column[i];
    }
  } else {
    const double total = std::accumulate(in.w.begin(), in.w.end(), 0.0);
    const double shift = (1.0 - total) / static_cast<double>(in.w.size());
    for (auto& x : out.w) x += shift;
  }
  return out;
}

F1Report fused_f1(const PredictionSet& preds, const FusionWeights& w) {
  return f1_scores(fuse_predict_all(preds, w), preds.labels, preds.classes);
}

nlohmann::ordered_json class_row(const F1Report& r) {
  nlohmann::ordered_json row = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < kNumClasses; ++c) row[std::string(kClassNames[c])] = r.per_class[c];
  row["macro"] = r.macro;
  return row;
}

}  // namespace

ModelPredictions read_predictions_csv(const std::filesystem::path& path, std::string name) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open predictions " + path.string());
  ModelPredictions out;
  out.name = name.empty() ? path.stem().string() : std::move(name);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty predictions file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header()) {
    throw ValidationError(path.string() + ": header must be '" + expected_header() + "'");
  }
  std::vector<std::string> problems;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() != 2 + kNumClasses) {
      problems.push_back(where + "expected " + std::to_string(2 + kNumClasses) + " fields");
      continue;
    }
    const int label = label_index(fields[1]);
    if (label < 0) {
      problems.push_back(where + "unknown label '" + fields[1] + "'");
      continue;
    }
    std::array<double, kNumClasses> p{};
    bool ok = true;
    double sum = 0.0;
    for (std::size_t c = 0; c < kNumClasses && ok; ++c) {
      ok = parse_double(fields[2 + c], p[c]) && p[c] >= 0.0;
      sum += p[c];
    }
    if (!ok) {
      problems.push_back(where + "probabilities must be finite non-negative numbers");
      continue;
    }
    if (std::abs(sum - 1.0) > kRowSumTol) {
      problems.push_back(where + "probabilities sum to " + format_double(sum));
      continue;
    }
    out.ids.push_back(fields[0]);
    out.labels.push_back(label);
    out.probabilities.push_back(p);
  }
  if (!problems.empty()) {
    std::string msg = path.string() + ": invalid predictions";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }
  if (out.ids.empty()) throw ValidationError(path.string() + ": no prediction rows");
  return out;
}

std::string predictions_csv(const ModelPredictions& preds) {
  std::string out = expected_header() + "\n";
  for (std::size_t u = 0; u < preds.ids.size(); ++u) {
    out += preds.ids[u];
    out += ',';
    out += kClassNames[static_cast<std::size_t>(preds.labels[u])];
    for (const double p : preds.probabilities[u]) out += "," + format_double(p);
    out += '\n';
  }
  return out;
}

void write_predictions_csv(const ModelPredictions& preds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << predictions_csv(preds);
  if (!out) throw IoError("failed writing " + path.string());
}

PredictionSet make_prediction_set(const std::vector<ModelPredictions>& models) {
  if (models.empty()) throw ValidationError("fusion needs at least one prediction file");
  PredictionSet set;
  const auto& first = models.front();
  set.ids = first.ids;
  set.labels = first.labels;
  const std::size_t n_m = models.size();
  set.probabilities.assign(set.ids.size(), std::vector<double>(n_m * kNumClasses));
  std::map<std::string, std::size_t> index;
  for (std::size_t u = 0; u < set.ids.size(); ++u) {
    if (!index.emplace(set.ids[u], u).second) {
      throw ValidationError(first.name + ": duplicate utterance id " + set.ids[u]);
    }
  }
  for (std::size_t i = 0; i < n_m; ++i) {
    const auto& model = models[i];
    set.model_names.push_back(model.name);
    if (model.ids.size() != set.ids.size()) {
      throw ValidationError(model.name + ": " + std::to_string(model.ids.size()) + " utterances, expected " +
                            std::to_string(set.ids.size()));
    }
    std::vector<bool> seen(set.ids.size(), false);
    for (std::size_t r = 0; r < model.ids.size(); ++r) {
      const auto it = index.find(model.ids[r]);
      if (it == index.end()) throw ValidationError(model.name + ": unknown utterance id " + model.ids[r]);
      const std::size_t u = it->second;
      if (seen[u]) throw ValidationError(model.name + ": duplicate utterance id " + model.ids[r]);
      seen[u] = true;
      if (model.labels[r] != set.labels[u]) {
        throw ValidationError(model.name + ": label of " + model.ids[r] + " disagrees with " + first.name);
      }
      std::copy(model.probabilities[r].begin(), model.probabilities[r].end(),
                set.probabilities[u].begin() + static_cast<std::ptrdiff_t>(i * kNumClasses));
    }
  }
  return set;
}

FusionWeights FusionWeights::uniform(FusionMode mode, std::size_t models, std::size_t classes) {
  if (models == 0 || classes == 0) throw DomainError("fusion weights need at least one model and class");
  FusionWeights fw;
  fw.mode = mode;
  fw.models = models;
  fw.classes = classes;
  const double v = mode == FusionMode::kPerClassSimplex ? 1.0 / static_cast<double>(models)
                                                        : 1.0 / static_cast<double>(models * classes);
  fw.w.assign(models * classes, v);
  return fw;
}

double FusionWeights::constraint_residual() const {
  double worst = 0.0;
  if (mode == FusionMode::kPerClassSimplex) {
    for (std::size_t j = 0; j < classes; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < models; ++i) {
        s += at(i, j);
        worst = std::max(worst, -at(i, j));
      }
      worst = std::max(worst, std::abs(s - 1.0));
    }
  } else {
    worst = std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0);
  }
  return worst;
}

int fuse_predict(std::span<const double> m, const FusionWeights& w) {
  if (m.size() != w.w.size() || w.w.size() != w.models * w.classes) {
    throw DimensionError("fuse_predict: " + std::to_string(m.size()) + " probabilities vs " +
                         std::to_string(w.models) + "x" + std::to_string(w.classes) + " weights");
  }
  int best = 0;
  double best_score = 0.0;
  for (std::size_t j = 0; j < w.classes; ++j) {
    double score = 0.0;
    for (std::size_t i = 0; i < w.models; ++i) score += m[i * w.classes + j] * w.at(i, j);
    if (j == 0 || score > best_score) {
      best = static_cast<int>(j);
      best_score = score;
    }
  }
  return best;
}

std::vector<int> fuse_predict_all(const PredictionSet& preds, const FusionWeights& w) {
  if (w.models != preds.num_models() || w.classes != preds.classes) {
    throw DimensionError("fusion weights are " + std::to_string(w.models) + "x" + std::to_string(w.classes) +
                         " but predictions come from " + std::to_string(preds.num_models()) + " models");
  }
  std::vector<int> out;
  out.reserve(preds.size());
  for (const auto& m : preds.probabilities) out.push_back(fuse_predict(m, w));
  return out;
}

FusionFit fit_fusion_weights(const PredictionSet& preds, const FusionOptions& options) {
  if (preds.size() == 0) throw ValidationError("fusion: empty prediction set");
  const std::size_t n_m = preds.num_models(), l = preds.classes;
  const std::size_t n = n_m * l;

  FusionFit fit;
  const auto init = FusionWeights::uniform(options.mode, n_m, l);
  fit.initial = fused_f1(preds, init);
  for (std::size_t i = 0; i < n_m; ++i) {
    FusionWeights only = FusionWeights::uniform(FusionMode::kPerClassSimplex, n_m, l);
    for (std::size_t k = 0; k < n; ++k) only.w[k] = (k / l == i) ? 1.0 : 0.0;
    fit.per_model.push_back(fused_f1(preds, only));
  }

  // Best projected candidate; only strict improvements replace it, so the
  // initialization wins ties.
  FusionWeights best = init;
  double best_f1 = fit.initial.macro;
  FusionWeights candidate = init;

  const std::size_t num_constraints = options.mode == FusionMode::kPerClassSimplex ? 2 * l + n : 2;
  auto objective = [&](std::span<const double> x, std::span<double> c) {
    std::copy(x.begin(), x.end(), candidate.w.begin());
    if (options.mode == FusionMode::kPerClassSimplex) {
      for (std::size_t j = 0; j < l; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n_m; ++i) s += x[i * l + j];
        c[2 * j] = s - 1.0 + kEqualityTol;
        c[2 * j + 1] = 1.0 - s + kEqualityTol;
      }
      for (std::size_t k = 0; k < n; ++k) c[2 * l + k] = x[k];
    } else {
      const double s = std::accumulate(x.begin(), x.end(), 0.0);
      c[0] = s - 1.0 + kEqualityTol;
      c[1] = 1.0 - s + kEqualityTol;
    }
    const double f1_raw = fused_f1(preds, candidate).macro;
    const auto projected = project(candidate);
    const double f1 = fused_f1(preds, projected).macro;
    if (f1 > best_f1) {
      best_f1 = f1;
      best = projected;
    }
    return -f1_raw;
  };

  CobylaOptions co;
  co.rho_begin = options.rho_begin;
  co.rho_end = options.rho_end;
  co.max_evals = options.max_evals;
  co.feasibility_tol = kEqualityTol;
  const auto result = cobyla_minimize(objective, num_constraints, init.w, co);

  fit.weights = best;
  fit.fitted = fused_f1(preds, best);
  fit.no_gain = !(fit.fitted.macro > fit.initial.macro);
  fit.evaluations = result.evaluations;
  fit.status = result.status;
  return fit;
}

std::string fusion_report_json(const PredictionSet& preds, const FusionFit& fit) {
  nlohmann::ordered_json j;
  j["mode"] = std::string(to_string(fit.weights.mode));
  j["utterances"] = preds.size();
  j["models"] = preds.model_names;
  j["f1_macro_initial"] = fit.initial.macro;
  j["f1_macro_fitted"] = fit.fitted.macro;
  j["no_gain"] = fit.no_gain;
  j["evaluations"] = fit.evaluations;
  j["constraint_residual"] = fit.weights.constraint_residual();
  auto& rows = j["per_class_f1"];
  rows = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < preds.num_models(); ++i) rows[preds.model_names[i]] = class_row(fit.per_model[i]);
  rows["fusion_initial"] = class_row(fit.initial);
  rows["fusion_fitted"] = class_row(fit.fitted);
  auto& weights = j["weights"];
  weights = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < fit.weights.models; ++i) {
    std::vector<double> row(fit.weights.w.begin() + static_cast<std::ptrdiff_t>(i * fit.weights.classes),
                            fit.weights.w.begin() + static_cast<std::ptrdiff_t>((i + 1) * fit.weights.classes));
    weights[preds.model_names[i]] = row;
  }
  return j.dump(2) + "\n";
}

std::string fused_csv(const PredictionSet& preds, const std::vector<int>& predictions) {
  if (predictions.size() != preds.size()) throw DimensionError("fused_csv: prediction count mismatch");
  std::string out = "utterance_id,predicted_class\n";
  for (std::size_t u = 0; u < preds.size(); ++u) {
    out += preds.ids[u] + "," + std::string(kClassNames[static_cast<std::size_t>(predictions[u])]) + "\n";
  }
  return out;
}

}  // namespace emohead
