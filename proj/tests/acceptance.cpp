// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Plain executable, registered directly with ctest.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "emohead/cli.hpp"
#include "emohead/cobyla.hpp"
#include "emohead/errors.hpp"
#include "emohead/fusion.hpp"
#include "emohead/loss.hpp"
#include "emohead/metrics.hpp"
#include "emohead/model_gradcheck.hpp"
#include "emohead/pooling.hpp"
#include "emohead/run_config.hpp"
#include "emohead/synthetic.hpp"
#include "emohead/tensor_file.hpp"
#include "emohead/trainer.hpp"
#include "oracle_ensemble.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace emohead;
using namespace emohead::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("emohead_accept_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  ModelGradcheckOptions opts;
  opts.max_coordinates = std::size_t(1) << 30;  // every coordinate
  bool ok = true;
  double worst = 0.0;
  std::size_t coords = 0;
  for (int m = 1; m <= kNumPresets; ++m) {
    auto arch = preset_architecture(m);
    arch.num_layers = 4;
    arch.hidden = 32;
    arch.projection = 16;
    const auto r = model_gradcheck(arch, opts);
    ok = ok && r.passed && r.max_rel_error < 1e-3;
    worst = std::max(worst, r.max_rel_error);
    for (const auto& c : r.components) coords += c.checked;
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 60.0;
  return {ok, fmt("5 architectures, %zu coordinates, max rel err %.2e, %.1f s", coords, worst, secs)};
}

Outcome pooling_suite() {
  const double naive = pooling_oracle_error(100, 11);
  const double zero_probe = attentive_zero_probe_error(100, 12);
  const auto literal = attention_pool(Tensor64({2, 1}, {0, 2}), Tensor64::zeros({1}), AttentionMode::kPaperLiteral);
  const double hand = std::max(std::abs(literal[0] - 0.5), std::abs(literal[1] - 0.5));
  const bool ok = naive <= 1e-5 && zero_probe <= 1e-6 && hand <= 1e-12 && literal.numel() == 2;
  return {ok, fmt("naive %.1e, zero probe %.1e, literal example %.1e", naive, zero_probe, hand)};
}

Outcome conditioning_suite() {
  const auto reports = conditioning_identity_errors(100, 21);
  double worst = 0.0;
  for (const auto& r : reports) worst = std::max(worst, r.max_error);
  return {worst <= 1e-6, fmt("%zu identities x 100 vectors, max err %.1e", reports.size(), worst)};
}

Outcome loss_metric_suite() {
  const std::size_t batch = 5;
  std::vector<SmoothedTarget> targets;
  for (std::size_t b = 0; b < batch; ++b) targets.push_back(smooth_labels(static_cast<int>(b % 8), 8, 0.0));
  const std::vector<double> unit(8, 1.0);
  const auto loss = weighted_cross_entropy(Tensor::zeros({batch, 8}), targets, unit);
  const double ce_err = std::abs(loss.item() - std::log(8.0));

  double sum_err = 0.0;
  for (const double gamma : {0.0, 0.1, 0.2}) {
    for (const std::size_t m : {2u, 8u}) {
      for (std::size_t c = 0; c < m; ++c) {
        double s = 0.0;
        for (const double v : smooth_labels(static_cast<int>(c), m, gamma).distribution) s += v;
        sum_err = std::max(sum_err, std::abs(s - 1.0));
      }
    }
  }

  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> cls(0, 7);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<int> pred(1 + trial % 40), ref(pred.size());
    for (auto& p : pred) p = cls(rng);
    for (auto& r : ref) r = cls(rng);
    const auto got = f1_scores(pred, ref, 8);
    const auto want = brute_force_f1(pred, ref, 8);
    if (got.macro != want.macro || got.per_class != want.per_class) ++mismatches;
  }
  const bool ok = ce_err <= 1e-5 && sum_err <= 1e-9 && mismatches == 0;
  return {ok, fmt("|CE - ln 8| %.1e, smoothing sum err %.1e, F1 mismatches %zu/1000", ce_err, sum_err, mismatches)};
}

// Best dev F1 within the configured epochs for one shipped configuration.
double separability_run(int model, double separation, const fs::path& dir) {
  auto cfg = parse_run_config(nlohmann::json::parse(preset_config(model).dump()));
  cfg.data.separation = separation;
  const auto ds = generate_synthetic_dataset(cfg.data, dir);
  const auto train_set = load_dataset(ds.train, cfg.model.num_layers, cfg.model.hidden);
  const auto dev_set = load_dataset(ds.dev, cfg.model.num_layers, cfg.model.hidden);
  const auto r = train(cfg.model, train_set, dev_set, cfg.train);
  return r.best_dev_f1.value_or(0.0);
}

Outcome separability_suite() {
  bool ok = true;
  std::string detail;
  for (int m = 1; m <= kNumPresets; ++m) {
    const auto t0 = Clock::now();
    const double sep = separability_run(m, 5.0, scratch("sep5"));
    const double flat = separability_run(m, 0.0, scratch("sep0"));
    const double secs = seconds_since(t0);
    ok = ok && sep >= 0.95 && flat < 0.2 && secs < 300.0;
    detail += fmt("%sM%d %.3f/%.3f %.0fs", m == 1 ? "" : ", ", m, sep, flat, secs);
  }
  return {ok, "dev F1 at delta 5/0: " + detail};
}

Outcome cobyla_suite() {
  struct Problem {
    const char* name;
    CobylaFunction fn;
    std::size_t constraints;
    std::vector<double> x0, want;
    double tol;
  };
  const double h = std::sqrt(0.5);
  const std::vector<Problem> problems = {
      {"parabola",
       [](std::span<const double> x, std::span<double> c) {
         c[0] = x[0];
         return (x[0] - 1) * (x[0] - 1);
       },
       1, {5.0}, {1.0}, 1e-3},
      {"disk",
       [](std::span<const double> x, std::span<double> c) {
         c[0] = 1 - x[0] * x[0] - x[1] * x[1];
         return x[0] + x[1];
       },
       1, {0.0, 0.0}, {-h, -h}, 1e-2},
      {"corner",
       [](std::span<const double> x, std::span<double> c) {
         c[0] = x[0] - 2;
         return x[0];
       },
       1, {0.0}, {2.0}, 1e-3},
  };
  bool ok = true;
  std::string detail;
  for (const auto& p : problems) {
    const auto r = cobyla_minimize(p.fn, p.constraints, p.x0);
    double err = 0.0;
    for (std::size_t i = 0; i < p.want.size(); ++i) err = std::max(err, std::abs(r.x[i] - p.want[i]));
    ok = ok && r.feasible && err <= p.tol && r.evaluations <= 2000;
    detail += fmt("%s%s err %.1e in %zu evals", detail.empty() ? "" : ", ", p.name, err, r.evaluations);
  }
  return {ok, detail};
}

PredictionSet random_prediction_set(std::mt19937_64& rng, std::size_t models, std::size_t utterances) {
  std::gamma_distribution<double> g(0.5);
  std::uniform_int_distribution<int> cls(0, kNumClasses - 1);
  PredictionSet s;
  for (std::size_t i = 0; i < models; ++i) s.model_names.push_back("m" + std::to_string(i));
  for (std::size_t u = 0; u < utterances; ++u) {
    s.ids.push_back("u" + std::to_string(u));
    s.labels.push_back(cls(rng));
    std::vector<double> row(models * kNumClasses);
    for (std::size_t i = 0; i < models; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < kNumClasses; ++j) total += row[i * kNumClasses + j] = g(rng) + 1e-12;
      for (std::size_t j = 0; j < kNumClasses; ++j) row[i * kNumClasses + j] /= total;
    }
    s.probabilities.push_back(std::move(row));
  }
  return s;
}

Outcome fusion_suite() {
  const auto oracle = oracle_ensemble();
  const double grid = best_grid_f1(oracle);
  const auto fit = fit_fusion_weights(oracle);
  bool ok = grid == 1.0 && fit.fitted.macro == 1.0;
  double residual = fit.weights.constraint_residual();

  std::mt19937_64 rng(41);
  std::size_t trials = 0, regressions = 0;
  for (const auto mode : {FusionMode::kPerClassSimplex, FusionMode::kGlobalSums}) {
    for (int t = 0; t < 10; ++t) {
      const auto preds = random_prediction_set(rng, 2 + t % 3, 40 + 8 * t);
      FusionOptions opts;
      opts.mode = mode;
      const auto r = fit_fusion_weights(preds, opts);
      ++trials;
      if (r.fitted.macro < r.initial.macro) ++regressions;
      residual = std::max(residual, r.weights.constraint_residual());
    }
  }
  ok = ok && regressions == 0 && residual <= 1e-6;
  return {ok, fmt("oracle: grid %.3f, fitted %.3f; random: %zu/%zu regressions; max residual %.1e", grid,
                  fit.fitted.macro, regressions, trials, residual)};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[fs::relative(e.path(), dir).string()] = s.str();
  }
  return files;
}

// Every command twice in separate directories; all files and stdout must
// agree byte for byte (config.json aside, which records the directory).
Outcome reproducibility_suite() {
  const fs::path configs = fs::path(EMOHEAD_SOURCE_DIR) / "configs";
  std::vector<std::map<std::string, std::string>> runs;
  std::vector<std::string> stdouts;
  for (int rep = 0; rep < 2; ++rep) {
    const auto dir = scratch("repro" + std::to_string(rep));
    std::string transcript;
    auto run = [&](std::vector<std::string> args, const std::string& out_dir) {
      for (const std::string s :
           {"paths.data_dir=" + (dir / "data").string(), "paths.output_dir=" + out_dir,
            std::string("data.class_counts=[10,10,10,10,10,10,10,10]"),
            std::string("data.dev_class_counts=[5,5,5,5,5,5,5,5]"), std::string("train.epochs=3")}) {
        args.push_back("--set");
        args.push_back(s);
      }
      std::ostringstream out, err;
      const int code = run_cli(args, out, err);
      // Output directories differ between the two runs by construction.
      std::string text = out.str();
      for (std::size_t p; (p = text.find(dir.string())) != std::string::npos;) text.replace(p, dir.string().size(), "<dir>");
      transcript += text;
      if (code != kExitOk) throw std::runtime_error(args[0] + " failed: " + err.str());
    };
    run({"gen-data", "-c", (configs / "model1.json").string()}, (dir / "gen").string());
    std::vector<std::string> csvs;
    for (int m = 1; m <= kNumPresets; ++m) {
      const auto cfg = (configs / ("model" + std::to_string(m) + ".json")).string();
      const auto out_dir = (dir / ("model" + std::to_string(m))).string();
      run({"train", "-c", cfg, "--set", "model.projection=16"}, out_dir);
      run({"eval", "-c", cfg, "--set", "model.projection=16"}, out_dir);
      csvs.push_back(out_dir + "/predictions.csv");
    }
    std::vector<std::string> fuse = {"fuse", "-c", (configs / "model1.json").string()};
    fuse.insert(fuse.end(), csvs.begin(), csvs.end());
    run(fuse, (dir / "fusion").string());
    run({"gradcheck", "--all-presets", "--projection", "16"}, (dir / "gc").string());
    runs.push_back(snapshot(dir));
    stdouts.push_back(transcript);
  }
  std::size_t compared = 0, differing = 0;
  std::string first_diff;
  for (const auto& [name, bytes] : runs[0]) {
    if (name.ends_with("config.json")) continue;
    ++compared;
    const auto it = runs[1].find(name);
    if (it == runs[1].end() || it->second != bytes) {
      if (differing++ == 0) first_diff = name;
    }
  }
  const bool same_stdout = stdouts[0] == stdouts[1];
  const bool ok = differing == 0 && runs[0].size() == runs[1].size() && same_stdout;
  return {ok, fmt("%zu files compared, %zu differ%s%s, stdout %s", compared, differing,
                  first_diff.empty() ? "" : " first: ", first_diff.c_str(), same_stdout ? "identical" : "differs")};
}

template <typename E>
bool rejects_with(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_tensor(bytes);
  } catch (const E&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

Outcome format_suite() {
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<std::size_t> rank(1, 3), dim(1, 17);
  std::uniform_real_distribution<float> value(-1e3f, 1e3f);
  std::size_t exact = 0;
  for (int t = 0; t < 50; ++t) {
    Shape shape(rank(rng));
    for (auto& d : shape) d = dim(rng);
    std::vector<float> v(shape_numel(shape));
    for (auto& x : v) x = value(rng);
    const Tensor a(shape, v);
    const auto b = decode_tensor(encode_tensor(a));
    if (b.shape() == a.shape() && std::memcmp(b.data().data(), a.data().data(), v.size() * sizeof(float)) == 0) {
      ++exact;
    }
  }

  const auto good = encode_tensor(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  std::size_t rejected = 0, cases = 0;
  auto header_case = [&](std::size_t offset, std::uint8_t value) {
    auto bad = good;
    bad[offset] = value;
    ++cases;
    rejected += rejects_with<FormatError>(bad);
  };
  header_case(0, 'X');  // magic
  header_case(4, 2);    // version
  header_case(5, 2);    // dtype
  header_case(6, 0);    // rank 0
  header_case(6, 4);    // rank 4
  auto truncated_case = [&](std::vector<std::uint8_t> bad) {
    ++cases;
    rejected += rejects_with<CorruptionError>(bad);
  };
  truncated_case({good.begin(), good.end() - 1});
  truncated_case({good.begin(), good.end() - 4 * 6});
  truncated_case({good.begin(), good.begin() + 3});
  auto longer = good;
  longer.push_back(0);
  truncated_case(longer);

  const bool ok = exact == 50 && rejected == cases;
  return {ok, fmt("%zu/50 bit-exact roundtrips, %zu/%zu malformed inputs rejected with the right class", exact,
                  rejected, cases)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient suite", gradient_suite},
      {"pooling oracle suite", pooling_suite},
      {"conditioning identity suite", conditioning_suite},
      {"loss/metric oracle", loss_metric_suite},
      {"end-to-end separability", separability_suite},
      {"COBYLA suite", cobyla_suite},
      {"fusion gain", fusion_suite},
      {"reproducibility", reproducibility_suite},
      {"format suite", format_suite},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
