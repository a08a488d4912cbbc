#include "emohead/cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include "CLI11.hpp"
#include "emohead/errors.hpp"
#include "emohead/run_config.hpp"

namespace emohead {

namespace {

namespace fs = std::filesystem;

// Raised for anything the user must fix in the config or arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<LoadedUtterance> load_split(const fs::path& manifest, const Architecture& arch) {
  return load_dataset(load_manifest(manifest), arch.num_layers, arch.hidden);
}

int cmd_gen_data(const RunConfig& cfg, std::ostream& out) {
  const auto ds = generate_synthetic_dataset(cfg.data, cfg.paths.data_dir);
  out << "wrote " << ds.train.records.size() << " train and " << ds.dev.records.size() << " dev utterances to "
      << cfg.paths.data_dir << "\n";
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto train_set = load_split(cfg.paths.train_manifest_path(), cfg.model);
  std::vector<LoadedUtterance> dev_set;
  if (cfg.train.eval_every_epoch) dev_set = load_split(cfg.paths.dev_manifest_path(), cfg.model);
  const auto result = train(cfg.model, train_set, dev_set, cfg.train);

  const fs::path outdir = cfg.paths.output_dir;
  save_checkpoint(cfg.model, result.best, cfg.paths.checkpoint_path());
  write_file(outdir / "train_log.jsonl", training_log_jsonl(result.log));
  write_file(outdir / "config.json", cfg.describe().dump(2) + "\n");
  for (const auto& e : result.log) {
    out << "epoch " << e.epoch << "  loss " << fixed(e.train_loss);
    if (e.dev_f1_macro) out << "  dev_f1_macro " << fixed(*e.dev_f1_macro);
    out << "\n";
  }
  if (result.diverged) {
    err << "error: training diverged: " << result.diagnostic << " (kept checkpoint of epoch " << result.best_epoch
        << ")\n";
    return kExitRuntime;
  }
  out << "checkpoint (epoch " << result.best_epoch << ") written to " << cfg.paths.checkpoint_path().string()
      << "\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  const auto ck = load_checkpoint(cfg.paths.checkpoint_path());
  const auto data = load_split(cfg.paths.eval_manifest_path(), ck.arch);
  const auto ev = evaluate(ck.arch, ck.params, data);
  ModelPredictions preds{.name = "model", .ids = ev.ids, .labels = ev.labels, .probabilities = ev.probabilities};
  const fs::path outdir = cfg.paths.output_dir;
  fs::create_directories(outdir);
  write_predictions_csv(preds, outdir / "predictions.csv");
  write_file(outdir / "metrics.json", metrics_json(ev.metrics));
  out << "f1_macro " << fixed(ev.metrics.macro) << " on " << data.size() << " utterances\n";
  return kExitOk;
}

// File stems, or parent directory names when the stems collide (e.g. five
// out/modelN/predictions.csv files).
std::vector<std::string> model_names(const std::vector<std::string>& files) {
  std::vector<std::string> names;
  std::set<std::string> seen;
  bool unique = true;
  for (const auto& f : files) {
    names.push_back(fs::path(f).stem().string());
    unique = seen.insert(names.back()).second && unique;
  }
  if (unique) return names;
  names.clear();
  for (const auto& f : files) {
    const auto parent = fs::path(f).parent_path().filename().string();
    names.push_back(parent.empty() ? fs::path(f).stem().string() : parent);
  }
  return names;
}

int cmd_fuse(const RunConfig& cfg, const std::vector<std::string>& extra, std::ostream& out) {
  std::vector<std::string> files = cfg.paths.predictions;
  files.insert(files.end(), extra.begin(), extra.end());
  if (files.size() < 2) throw ConfigError("fuse needs at least two prediction files (paths.predictions)");
  const auto names = model_names(files);
  std::vector<ModelPredictions> models;
  for (std::size_t i = 0; i < files.size(); ++i) models.push_back(read_predictions_csv(files[i], names[i]));
  const auto set = make_prediction_set(models);
  const auto fit = fit_fusion_weights(set, cfg.fusion);

  const fs::path outdir = cfg.paths.output_dir;
  write_file(outdir / "fused.csv", fused_csv(set, fuse_predict_all(set, fit.weights)));
  write_file(outdir / "fusion_report.json", fusion_report_json(set, fit));
  for (std::size_t i = 0; i < set.num_models(); ++i) {
    out << set.model_names[i] << "  f1_macro " << fixed(fit.per_model[i].macro) << "\n";
  }
  out << "uniform fusion  f1_macro " << fixed(fit.initial.macro) << "\n";
  out << "fitted fusion   f1_macro " << fixed(fit.fitted.macro) << (fit.no_gain ? "  (no gain)" : "") << "\n";
  return kExitOk;
}

int cmd_gradcheck(const RunConfig& cfg, bool all_presets, std::size_t projection, std::ostream& out,
                  std::ostream& err) {
  std::vector<std::pair<std::string, Architecture>> archs;
  if (all_presets) {
    for (int m = 1; m <= kNumPresets; ++m) {
      auto a = preset_architecture(m);
      a.num_layers = cfg.model.num_layers;
      a.hidden = cfg.model.hidden;
      archs.emplace_back("model " + std::to_string(m), a);
    }
  } else {
    archs.emplace_back("configured model", cfg.model);
  }
  bool ok = true;
  for (auto& [label, arch] : archs) {
    if (projection != 0) arch.projection = projection;
    try {
      arch.validate();
    } catch (const ValidationError& e) {
      throw ConfigError(e.what());
    }
    const auto result = model_gradcheck(arch, cfg.gradcheck);
    out << "== " << label << " (pooling " << to_string(arch.pooling) << ", d=" << arch.projection << ", gender "
        << to_string(arch.gender) << ", text " << to_string(arch.text) << ")\n";
    out << gradcheck_table(result, cfg.gradcheck.tolerance);
    ok = ok && result.passed;
  }
  if (!ok) {
    err << "error: gradient check failed (tolerance " << cfg.gradcheck.tolerance << ")\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Speech emotion recognition heads on precomputed SSL features"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "JSON run config");
    sub->add_option("--set", overrides, "Override a config field, e.g. --set train.lr=1e-3")->allow_extra_args(false);
  };
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic dataset (manifests + tensors)");
  auto* trn = app.add_subcommand("train", "Train a head model and save the best-dev checkpoint");
  auto* evl = app.add_subcommand("eval", "Evaluate a checkpoint: probabilities CSV + metrics JSON");
  auto* fus = app.add_subcommand("fuse", "Fit fusion weights over several prediction CSVs");
  auto* gck = app.add_subcommand("gradcheck", "Compare autodiff gradients with finite differences");
  auto* dsc = app.add_subcommand("describe", "Print the fully resolved config");
  for (auto* s : {gen, trn, evl, fus, gck, dsc}) add_common(s);
  std::vector<std::string> fuse_inputs;
  fus->add_option("predictions", fuse_inputs, "Prediction CSVs (added to paths.predictions)");
  bool all_presets = false;
  std::size_t projection = 0;
  gck->add_flag("--all-presets", all_presets, "Check every preset architecture");
  gck->add_option("--projection", projection, "Override the projection size d");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  RunConfig cfg;
  try {
    cfg = load_run_config(config_path, overrides);
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (*gen) return cmd_gen_data(cfg, out);
    if (*trn) return cmd_train(cfg, out, err);
    if (*evl) return cmd_eval(cfg, out);
    if (*fus) return cmd_fuse(cfg, fuse_inputs, out);
    if (*gck) return cmd_gradcheck(cfg, all_presets, projection, out, err);
    out << cfg.describe().dump(2) << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace emohead
