#pragma once

// One JSON document drives every CLI command:
//
//   {
//     "seed": 0,
//     "data":   { class_counts, dev_class_counts, frames_min, frames_max,
//                 separation, noise, gender_bias },
//     "model":  { "preset": 1..5 (optional), then any Architecture key },
//     "train":  { lr, weight_decay, epochs, batch_size, crop_frames, eval_every_epoch },
//     "paths":  { data_dir, train_manifest, dev_manifest, eval_manifest,
//                 output_dir, checkpoint, predictions },
//     "fusion": { mode, rho_begin, rho_end, max_evals },
//     "gradcheck": { batch, frames, eps, max_coordinates, tolerance }
//   }
//
// Missing keys take defaults, unknown keys are rejected, and the feature
// geometry (num_layers, hidden) lives only in "model".

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emohead/fusion.hpp"
#include "emohead/model.hpp"
#include "emohead/model_gradcheck.hpp"
#include "emohead/synthetic.hpp"
#include "emohead/trainer.hpp"
#include "json.hpp"

namespace emohead {

struct RunPaths {
  std::string data_dir = "data";
  // Empty manifests default to <data_dir>/train.jsonl and dev.jsonl; the
  // eval manifest defaults to the dev manifest.
  std::string train_manifest;
  std::string dev_manifest;
  std::string eval_manifest;
  std::string output_dir = "out";
  // Defaults to <output_dir>/checkpoint.
  std::string checkpoint;
  // Prediction CSVs for `fuse`.
  std::vector<std::string> predictions;

  std::filesystem::path train_manifest_path() const;
  std::filesystem::path dev_manifest_path() const;
  std::filesystem::path eval_manifest_path() const;
  std::filesystem::path checkpoint_path() const;

  bool operator==(const RunPaths&) const = default;
};

struct RunConfig {
  std::uint64_t seed = 0;
  SyntheticSpec data;  // num_layers/hidden mirror `model`
  Architecture model;
  TrainConfig train;
  RunPaths paths;
  FusionOptions fusion;
  ModelGradcheckOptions gradcheck;

  // Every field, defaults filled in; parse(describe()) reproduces the config.
  nlohmann::ordered_json describe() const;

  bool operator==(const RunConfig& o) const;
};

// Throws ValidationError naming the offending field (e.g. "train.lr").
RunConfig parse_run_config(const nlohmann::json& doc);

// Applies "a.b.c=value" overrides to the raw document before validation.
// The value is parsed as JSON when possible (numbers, booleans, arrays) and
// taken as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

// Reads the file (if non-empty), applies overrides, validates.
RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// Config file for preset `model` (1..5) on the synthetic task.
nlohmann::ordered_json preset_config(int model);

}  // namespace emohead
