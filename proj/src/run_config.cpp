#include "emohead/run_config.hpp"

#include <fstream>
#include <set>

#include "emohead/errors.hpp"

namespace emohead {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Reads typed fields from one section, collecting every problem instead of
// stopping at the first.
class Section {
 public:
  Section(const json& doc, std::string name, std::set<std::string> keys, std::vector<std::string>& errors)
      : name_(std::move(name)), errors_(errors) {
    if (!doc.contains(name_)) return;
    const auto& v = doc.at(name_);
    if (!v.is_object()) {
      errors_.push_back(name_ + ": expected an object");
      return;
    }
    obj_ = v;
    for (const auto& [key, _] : obj_.items()) {
      if (!keys.count(key)) errors_.push_back(name_ + "." + key + ": unknown key");
    }
  }

  const json& raw() const { return obj_; }

  template <typename F>
  void read(const char* key, F&& assign) {
    if (!obj_.contains(key)) return;
    try {
      assign(obj_.at(key));
    } catch (const std::exception& e) {
      errors_.push_back(name_ + "." + key + ": " + e.what());
    }
  }

  void count(const char* key, std::size_t& out) {
    read(key, [&](const json& v) {
      if (!v.is_number_unsigned()) throw ValidationError("expected a non-negative integer, got " + v.dump());
      out = v.get<std::size_t>();
    });
  }
  void number(const char* key, double& out) {
    read(key, [&](const json& v) {
      if (!v.is_number()) throw ValidationError("expected a number, got " + v.dump());
      out = v.get<double>();
    });
  }
  void string(const char* key, std::string& out) {
    read(key, [&](const json& v) {
      if (!v.is_string()) throw ValidationError("expected a string, got " + v.dump());
      out = v.get<std::string>();
    });
  }
  void boolean(const char* key, bool& out) {
    read(key, [&](const json& v) {
      if (!v.is_boolean()) throw ValidationError("expected true or false, got " + v.dump());
      out = v.get<bool>();
    });
  }
  void counts(const char* key, std::vector<std::size_t>& out) {
    read(key, [&](const json& v) {
      if (!v.is_array()) throw ValidationError("expected an array of counts");
      std::vector<std::size_t> tmp;
      for (const auto& x : v) {
        if (!x.is_number_unsigned()) throw ValidationError("expected non-negative integers, got " + x.dump());
        tmp.push_back(x.get<std::size_t>());
      }
      out = std::move(tmp);
    });
  }

  // Runs a validate() style check, attributing failures to this section.
  template <typename F>
  void check(F&& f) {
    try {
      f();
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      errors_.push_back(msg.rfind(name_ + ".", 0) == 0 ? msg : name_ + "." + msg);
    }
  }

 private:
  std::string name_;
  json obj_ = json::object();
  std::vector<std::string>& errors_;
};

std::filesystem::path or_default(const std::string& value, const std::filesystem::path& fallback) {
  return value.empty() ? fallback : std::filesystem::path(value);
}

}  // namespace

std::filesystem::path RunPaths::train_manifest_path() const {
  return or_default(train_manifest, std::filesystem::path(data_dir) / "train.jsonl");
}
std::filesystem::path RunPaths::dev_manifest_path() const {
  return or_default(dev_manifest, std::filesystem::path(data_dir) / "dev.jsonl");
}
std::filesystem::path RunPaths::eval_manifest_path() const {
  return or_default(eval_manifest, dev_manifest_path());
}
std::filesystem::path RunPaths::checkpoint_path() const {
  return or_default(checkpoint, std::filesystem::path(output_dir) / "checkpoint");
}

RunConfig parse_run_config(const json& doc) {
  if (!doc.is_object()) throw ValidationError("config: expected a JSON object at top level");
  std::vector<std::string> errors;
  static const std::set<std::string> kTop = {"seed", "data", "model", "train", "paths", "fusion", "gradcheck"};
  for (const auto& [key, _] : doc.items()) {
    if (!kTop.count(key)) errors.push_back(key + ": unknown key");
  }

  RunConfig cfg;
  if (doc.contains("seed")) {
    if (doc["seed"].is_number_unsigned()) {
      cfg.seed = doc["seed"].get<std::uint64_t>();
    } else {
      errors.push_back("seed: expected a non-negative integer, got " + doc["seed"].dump());
    }
  }

  // model: optional preset, then explicit keys on top.
  if (doc.contains("model")) {
    const auto& m = doc["model"];
    if (!m.is_object()) {
      errors.push_back("model: expected an object");
    } else {
      try {
        json merged = json::object();
        if (m.contains("preset")) {
          if (!m["preset"].is_number_integer()) throw ValidationError("model.preset: expected an integer 1..5");
          try {
            merged = preset_architecture(m["preset"].get<int>()).to_json();
          } catch (const ValidationError& e) {
            throw ValidationError(std::string("model.preset: ") + e.what());
          }
        }
        for (const auto& [key, value] : m.items()) {
          if (key != "preset") merged[key] = value;
        }
        cfg.model = Architecture::from_json(merged);
      } catch (const ValidationError& e) {
        errors.push_back(e.what());
      }
    }
  }

  Section data(doc, "data",
               {"class_counts", "dev_class_counts", "frames_min", "frames_max", "separation", "noise", "gender_bias"},
               errors);
  cfg.data.class_counts = std::vector<std::size_t>(kNumClasses, 50);
  cfg.data.dev_class_counts = std::vector<std::size_t>(kNumClasses, 20);
  data.counts("class_counts", cfg.data.class_counts);
  data.counts("dev_class_counts", cfg.data.dev_class_counts);
  data.count("frames_min", cfg.data.frames_min);
  data.count("frames_max", cfg.data.frames_max);
  data.number("separation", cfg.data.separation);
  data.number("noise", cfg.data.noise);
  data.number("gender_bias", cfg.data.gender_bias);
  cfg.data.num_layers = cfg.model.num_layers;
  cfg.data.hidden = cfg.model.hidden;
  cfg.data.seed = cfg.seed;
  data.check([&] { cfg.data.validate(); });

  Section train(doc, "train", {"lr", "weight_decay", "epochs", "batch_size", "crop_frames", "eval_every_epoch"},
                errors);
  train.number("lr", cfg.train.lr);
  train.number("weight_decay", cfg.train.weight_decay);
  train.count("epochs", cfg.train.epochs);
  train.count("batch_size", cfg.train.batch_size);
  train.count("crop_frames", cfg.train.crop_frames);
  train.boolean("eval_every_epoch", cfg.train.eval_every_epoch);
  cfg.train.seed = cfg.seed;
  train.check([&] { cfg.train.validate(); });

  Section paths(doc, "paths",
                {"data_dir", "train_manifest", "dev_manifest", "eval_manifest", "output_dir", "checkpoint",
                 "predictions"},
                errors);
  paths.string("data_dir", cfg.paths.data_dir);
  paths.string("train_manifest", cfg.paths.train_manifest);
  paths.string("dev_manifest", cfg.paths.dev_manifest);
  paths.string("eval_manifest", cfg.paths.eval_manifest);
  paths.string("output_dir", cfg.paths.output_dir);
  paths.string("checkpoint", cfg.paths.checkpoint);
  paths.read("predictions", [&](const json& v) {
    if (!v.is_array()) throw ValidationError("expected an array of paths");
    std::vector<std::string> out;
    for (const auto& p : v) {
      if (!p.is_string()) throw ValidationError("expected strings, got " + p.dump());
      out.push_back(p.get<std::string>());
    }
    cfg.paths.predictions = std::move(out);
  });
  paths.check([&] {
    if (cfg.paths.data_dir.empty()) throw ValidationError("paths.data_dir must not be empty");
    if (cfg.paths.output_dir.empty()) throw ValidationError("paths.output_dir must not be empty");
  });

  Section fusion(doc, "fusion", {"mode", "rho_begin", "rho_end", "max_evals"}, errors);
  fusion.read("mode", [&](const json& v) { cfg.fusion.mode = parse_fusion_mode(v.get<std::string>()); });
  fusion.number("rho_begin", cfg.fusion.rho_begin);
  fusion.number("rho_end", cfg.fusion.rho_end);
  fusion.count("max_evals", cfg.fusion.max_evals);
  fusion.check([&] {
    if (!(cfg.fusion.rho_end > 0.0 && cfg.fusion.rho_begin > cfg.fusion.rho_end)) {
      throw ValidationError("fusion.rho_begin > fusion.rho_end > 0 required");
    }
    if (cfg.fusion.max_evals < 2) throw ValidationError("fusion.max_evals must be >= 2");
  });

  Section gc(doc, "gradcheck", {"batch", "frames", "eps", "max_coordinates", "tolerance"}, errors);
  gc.count("batch", cfg.gradcheck.batch);
  gc.count("frames", cfg.gradcheck.frames);
  gc.number("eps", cfg.gradcheck.eps);
  gc.count("max_coordinates", cfg.gradcheck.max_coordinates);
  gc.number("tolerance", cfg.gradcheck.tolerance);
  cfg.gradcheck.seed = cfg.seed;
  gc.check([&] {
    if (cfg.gradcheck.batch == 0 || cfg.gradcheck.frames == 0 || cfg.gradcheck.max_coordinates == 0) {
      throw ValidationError("gradcheck.batch, frames and max_coordinates must be > 0");
    }
    if (!(cfg.gradcheck.eps > 0.0) || !(cfg.gradcheck.tolerance > 0.0)) {
      throw ValidationError("gradcheck.eps and tolerance must be > 0");
    }
  });

  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ValidationError(msg);
  }
  return cfg;
}

ordered_json RunConfig::describe() const {
  ordered_json j;
  j["seed"] = seed;
  auto& d = j["data"];
  d["class_counts"] = data.class_counts;
  d["dev_class_counts"] = data.dev_class_counts;
  d["frames_min"] = data.frames_min;
  d["frames_max"] = data.frames_max;
  d["separation"] = data.separation;
  d["noise"] = data.noise;
  d["gender_bias"] = data.gender_bias;
  j["model"] = model.to_json();
  auto& t = j["train"];
  t["lr"] = train.lr;
  t["weight_decay"] = train.weight_decay;
  t["epochs"] = train.epochs;
  t["batch_size"] = train.batch_size;
  t["crop_frames"] = train.crop_frames;
  t["eval_every_epoch"] = train.eval_every_epoch;
  auto& p = j["paths"];
  p["data_dir"] = paths.data_dir;
  p["train_manifest"] = paths.train_manifest;
  p["dev_manifest"] = paths.dev_manifest;
  p["eval_manifest"] = paths.eval_manifest;
  p["output_dir"] = paths.output_dir;
  p["checkpoint"] = paths.checkpoint;
  p["predictions"] = paths.predictions;
  auto& f = j["fusion"];
  f["mode"] = to_string(fusion.mode);
  f["rho_begin"] = fusion.rho_begin;
  f["rho_end"] = fusion.rho_end;
  f["max_evals"] = fusion.max_evals;
  auto& g = j["gradcheck"];
  g["batch"] = gradcheck.batch;
  g["frames"] = gradcheck.frames;
  g["eps"] = gradcheck.eps;
  g["max_coordinates"] = gradcheck.max_coordinates;
  g["tolerance"] = gradcheck.tolerance;
  return j;
}

bool RunConfig::operator==(const RunConfig& o) const { return describe() == o.describe(); }

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("override '" + assignment + "' must look like section.key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ValidationError("override '" + assignment + "' has an empty key segment");
    if (!node->is_object()) throw ValidationError("override '" + path + "': parent is not an object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    if (!node->contains(key)) (*node)[key] = json::object();
    node = &(*node)[key];
    start = dot + 1;
  }
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path.string());
    doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ValidationError(path.string() + ": not valid JSON");
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_run_config(doc);
}

ordered_json preset_config(int model) {
  ordered_json j;
  j["seed"] = 0;
  j["model"] = preset_architecture(model).to_json();
  j["data"] = {{"class_counts", std::vector<std::size_t>(kNumClasses, 50)},
               {"dev_class_counts", std::vector<std::size_t>(kNumClasses, 20)},
               {"separation", 5.0},
               {"noise", 1.0}};
  j["train"] = {{"lr", 1e-3}, {"epochs", 20}, {"batch_size", 32}, {"crop_frames", 50}};
  j["paths"] = {{"data_dir", "data"}, {"output_dir", "out/model" + std::to_string(model)}};
  return j;
}

}  // namespace emohead
