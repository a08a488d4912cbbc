#include "emohead/model.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "emohead/tensor_file.hpp"

namespace emohead {

namespace {

using nlohmann::json;

constexpr std::size_t kProjectionSizes[] = {16, 32, 64, 128, 256};

Tensor uniform(Shape shape, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<float> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<float>(dist(rng));
  return Tensor(std::move(shape), std::move(v), true);
}

void add_affine(ParameterSet<float>& p, const std::string& prefix, std::size_t in, std::size_t out,
                Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  p.add(prefix + ".weight", uniform({in, out}, bound, rng));
  p.add(prefix + ".bias", uniform({out}, bound, rng));
}

// Text conditioning modes pair with the gender mode of the same name.
GenderMode gender_partner(TextMode t) {
  switch (t) {
    case TextMode::kSumThird: return GenderMode::kSumThird;
    case TextMode::kMultiplication: return GenderMode::kMultiplication;
    case TextMode::kCln: return GenderMode::kCln;
    case TextMode::kNone: break;
  }
  return GenderMode::kNone;
}

template <typename F>
void read_field(const json& j, const char* key, F&& assign) {
  if (!j.contains(key)) return;
  try {
    assign(j.at(key));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model.") + key + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("model.") + key + ": " + e.what());
  }
}

std::size_t get_count(const json& v) {
  if (!v.is_number_unsigned()) throw ValidationError("expected a non-negative integer, got " + v.dump());
  return v.get<std::size_t>();
}

}  // namespace

Architecture preset_architecture(int model) {
  Architecture a;
  a.pooling = PoolingType::kStd;
  a.projection = 256;
  switch (model) {
    case 1:
      a.pooling = PoolingType::kAttention;
      break;
    case 2:
      a.projection = 32;
      break;
    case 3:
      a.gender = GenderMode::kMultiplication;
      break;
    case 4:
    case 5:
      a.gender = GenderMode::kSumThird;
      a.text = TextMode::kSumThird;
      a.label_smoothing = model == 5 ? 0.1 : 0.0;
      break;
    default:
      throw ValidationError("model preset must be 1..5, got " + std::to_string(model));
  }
  return a;
}

void Architecture::validate() const {
  if (num_layers == 0) throw ValidationError("model.num_layers must be > 0");
  if (hidden == 0) throw ValidationError("model.hidden must be > 0");
  bool ok = false;
  for (const auto d : kProjectionSizes) ok = ok || d == projection;
  if (!ok) {
    throw ValidationError("model.projection must be one of 16, 32, 64, 128, 256 (got " +
                          std::to_string(projection) + ")");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("model.dropout must be in [0,1)");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw ValidationError("model.label_smoothing must be in [0,1)");
  }
  if (text == TextMode::kNone && gender == GenderMode::kSumThird) {
    throw ValidationError("model.gender_conditioning sum_third requires text_conditioning sum_third");
  }
  if (text != TextMode::kNone && gender != gender_partner(text)) {
    throw ValidationError("model.text_conditioning " + std::string(to_string(text)) +
                          " requires gender_conditioning " + std::string(to_string(gender_partner(text))));
  }
}

nlohmann::ordered_json Architecture::to_json() const {
  nlohmann::ordered_json j;
  j["num_layers"] = num_layers;
  j["hidden"] = hidden;
  j["projection"] = projection;
  j["layer_weights"] = to_string(layer_weights);
  j["pooling"] = to_string(pooling);
  j["attention_mode"] = to_string(attention_mode);
  j["gender_conditioning"] = to_string(gender);
  j["text_conditioning"] = to_string(text);
  j["dropout"] = dropout;
  j["label_smoothing"] = label_smoothing;
  j["class_weights"] = to_string(class_weights);
  j["loss_reduction"] = to_string(reduction);
  return j;
}

Architecture Architecture::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("model: expected an object");
  static const std::set<std::string> kKeys = {
      "num_layers",          "hidden",  "projection",      "layer_weights", "pooling",
      "attention_mode",      "gender_conditioning", "text_conditioning", "dropout",
      "label_smoothing",     "class_weights", "loss_reduction"};
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.count(key)) throw ValidationError("model: unknown key '" + key + "'");
  }
  Architecture a;
  read_field(j, "num_layers", [&](const json& v) { a.num_layers = get_count(v); });
  read_field(j, "hidden", [&](const json& v) { a.hidden = get_count(v); });
  read_field(j, "projection", [&](const json& v) { a.projection = get_count(v); });
  read_field(j, "layer_weights", [&](const json& v) { a.layer_weights = parse_layer_weight_mode(v.get<std::string>()); });
  read_field(j, "pooling", [&](const json& v) { a.pooling = parse_pooling(v.get<std::string>()); });
  read_field(j, "attention_mode", [&](const json& v) { a.attention_mode = parse_attention_mode(v.get<std::string>()); });
  read_field(j, "gender_conditioning", [&](const json& v) { a.gender = parse_gender_mode(v.get<std::string>()); });
  read_field(j, "text_conditioning", [&](const json& v) { a.text = parse_text_mode(v.get<std::string>()); });
  read_field(j, "dropout", [&](const json& v) { a.dropout = v.get<double>(); });
  read_field(j, "label_smoothing", [&](const json& v) { a.label_smoothing = v.get<double>(); });
  read_field(j, "class_weights", [&](const json& v) { a.class_weights = parse_class_weight_mode(v.get<std::string>()); });
  read_field(j, "loss_reduction", [&](const json& v) { a.reduction = parse_loss_reduction(v.get<std::string>()); });
  a.validate();
  return a;
}

ParameterSet<float> init_parameters(const Architecture& arch, Rng& rng) {
  arch.validate();
  ParameterSet<float> p;
  const std::size_t l = arch.num_layers, h = arch.hidden, d = arch.projection, q = arch.pooled();
  const float lw = arch.layer_weights == LayerWeightMode::kSoftmax ? 0.0f : 1.0f / static_cast<float>(l);
  p.add("layer_weights", Tensor::full({l}, lw, true));
  add_affine(p, "projection", h, d, rng);
  if (arch.pooling == PoolingType::kAttention) {
    p.add("attention.probe", uniform({d}, 1.0 / std::sqrt(static_cast<double>(d)), rng));
  }
  if (arch.uses_gender()) p.add("gender.embedding", uniform({2, q}, 0.1, rng));
  if (arch.uses_text()) {
    add_affine(p, "text.linear", kTextDim, q, rng);
    p.add("text.norm.gain", Tensor::full({q}, 1.0f, true));
    p.add("text.norm.bias", Tensor::zeros({q}, true));
    if (arch.text == TextMode::kCln) add_affine(p, "text.reduce", 2 * q, q, rng);
  } else if (arch.gender == GenderMode::kStackLinear) {
    add_affine(p, "gender.stack", 2 * q, q, rng);
  }
  if (arch.gender == GenderMode::kCln) {
    add_affine(p, "cln.f", q, q, rng);
    add_affine(p, "cln.g", q, q, rng);
  }
  add_affine(p, "classifier", q, kNumClasses, rng);
  return p;
}

void save_checkpoint(const Architecture& arch, const ParameterSet<float>& params,
                     const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  nlohmann::ordered_json j;
  j["architecture"] = arch.to_json();
  auto& index = j["parameters"];
  index = nlohmann::ordered_json::array();
  for (const auto& [name, t] : params.entries()) {
    const std::string file = name + ".sert";
    write_tensor(t, dir / file);
    index.push_back({{"name", name}, {"file", file}});
  }
  std::ofstream out(dir / "model.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "model.json").string());
  out << j.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "model.json");
  if (!in) throw IoError("no checkpoint descriptor at " + (dir / "model.json").string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("checkpoint descriptor: " + std::string(e.what()));
  }
  if (!j.contains("architecture") || !j.contains("parameters")) {
    throw ValidationError("checkpoint descriptor lacks architecture or parameters");
  }
  Checkpoint ck{Architecture::from_json(j["architecture"]), {}};
  Rng probe_rng(0);
  const auto expected = init_parameters(ck.arch, probe_rng);
  for (const auto& entry : j["parameters"]) {
    const auto name = entry.at("name").get<std::string>();
    auto t = read_tensor(dir / entry.at("file").get<std::string>());
    const auto* want = expected.find(name);
    if (want == nullptr) throw ValidationError("checkpoint has unexpected parameter " + name);
    if (want->shape() != t.shape()) {
      throw ValidationError("checkpoint parameter " + name + " has shape " + shape_str(t.shape()) +
                            ", architecture needs " + shape_str(want->shape()));
    }
    t.set_requires_grad(true);
    ck.params.add(name, std::move(t));
  }
  if (ck.params.entries().size() != expected.entries().size()) {
    throw ValidationError("checkpoint is missing parameters");
  }
  return ck;
}

}  // namespace emohead
