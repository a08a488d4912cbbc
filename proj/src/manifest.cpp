#include "emohead/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "emohead/tensor_file.hpp"

namespace emohead {

namespace {

using nlohmann::json;

const std::set<std::string> kFields = {"id", "feature_path", "gender_id", "label_id",
                                       "text_embedding_path"};

// Returns an empty string when the record is valid.
std::string check_record(const json& j, Utterance& out) {
  if (!j.is_object()) return "not a JSON object";
  for (const auto& [key, _] : j.items()) {
    if (!kFields.count(key)) return "unknown field '" + key + "'";
  }
  for (const auto& key : kFields) {
    if (!j.contains(key)) return "missing field '" + key + "'";
  }
  if (!j["id"].is_string() || !j["feature_path"].is_string() ||
      !j["text_embedding_path"].is_string()) {
    return "id, feature_path and text_embedding_path must be strings";
  }
  if (!j["gender_id"].is_number_integer()) return "gender_id must be an integer";
  if (!j["label_id"].is_number_integer()) return "label_id must be an integer";
  const auto gender = j["gender_id"].get<long long>();
  const auto label = j["label_id"].get<long long>();
  if (gender != 0 && gender != 1) return "gender_id " + std::to_string(gender) + " not in {0,1}";
  if (label < 0 || label >= static_cast<long long>(kNumClasses)) {
    return "label_id " + std::to_string(label) + " not in [0,7]";
  }
  out.id = j["id"].get<std::string>();
  out.feature_path = j["feature_path"].get<std::string>();
  out.text_embedding_path = j["text_embedding_path"].get<std::string>();
  out.gender_id = static_cast<int>(gender);
  out.label_id = static_cast<int>(label);
  return {};
}

}  // namespace

std::filesystem::path Manifest::resolve(const std::string& p) const {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  Manifest manifest;
  manifest.base_dir = path.parent_path();
  std::vector<std::string> problems;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Utterance u;
    std::string problem;
    try {
      problem = check_record(json::parse(line), u);
    } catch (const json::parse_error& e) {
      problem = std::string("invalid JSON: ") + e.what();
    }
    if (!problem.empty()) {
      problems.push_back("line " + std::to_string(line_no) + ": " + problem);
      continue;
    }
    ++manifest.histogram[static_cast<std::size_t>(u.label_id)];
    manifest.records.push_back(std::move(u));
  }
  if (!problems.empty()) {
    std::ostringstream msg;
    msg << path.string() << ": " << problems.size() << " invalid record(s)";
    for (const auto& p : problems) msg << "\n  " << p;
    throw ValidationError(msg.str());
  }
  return manifest;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& u : manifest.records) {
    nlohmann::ordered_json j;
    j["id"] = u.id;
    j["feature_path"] = u.feature_path;
    j["gender_id"] = u.gender_id;
    j["label_id"] = u.label_id;
    j["text_embedding_path"] = u.text_embedding_path;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<LoadedUtterance> load_dataset(const Manifest& manifest, std::size_t expected_layers,
                                          std::size_t expected_hidden) {
  std::vector<LoadedUtterance> out;
  out.reserve(manifest.records.size());
  for (const auto& u : manifest.records) {
    const auto fpath = manifest.resolve(u.feature_path);
    const auto tpath = manifest.resolve(u.text_embedding_path);
    if (!std::filesystem::exists(fpath)) throw ValidationError(u.id + ": missing feature file " + fpath.string());
    if (!std::filesystem::exists(tpath)) throw ValidationError(u.id + ": missing text file " + tpath.string());
    LoadedUtterance lu{u, read_tensor(fpath), read_tensor(tpath)};
    if (lu.features.rank() != 3) {
      throw ValidationError(u.id + ": features must be rank 3 [l,m,h], got " + shape_str(lu.features.shape()));
    }
    if ((expected_layers && lu.features.dim(0) != expected_layers) ||
        (expected_hidden && lu.features.dim(2) != expected_hidden)) {
      throw ValidationError(u.id + ": features " + shape_str(lu.features.shape()) + " do not match l=" +
                            std::to_string(expected_layers) + ", h=" + std::to_string(expected_hidden));
    }
    if (lu.text.rank() != 1 || lu.text.numel() != kTextDim) {
      throw ValidationError(u.id + ": text embedding must be [384], got " + shape_str(lu.text.shape()));
    }
    out.push_back(std::move(lu));
  }
  return out;
}

}  // namespace emohead
