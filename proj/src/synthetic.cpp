#include "emohead/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "emohead/rng.hpp"
#include "emohead/tensor_file.hpp"

namespace emohead {

namespace {

std::vector<float> unit_direction(std::size_t n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  double norm = 0.0;
  while (norm == 0.0) {
    for (auto& x : v) x = normal(rng);
    norm = 0.0;
    for (const double x : v) norm += x * x;
    norm = std::sqrt(norm);
  }
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

void check_counts(const std::vector<std::size_t>& counts, const char* field, bool allow_empty) {
  if (counts.empty()) {
    if (allow_empty) return;
    throw ValidationError(std::string(field) + ": at least one class count is required");
  }
  if (counts.size() > kNumClasses) {
    throw ValidationError(std::string(field) + ": at most 8 classes, got " + std::to_string(counts.size()));
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) throw ValidationError(std::string(field) + "[" + std::to_string(c) + "] must be > 0");
  }
}

struct Directions {
  std::vector<std::vector<float>> audio;
  std::vector<std::vector<float>> text;
};

Manifest generate_split(const SyntheticSpec& spec, const Directions& dirs,
                        const std::vector<std::size_t>& counts, const std::string& split,
                        const std::filesystem::path& out_dir) {
  Rng rng = named_stream(spec.seed, "data/" + split);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> frames(spec.frames_min, spec.frames_max);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  std::vector<int> labels;
  for (std::size_t c = 0; c < counts.size(); ++c) labels.insert(labels.end(), counts[c], static_cast<int>(c));
  std::shuffle(labels.begin(), labels.end(), rng);

  Manifest manifest;
  manifest.base_dir = out_dir;
  const std::size_t l = spec.num_layers, h = spec.hidden;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const int c = labels[n];
    char id[64];
    std::snprintf(id, sizeof(id), "%s_%05zu", split.c_str(), n);
    const std::size_t m = frames(rng);
    const double bias = (c % 2 == 0) ? spec.gender_bias : -spec.gender_bias;
    const int gender = coin(rng) < 0.5 + bias ? 1 : 0;

    std::vector<float> z(l * m * h);
    const auto& u = dirs.audio[static_cast<std::size_t>(c)];
    for (std::size_t j = 0; j < l; ++j) {
      const double layer_scale = spec.separation * static_cast<double>(j + 1) / static_cast<double>(l);
      for (std::size_t t = 0; t < m; ++t) {
        for (std::size_t k = 0; k < h; ++k) {
          z[(j * m + t) * h + k] = static_cast<float>(layer_scale * u[k] + spec.noise * normal(rng));
        }
      }
    }
    std::vector<float> text(kTextDim);
    const auto& v = dirs.text[static_cast<std::size_t>(c)];
    for (std::size_t k = 0; k < kTextDim; ++k) {
      text[k] = static_cast<float>(spec.separation * v[k] + spec.noise * normal(rng));
    }

    Utterance utt;
    utt.id = id;
    utt.feature_path = "features/" + utt.id + ".sert";
    utt.text_embedding_path = "text/" + utt.id + ".sert";
    utt.gender_id = gender;
    utt.label_id = c;
    write_tensor(Tensor({l, m, h}, std::move(z)), out_dir / utt.feature_path);
    write_tensor(Tensor({kTextDim}, std::move(text)), out_dir / utt.text_embedding_path);
    ++manifest.histogram[static_cast<std::size_t>(c)];
    manifest.records.push_back(std::move(utt));
  }
  save_manifest(manifest, out_dir / (split + ".jsonl"));
  return manifest;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (num_layers == 0) throw ValidationError("num_layers must be > 0");
  if (hidden == 0) throw ValidationError("hidden must be > 0");
  if (frames_min == 0 || frames_max < frames_min) {
    throw ValidationError("frames range must satisfy 0 < frames_min <= frames_max");
  }
  check_counts(class_counts, "class_counts", false);
  check_counts(dev_class_counts, "dev_class_counts", true);
  if (!(separation >= 0.0) || !std::isfinite(separation)) throw ValidationError("separation must be >= 0");
  if (!(noise > 0.0) || !std::isfinite(noise)) throw ValidationError("noise must be > 0");
  if (!(gender_bias >= 0.0 && gender_bias <= 0.5)) throw ValidationError("gender_bias must be in [0, 0.5]");
}

SyntheticDataset generate_synthetic_dataset(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "features", ec);
  std::filesystem::create_directories(out_dir / "text", ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  Rng rng = named_stream(spec.seed, "data/directions");
  Directions dirs;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    dirs.audio.push_back(unit_direction(spec.hidden, rng));
    dirs.text.push_back(unit_direction(kTextDim, rng));
  }
  SyntheticDataset out;
  out.train = generate_split(spec, dirs, spec.class_counts, "train", out_dir);
  if (!spec.dev_class_counts.empty()) {
    out.dev = generate_split(spec, dirs, spec.dev_class_counts, "dev", out_dir);
  }
  return out;
}

}  // namespace emohead
