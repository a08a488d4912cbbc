#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "emohead/tensor.hpp"

namespace emohead {

inline constexpr std::size_t kNumClasses = 8;
inline constexpr std::size_t kTextDim = 384;
inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "Neutral", "Happy", "Angry", "Contempt", "Sad", "Surprise", "Disgust", "Fear"};

using ClassHistogram = std::array<std::size_t, kNumClasses>;

struct Utterance {
  std::string id;
  std::string feature_path;         // as written in the manifest
  int gender_id = 0;                // 0 or 1
  int label_id = 0;                 // index into kClassNames
  std::string text_embedding_path;  // as written in the manifest
};

struct Manifest {
  std::vector<Utterance> records;
  ClassHistogram histogram{};
  // Relative paths in records resolve against this directory.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& p) const;
};

// Parses JSON lines with exactly the fields id, feature_path, gender_id,
// label_id, text_embedding_path. All offending lines are collected into a
// single ValidationError. Blank lines are skipped.
Manifest load_manifest(const std::filesystem::path& path);

void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

// Utterance with its tensors read and shape-checked.
struct LoadedUtterance {
  Utterance meta;
  Tensor features;  // [l, m, h]
  Tensor text;      // [384]
};

// Reads every referenced tensor. Throws ValidationError on missing files or
// wrong ranks/shapes; when expected_layers/expected_hidden are nonzero the
// feature tensors must match them.
std::vector<LoadedUtterance> load_dataset(const Manifest& manifest,
                                          std::size_t expected_layers = 0,
                                          std::size_t expected_hidden = 0);

}  // namespace emohead
