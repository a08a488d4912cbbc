#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "emohead/manifest.hpp"

namespace emohead {

// Class-conditional Gaussian stand-in for upstream SSL features.
//
// Each class c owns a random unit direction u_c in R^h and v_c in R^384.
// Frame t of layer j of an utterance of class c is
//   separation * (j+1)/l * u_c + noise * N(0, I)
// and its text embedding is separation * v_c + noise * N(0, I), so both
// modalities carry class signal that vanishes at separation = 0.
struct SyntheticSpec {
  std::size_t num_layers = 4;
  std::size_t hidden = 32;
  std::size_t frames_min = 20;
  std::size_t frames_max = 80;
  // Index = class id; length 1..8; every entry > 0.
  std::vector<std::size_t> class_counts;
  // Optional second split sharing the class directions.
  std::vector<std::size_t> dev_class_counts;
  double separation = 5.0;
  double noise = 1.0;
  // P(gender = 1 | c) = 0.5 + gender_bias for even c, 0.5 - gender_bias for odd c.
  double gender_bias = 0.0;
  std::uint64_t seed = 0;

  // Throws ValidationError naming the offending field.
  void validate() const;
};

struct SyntheticDataset {
  Manifest train;
  Manifest dev;  // empty when dev_class_counts is empty
};

// Writes <out_dir>/train.jsonl (and dev.jsonl), plus features/ and text/
// tensor files. Manifest paths are relative to out_dir. Output bytes are a
// pure function of the spec.
SyntheticDataset generate_synthetic_dataset(const SyntheticSpec& spec,
                                            const std::filesystem::path& out_dir);

}  // namespace emohead
