#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "emohead/adamw.hpp"
#include "emohead/manifest.hpp"
#include "emohead/metrics.hpp"
#include "emohead/model.hpp"

namespace emohead {

// 50 frames/s, so the 5 s training crop is 250 frames; 50 is the desk-scale
// default.
inline constexpr std::size_t kFramesPerSecond = 50;

struct TrainConfig {
  double lr = 1e-5;
  double weight_decay = 0.01;
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  std::size_t crop_frames = 50;
  std::uint64_t seed = 0;
  bool eval_every_epoch = true;

  void validate() const;
};

// Same random window of min(m, cap) frames from every layer of [l, m, h].
// The offset is uniform in [0, m - cap] when m > cap.
Tensor random_crop(const Tensor& features, std::size_t cap, Rng& rng);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> dev_f1_macro;
};

struct TrainResult {
  std::vector<EpochLog> log;
  ParameterSet<float> best;  // best dev F1-macro, or the last epoch without dev data
  std::size_t best_epoch = 0;
  std::optional<double> best_dev_f1;
  bool diverged = false;
  std::string diagnostic;
};

// Seeded shuffle, crop, forward, weighted smoothed cross-entropy, backward
// and AdamW per batch; dev F1-macro after every epoch. Class weights come
// from the training label histogram. On a non-finite loss or gradient the
// run stops with diverged = true and `best` holding the last good
// checkpoint. Fully deterministic for a given config.
TrainResult train(const Architecture& arch, const ParameterSet<float>& initial,
                  const std::vector<LoadedUtterance>& train_set,
                  const std::vector<LoadedUtterance>& dev_set, const TrainConfig& config);

// Convenience: draws initial parameters from the "init" stream of the seed.
TrainResult train(const Architecture& arch, const std::vector<LoadedUtterance>& train_set,
                  const std::vector<LoadedUtterance>& dev_set, const TrainConfig& config);

struct Evaluation {
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<int> predictions;
  std::vector<std::array<double, kNumClasses>> probabilities;
  F1Report metrics;
};

// Dropout off, full uncropped sequences. Predictions are the argmax of the
// probabilities with ties going to the lowest class index.
Evaluation evaluate(const Architecture& arch, const ParameterSet<float>& params,
                    const std::vector<LoadedUtterance>& data);

std::string training_log_jsonl(const std::vector<EpochLog>& log);

}  // namespace emohead
