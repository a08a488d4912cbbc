#include "emohead/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "emohead/rng.hpp"
#include "json.hpp"

namespace emohead {

namespace {

Example<float> to_example(const LoadedUtterance& u, Tensor features) {
  return {std::move(features), u.text, u.meta.gender_id, u.meta.label_id};
}

std::vector<double> weights_for(const std::vector<LoadedUtterance>& data, ClassWeightMode mode) {
  std::vector<std::size_t> counts(kNumClasses, 0);
  for (const auto& u : data) ++counts[static_cast<std::size_t>(u.meta.label_id)];
  if (mode == ClassWeightMode::kInverseFrequency) {
    // Absent classes never contribute a sample; give them a neutral count so
    // the inverse stays finite.
    for (auto& c : counts) c = std::max<std::size_t>(c, 1);
  }
  return class_weights(counts, mode);
}

int argmax(const std::array<double, kNumClasses>& p) {
  int best = 0;
  for (std::size_t c = 1; c < kNumClasses; ++c) {
    if (p[c] > p[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ValidationError("train.lr must be > 0");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw ValidationError("train.weight_decay must be >= 0");
  if (epochs == 0) throw ValidationError("train.epochs must be > 0");
  if (batch_size == 0) throw ValidationError("train.batch_size must be > 0");
  if (crop_frames == 0) throw ValidationError("train.crop_frames must be > 0");
}

Tensor random_crop(const Tensor& features, std::size_t cap, Rng& rng) {
  if (features.rank() != 3) throw DimensionError("random_crop expects [l,m,h], got " + shape_str(features.shape()));
  if (cap == 0) throw DomainError("random_crop: cap must be >= 1");
  const std::size_t l = features.dim(0), m = features.dim(1), h = features.dim(2);
  if (m <= cap) return features;
  const std::size_t offset = std::uniform_int_distribution<std::size_t>(0, m - cap)(rng);
  std::vector<float> out(l * cap * h);
  const auto src = features.data();
  for (std::size_t j = 0; j < l; ++j) {
    const auto begin = src.begin() + static_cast<std::ptrdiff_t>((j * m + offset) * h);
    std::copy(begin, begin + static_cast<std::ptrdiff_t>(cap * h), out.begin() + static_cast<std::ptrdiff_t>(j * cap * h));
  }
  return Tensor({l, cap, h}, std::move(out));
}

TrainResult train(const Architecture& arch, const std::vector<LoadedUtterance>& train_set,
                  const std::vector<LoadedUtterance>& dev_set, const TrainConfig& config) {
  Rng init = named_stream(config.seed, "init");
  return train(arch, init_parameters(arch, init), train_set, dev_set, config);
}

TrainResult train(const Architecture& arch, const ParameterSet<float>& initial,
                  const std::vector<LoadedUtterance>& train_set,
                  const std::vector<LoadedUtterance>& dev_set, const TrainConfig& config) {
  arch.validate();
  config.validate();
  if (train_set.empty()) throw ValidationError("training set is empty");

  TrainResult result;
  ParameterSet<float> params = initial.clone();
  result.best = params.clone();
  AdamW optimizer({config.lr, config.weight_decay});
  const auto weights = weights_for(train_set, arch.class_weights);

  Rng shuffle_rng = named_stream(config.seed, "shuffle");
  Rng crop_rng = named_stream(config.seed, "crop");
  Rng dropout_rng = named_stream(config.seed, "dropout");

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    try {
      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const std::size_t stop = std::min(order.size(), start + config.batch_size);
        std::vector<Example<float>> batch;
        batch.reserve(stop - start);
        for (std::size_t i = start; i < stop; ++i) {
          const auto& u = train_set[order[i]];
          batch.push_back(to_example(u, random_crop(u.features, config.crop_frames, crop_rng)));
        }
        params.zero_grad();
        auto loss = batch_loss(arch, params, batch, weights, true, &dropout_rng);
        if (!std::isfinite(loss.item())) throw NumericError("non-finite loss");
        loss.backward();
        optimizer.step(params);
        loss_sum += loss.item();
        ++batches;
      }
    } catch (const NumericError& e) {
      result.diverged = true;
      result.diagnostic = "epoch " + std::to_string(epoch) + ": " + e.what();
      return result;
    }
    EpochLog entry{epoch, loss_sum / static_cast<double>(batches), std::nullopt};
    if (config.eval_every_epoch && !dev_set.empty()) {
      entry.dev_f1_macro = evaluate(arch, params, dev_set).metrics.macro;
      if (!result.best_dev_f1 || *entry.dev_f1_macro > *result.best_dev_f1) {
        result.best_dev_f1 = entry.dev_f1_macro;
        result.best_epoch = epoch;
        result.best = params.clone();
      }
    } else {
      result.best_epoch = epoch;
      result.best = params.clone();
    }
    result.log.push_back(entry);
  }
  return result;
}

Evaluation evaluate(const Architecture& arch, const ParameterSet<float>& params,
                    const std::vector<LoadedUtterance>& data) {
  Evaluation ev;
  for (const auto& u : data) {
    if (u.features.rank() != 3 || u.features.dim(0) != arch.num_layers || u.features.dim(2) != arch.hidden) {
      throw DimensionError(u.meta.id + ": features " + shape_str(u.features.shape()) +
                           " do not match the model (l=" + std::to_string(arch.num_layers) +
                           ", h=" + std::to_string(arch.hidden) + ")");
    }
    const auto logits = utterance_logits(arch, params, u.features, u.meta.gender_id, u.text);
    const auto probs = softmax(logits.cast<double>());
    std::array<double, kNumClasses> p{};
    for (std::size_t c = 0; c < kNumClasses; ++c) p[c] = probs[c];
    ev.ids.push_back(u.meta.id);
    ev.labels.push_back(u.meta.label_id);
    ev.predictions.push_back(argmax(p));
    ev.probabilities.push_back(p);
  }
  ev.metrics = f1_scores(ev.predictions, ev.labels, kNumClasses);
  return ev;
}

std::string training_log_jsonl(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  for (const auto& e : log) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["dev_f1_macro"] = e.dev_f1_macro ? nlohmann::ordered_json(*e.dev_f1_macro) : nlohmann::ordered_json(nullptr);
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace emohead
