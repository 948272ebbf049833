#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sce/model.hpp"

namespace sce {

struct TrainConfig {
  double learning_rate = 1e-3;  // toy default; paper-scale rates go in config files
  double weight_decay = 1e-4;   // decoupled
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t epochs = 10;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  double synonym_prob = 1.0;

  void validate() const;
  // Flat key=value text; keys match the field names.
  static TrainConfig from_file(const std::string& path);
};

// One UDTC sample: text, its candidate label set, the gold index, and the
// optional synonym presets keyed by label.
struct ClassificationInstance {
  std::string text;
  std::vector<std::string> labels;
  std::size_t gold = 0;
  std::map<std::string, std::vector<std::string>> synonyms;

  void validate() const;
};

// With probability synonym_prob, replaces the gold label in place with a
// uniformly sampled synonym from its preset. Synonyms colliding with another
// candidate are excluded from the draw; if all collide the instance is
// returned unchanged and *skipped is bumped.
ClassificationInstance augment_synonym(const ClassificationInstance& inst,
                                       double synonym_prob, Rng& rng,
                                       std::size_t* skipped = nullptr);

struct AdamState {
  SceParams m, v;
  std::size_t step = 0;

  static AdamState init(const SceParams& params);
};

struct EpochStats {
  std::size_t epoch;
  double loss;
  double accuracy;
};

// One optimizer step on a batch: per-instance gradient accumulation averaged
// over the batch, then Adam with decoupled weight decay on everything
// trainable except the label table. Returns the mean loss; `correct_out`
// (when non-null) is incremented per instance whose argmax hits the gold.
double train_step(const std::vector<ClassificationInstance>& batch, SceParams& params,
                  AdamState& opt, const TrainConfig& cfg,
                  const EmbeddingProvider& provider, std::size_t* correct_out = nullptr);

// Seeded epoch loop (shuffle + synonym augmentation + batched steps).
// Fully deterministic given (dataset, config, seed).
std::vector<EpochStats> train(const std::vector<ClassificationInstance>& dataset,
                              SceParams& params, const TrainConfig& cfg,
                              const EmbeddingProvider& provider);

struct GradCheckEntry {
  std::string name;
  double max_rel_err;
  double max_abs_analytic;
  double max_abs_numeric;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
  double h = 0.0;
  bool degraded = false;  // agreement worse than the trust threshold for h
};

// Compares analytic gradients of the instance loss against central finite
// differences for every trainable array. Meant for tiny configs.
GradCheckReport grad_check_model(const ClassificationInstance& inst, SceParams& params,
                                 const EmbeddingProvider& provider, double h = 1e-5);

}  // namespace sce
