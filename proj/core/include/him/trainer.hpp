#ifndef HIM_TRAINER_HPP
#define HIM_TRAINER_HPP

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "him/checkpoint.hpp"
#include "him/evaluation.hpp"
#include "him/model.hpp"
#include "him/objectives.hpp"
#include "him/optimizer.hpp"
#include "him/sampling.hpp"

namespace him {

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  double lr_target = 1e-4;
  int warmup_steps = 100;
  double weight_decay = 1e-3;
  double clip_norm = 1.0;
  int stabilize_every = 100;
  uint64_t seed = 42;
  uint64_t split_seed = 1234;
  double hard_fraction = 0.5;
  double triplets_per_pair = 1.0;  // epoch triplet count as a multiple of train pairs
  double neg_ratio = 10.0;
  int vocab_max = 8192;
  Task task = Task::Mixed;
  SplitFractions fractions;
  ManifoldConfig manifold;
  LossConfig loss;
  EncoderConfig encoder;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);  // unknown keys rejected
};

struct EpochMetrics {
  int epoch;
  double train_loss;
  double val_f1;
  double c;
  double gamma;
  double wallclock_s;
  nlohmann::json to_json() const;
};

struct TrainResult {
  std::vector<EpochMetrics> metrics;
  bool diverged = false;
  int skipped_steps = 0;
};

class Trainer {
 public:
  Trainer(TrainConfig cfg, const Taxonomy& tax);

  /// Warm-start encoder weights (and vocab) from a pretraining
  /// checkpoint; manifold scalars start fresh.
  void init_from_pretrained(const std::string& checkpoint_path);

  /// Full state restore: parameters, optimizer moments, RNG, epoch.
  void resume_from(const std::string& checkpoint_path);

  /// Runs remaining epochs; appends one JSON line per epoch to
  /// metrics_path when given; writes the final checkpoint to
  /// checkpoint_path when given (also written on divergence abort with
  /// the last good state).
  TrainResult run(const std::optional<std::string>& metrics_path = std::nullopt,
                  const std::optional<std::string>& checkpoint_path = std::nullopt);

  void save(const std::string& path) const;

  HimModel& model() { return model_; }
  const HimModel& model() const { return model_; }
  const Splits& splits() const { return splits_; }
  const Closure& closure() const { return closure_; }
  const Taxonomy& taxonomy() const { return *tax_; }
  int completed_epochs() const { return epoch_; }

  /// Manifold points refreshed at every stabilization boundary (the
  /// persisted manifold-valued quantities of this architecture).
  const std::vector<Vec>& stabilized_anchor_cache() const { return anchor_cache_; }

  /// Minimum curvature value observed across all completed steps.
  double min_curvature_seen() const { return min_c_seen_; }

  EvalReport final_test_report();

 private:
  void build_state();
  double train_step(std::span<const Triplet> batch);
  double epoch_val_f1();
  void stabilize_now();
  CheckpointData snapshot() const;
  void restore(const CheckpointData& data, bool full_state);
  nlohmann::json to_json_encoder() const;
  nlohmann::json to_json_manifold() const;

  TrainConfig cfg_;
  const Taxonomy* tax_;
  Closure closure_;
  Splits splits_;
  HimModel model_;
  AdamW opt_;
  Rng run_rng_;
  int64_t step_ = 0;
  int epoch_ = 0;
  int skipped_ = 0;
  int consecutive_nan_ = 0;
  double min_c_seen_ = std::numeric_limits<double>::infinity();
  std::vector<std::pair<std::vector<int>, int>> token_cache_;  // ids, n_real per entity
  std::vector<LabeledPair> val_pairs_;
  std::vector<Vec> anchor_cache_;
  CheckpointData last_good_;
};

/// Contrastive pretraining over {text_a, text_b} pairs in Euclidean
/// unit-norm space; the resulting checkpoint seeds hierarchy training.
struct PretrainConfig {
  int epochs = 5;
  int batch_pairs = 16;
  double lr_target = 1e-4;
  int warmup_steps = 100;
  double weight_decay = 1e-3;
  double clip_norm = 1.0;
  uint64_t seed = 42;
  double temperature = 0.05;
  int vocab_max = 8192;
  EncoderConfig encoder;
};

struct PretrainResult {
  std::vector<double> epoch_losses;
};

PretrainResult pretrain(HimModel& model, std::span<const std::pair<std::string, std::string>> pairs,
                        const PretrainConfig& cfg,
                        const std::optional<std::string>& checkpoint_path = std::nullopt);

/// Assembles the full checkpoint payload for a model + optimizer state.
CheckpointData make_checkpoint(const HimModel& model, const AdamW* opt, const Rng* rng, int epoch,
                               const nlohmann::json& config);

/// Rebuilds a model from a checkpoint (vocab, config, parameters).
HimModel model_from_checkpoint(const CheckpointData& data);

}  // namespace him

#endif
