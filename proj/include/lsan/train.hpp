#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "lsan/layers.hpp"
#include "lsan/model.hpp"
#include "lsan/random.hpp"
#include "lsan/seqdata.hpp"

namespace lsan {

/// −(1/K) Σ_k [y_k ln p_k + (1 − y_k) ln(1 − p_k)] with p clamped to
/// [1e-12, 1 − 1e-12].
double bce_loss(std::span<const double> pred, std::span<const double> target);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moment buffers are bound to the parameter
/// list given at construction; `step` reads each parameter's gradient.
class Adam {
 public:
  Adam(NamedParams params, AdamConfig config = {});

  /// Throws NumericError naming the parameter if a gradient is non-finite;
  /// parameters are left untouched in that case.
  void step();

  std::uint64_t steps() const noexcept { return steps_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  NamedParams params_;
  AdamConfig config_;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  std::uint64_t steps_ = 0;
};

struct TrainConfig {
  ModelConfig model;
  AdamConfig adam;
  std::size_t epochs = 60;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  std::size_t segment_size = 100;
  std::size_t ngram = 3;
  /// Share of parent sequences held out when no validation set is given.
  double validation_fraction = 0.1;
  /// Decision threshold for the per-epoch validation F1.
  double threshold = 0.5;
  /// When false the `seconds` column is written as 0 so curves are
  /// byte-reproducible.
  bool record_timing = false;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;
  /// Mean BCE over the training split with the end-of-epoch parameters and
  /// dropout off, so it is directly comparable with val_loss.
  double train_loss = 0.0;
  /// Mean of the mini-batch losses seen during the epoch (dropout on).
  double batch_loss = 0.0;
  double val_loss = 0.0;
  double val_f1 = 0.0;
  double seconds = 0.0;
};

struct LossCurve {
  std::vector<EpochStats> epochs;

  std::size_t size() const noexcept { return epochs.size(); }
  /// `epoch,train_loss,val_loss,seconds`
  void write_csv(std::ostream& out) const;
};

struct TrainResult {
  SegmentModel model;
  LossCurve curve;
};

/// Splits a dataset by parent sequence: roughly `fraction` of the parents
/// (at least one, and never all when there are two or more) go to the
/// second half of the pair.
std::pair<SegmentDataset, SegmentDataset> split_by_parent(const SegmentDataset& data, double fraction, Rng& rng);

/// Mini-batch training with shuffling, dropout and Adam. Validation uses
/// `validation` when given, otherwise a parent-level split of `data`.
/// Deterministic for a fixed config and rng state.
TrainResult train_segment_model(const SegmentDataset& data, const TrainConfig& config, Rng& rng,
                                const SegmentDataset* validation = nullptr);

/// Mean per-segment BCE with dropout disabled.
double evaluate_loss(SegmentModel& model, const SegmentDataset& data);

struct Evaluation {
  double loss = 0.0;
  double f1 = 0.0;
};

/// Mean BCE plus sample-averaged F1 of thresholded predictions.
Evaluation evaluate(SegmentModel& model, const SegmentDataset& data, double threshold);

}  // namespace lsan
