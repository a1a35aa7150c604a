#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lsan/metrics.hpp"
#include "lsan/model.hpp"
#include "lsan/seqdata.hpp"
#include "lsan/train.hpp"

namespace lsan {

/// Global K-dimensional representation of one sequence: the mean of its
/// segment outputs, rescaled so the largest entry is 1.
struct SequenceRepresentation {
  std::string id;
  std::vector<double> values;
};

/// Sigmoid outputs of the segment model, one K-vector per segment.
std::vector<std::vector<double>> classify_segments(SegmentModel& model, std::span<const Segment> segments);

/// Mean of the vectors, divided by its maximum when that maximum is
/// positive; an all-zero mean passes through unchanged.
SequenceRepresentation aggregate(std::span<const std::vector<double>> segment_outputs, std::string id = {});

/// Segments, classifies and aggregates every sequence. Sequences too short
/// to yield a single n-mer get an all-zero representation and a warning.
std::vector<SequenceRepresentation> represent_sequences(SegmentModel& model, std::span<const LabeledSequence> sequences,
                                                        std::size_t segment_size, const Vocabulary& vocab);

/// One tanh hidden layer followed by a sigmoid output layer.
struct MlpParams {
  Tensor w_hidden;  // [Hm×in]
  Tensor b_hidden;  // [Hm]
  Tensor w_out;     // [K×Hm]
  Tensor b_out;     // [K]

  static MlpParams init(std::size_t inputs, std::size_t hidden, std::size_t outputs, Rng& rng);
  std::size_t inputs() const { return w_hidden.cols(); }
  std::size_t hidden() const { return w_hidden.rows(); }
  std::size_t outputs() const { return w_out.rows(); }
  NamedParams parameters();
};

Var mlp_forward(Tape& tape, Var x, MlpParams& params);
std::vector<double> mlp_outputs(MlpParams& params, std::span<const double> input);

struct MlpConfig {
  /// 0 means "same as the number of labels".
  std::size_t hidden = 0;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  AdamConfig adam{.learning_rate = 1e-2};
  std::uint64_t seed = 1;
};

struct MlpTrainResult {
  MlpParams params;
  /// Mean training loss per epoch.
  std::vector<double> losses;
};

/// `targets` are 0/1 vectors of length K, one per representation.
MlpTrainResult train_mlp(std::span<const SequenceRepresentation> representations,
                         std::span<const std::vector<double>> targets, const MlpConfig& config, Rng& rng);

/// Thresholded MLP outputs with the argmax fallback, never empty.
LabelSet predict(MlpParams& mlp, const SequenceRepresentation& representation, double threshold = 0.5);

struct PipelineConfig {
  TrainConfig segment;
  MlpConfig mlp;
  double threshold = 0.5;
  RecallMode recall = RecallMode::kStandard;
};

struct PipelineResult {
  Vocabulary vocab;
  std::vector<std::string> label_names;
  SegmentModel model;
  LossCurve curve;
  MlpParams mlp;
  std::vector<double> mlp_losses;
  std::vector<SequenceRepresentation> train_representations;
  std::vector<SequenceRepresentation> test_representations;
  std::vector<LabelSet> test_predictions;
  MetricsReport metrics;
};

/// Segments -> segment model -> representations of train and test
/// sequences -> MLP -> predictions -> metrics. The test corpus must share
/// the training corpus's label table. `validation`, when given, replaces
/// the parent-level hold-out used while training the segment model.
PipelineResult run_pipeline(const Corpus& train, const Corpus& test, const PipelineConfig& config,
                            const Corpus* validation = nullptr);

/// `sequence_id,v_0,...,v_{K-1}` with a header row.
void write_representations_csv(std::ostream& out, std::span<const SequenceRepresentation> reps);

}  // namespace lsan
