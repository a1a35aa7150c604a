#include "lsan/pipeline.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>

#include "lsan/error.hpp"
#include "lsan/log.hpp"

namespace lsan {

std::vector<std::vector<double>> classify_segments(SegmentModel& model, std::span<const Segment> segments) {
  if (segments.empty()) throw DataError("classify_segments: no segments");
  return model.predict(segments);
}

SequenceRepresentation aggregate(std::span<const std::vector<double>> segment_outputs, std::string id) {
  if (segment_outputs.empty()) throw DataError("aggregate: no segment outputs");
  const std::size_t k = segment_outputs[0].size();
  SequenceRepresentation rep{std::move(id), std::vector<double>(k, 0.0)};
  for (const auto& v : segment_outputs) {
    if (v.size() != k) throw DimensionError("aggregate: segment outputs differ in length");
    for (std::size_t j = 0; j < k; ++j) rep.values[j] += v[j];
  }
  for (double& x : rep.values) x /= static_cast<double>(segment_outputs.size());
  const double hi = *std::max_element(rep.values.begin(), rep.values.end());
  if (hi > 0.0) {
    for (double& x : rep.values) x /= hi;
  }
  return rep;
}

std::vector<SequenceRepresentation> represent_sequences(SegmentModel& model, std::span<const LabeledSequence> sequences,
                                                        std::size_t segment_size, const Vocabulary& vocab) {
  const std::size_t k = model.config().label_count;
  std::vector<SequenceRepresentation> out;
  out.reserve(sequences.size());
  for (const auto& seq : sequences) {
    LabeledSequence unlabeled{seq.id, seq.residues, {}};
    if (seq.residues.size() < vocab.ngram()) {
      log_warning("sequence '" + seq.id + "' is shorter than one n-mer; using an all-zero representation");
      out.push_back({seq.id, std::vector<double>(k, 0.0)});
      continue;
    }
    const auto segments = segment_sequence(unlabeled, segment_size, vocab, k);
    out.push_back(aggregate(classify_segments(model, segments), seq.id));
  }
  return out;
}

MlpParams MlpParams::init(std::size_t inputs, std::size_t hidden, std::size_t outputs, Rng& rng) {
  MlpParams p;
  p.w_hidden = glorot_uniform(hidden, inputs, rng);
  p.b_hidden = Tensor({hidden});
  p.w_out = glorot_uniform(outputs, hidden, rng);
  p.b_out = Tensor({outputs});
  return p;
}

NamedParams MlpParams::parameters() {
  return {{"mlp.w_hidden", &w_hidden}, {"mlp.b_hidden", &b_hidden}, {"mlp.w_out", &w_out}, {"mlp.b_out", &b_out}};
}

Var mlp_forward(Tape& tape, Var x, MlpParams& p) {
  if (tape.value(x).cols() != p.inputs()) {
    throw DimensionError("mlp_forward: input " + shape_string(tape.value(x).shape()) + " vs " +
                         std::to_string(p.inputs()) + " inputs");
  }
  const Var hidden =
      tape.tanh(tape.add(tape.matmul_nt(x, tape.parameter(p.w_hidden)), tape.parameter(p.b_hidden)));
  return tape.sigmoid(tape.add(tape.matmul_nt(hidden, tape.parameter(p.w_out)), tape.parameter(p.b_out)));
}

std::vector<double> mlp_outputs(MlpParams& params, std::span<const double> input) {
  Tape tape;
  const Var x = tape.constant(Tensor({1, input.size()}, std::vector<double>(input.begin(), input.end())));
  const auto out = tape.value(mlp_forward(tape, x, params)).data();
  return {out.begin(), out.end()};
}

MlpTrainResult train_mlp(std::span<const SequenceRepresentation> representations,
                         std::span<const std::vector<double>> targets, const MlpConfig& config, Rng& rng) {
  if (representations.empty()) throw DataError("train_mlp: no training representations");
  if (representations.size() != targets.size()) throw DimensionError("train_mlp: representation/target count mismatch");
  if (config.epochs == 0 || config.batch_size == 0) throw ConfigError("mlp_epochs", "epochs and batch size must be positive");
  const std::size_t inputs = representations[0].values.size();
  const std::size_t outputs = targets[0].size();
  for (std::size_t i = 0; i < representations.size(); ++i) {
    if (representations[i].values.size() != inputs || targets[i].size() != outputs) {
      throw DimensionError("train_mlp: inconsistent sample dimensions");
    }
  }
  MlpTrainResult result{MlpParams::init(inputs, config.hidden ? config.hidden : outputs, outputs, rng), {}};
  Adam adam(result.params.parameters(), config.adam);

  std::vector<std::size_t> order(representations.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(std::span<std::size_t>(order), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::size_t n = end - start;
      Tensor x({n, inputs});
      Tensor y({n, outputs});
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t i = order[start + b];
        std::copy(representations[i].values.begin(), representations[i].values.end(), x.data().begin() + static_cast<std::ptrdiff_t>(b * inputs));
        std::copy(targets[i].begin(), targets[i].end(), y.data().begin() + static_cast<std::ptrdiff_t>(b * outputs));
      }
      Tape tape;
      const Var loss = tape.bce(mlp_forward(tape, tape.constant(std::move(x)), result.params), y);
      tape.backward(loss);
      adam.step();
      loss_sum += tape.value(loss)[0] * static_cast<double>(n);
    }
    result.losses.push_back(loss_sum / static_cast<double>(order.size()));
  }
  return result;
}

LabelSet predict(MlpParams& mlp, const SequenceRepresentation& representation, double threshold) {
  return threshold_labels(mlp_outputs(mlp, representation.values), threshold);
}

PipelineResult run_pipeline(const Corpus& train, const Corpus& test, const PipelineConfig& config,
                            const Corpus* validation) {
  config.segment.validate();
  if (train.sequences.empty()) throw DataError("run_pipeline: empty training corpus");
  if (test.sequences.empty()) throw DataError("run_pipeline: empty test corpus");
  if (test.label_names != train.label_names) {
    throw DataError("run_pipeline: test corpus label table differs from the training corpus");
  }
  const std::size_t k = train.label_count();
  Rng rng(config.segment.seed);

  Vocabulary vocab = Vocabulary::build(train.sequences, config.segment.ngram);
  const SegmentDataset segments = build_segment_dataset(train.sequences, config.segment.segment_size, vocab, k);
  SegmentDataset val_segments;
  if (validation) {
    val_segments = build_segment_dataset(validation->sequences, config.segment.segment_size, vocab, k);
  }
  TrainResult trained = train_segment_model(segments, config.segment, rng, validation ? &val_segments : nullptr);

  PipelineResult result{std::move(vocab), train.label_names, std::move(trained.model), std::move(trained.curve),
                        {}, {}, {}, {}, {}, {}};
  result.train_representations =
      represent_sequences(result.model, train.sequences, config.segment.segment_size, result.vocab);
  result.test_representations =
      represent_sequences(result.model, test.sequences, config.segment.segment_size, result.vocab);

  std::vector<std::vector<double>> targets;
  targets.reserve(train.sequences.size());
  for (const auto& s : train.sequences) targets.push_back(one_hot(s.labels, k));
  Rng mlp_rng(config.mlp.seed);
  MlpTrainResult mlp = train_mlp(result.train_representations, targets, config.mlp, mlp_rng);
  result.mlp = std::move(mlp.params);
  result.mlp_losses = std::move(mlp.losses);

  std::vector<LabelSet> truth;
  for (std::size_t i = 0; i < test.sequences.size(); ++i) {
    truth.push_back(test.sequences[i].labels);
    result.test_predictions.push_back(predict(result.mlp, result.test_representations[i], config.threshold));
  }
  result.metrics = compute_metrics(truth, result.test_predictions, config.recall);
  return result;
}

void write_representations_csv(std::ostream& out, std::span<const SequenceRepresentation> reps) {
  const std::size_t k = reps.empty() ? 0 : reps[0].values.size();
  out << "sequence_id";
  for (std::size_t j = 0; j < k; ++j) out << ",v_" << j;
  out << '\n' << std::setprecision(17);
  for (const auto& r : reps) {
    out << r.id;
    for (double v : r.values) out << ',' << v;
    out << '\n';
  }
}

}  // namespace lsan
