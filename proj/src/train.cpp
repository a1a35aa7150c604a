#include "lsan/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <unordered_set>

#include "lsan/error.hpp"
#include "lsan/log.hpp"
#include "lsan/metrics.hpp"

namespace lsan {

double bce_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size() || pred.empty()) {
    throw DimensionError("bce_loss: prediction length " + std::to_string(pred.size()) + " vs target length " +
                         std::to_string(target.size()));
  }
  double total = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double p = std::clamp(pred[k], kProbabilityClamp, 1.0 - kProbabilityClamp);
    total += target[k] * std::log(p) + (1.0 - target[k]) * std::log(1.0 - p);
  }
  return -total / static_cast<double>(pred.size());
}

Adam::Adam(NamedParams params, AdamConfig config) : params_(std::move(params)), config_(config) {
  first_.reserve(params_.size());
  second_.reserve(params_.size());
  for (const auto& [name, p] : params_) {
    first_.emplace_back(p->size(), 0.0);
    second_.emplace_back(p->size(), 0.0);
  }
}

void Adam::step() {
  for (const auto& [name, p] : params_) {
    if (!p->has_grad()) continue;
    if (p->grad().size() != p->size()) throw DimensionError("adam: gradient of '" + name + "' has the wrong size");
    for (double g : p->grad()) {
      if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient for parameter '" + name + "'");
    }
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correct1 = 1.0 - std::pow(config_.beta1, t);
  const double correct2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = *params_[k].second;
    if (!p.has_grad()) continue;
    auto g = p.grad();
    auto w = p.data();
    auto& m = first_[k];
    auto& v = second_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correct1;
      const double v_hat = v[i] / correct2;
      w[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs", "must be at least 1");
  if (batch_size == 0) throw ConfigError("batch_size", "must be at least 1");
  if (!(adam.learning_rate > 0.0)) throw ConfigError("learning_rate", "must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw ConfigError("adam_beta1", "must lie in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw ConfigError("adam_beta2", "must lie in [0, 1)");
  if (!(adam.epsilon > 0.0)) throw ConfigError("adam_epsilon", "must be positive");
  if (!(model.lambda > 0.0 && model.lambda <= 1.0)) throw ConfigError("lambda", "must lie in (0, 1]");
  if (ngram == 0) throw ConfigError("ngram", "must be at least 1");
  if (segment_size < 2) throw ConfigError("segment_size", "must be at least 2");
  if (segment_size < ngram) throw ConfigError("segment_size", "must be at least ngram");
  if (model.embedding_dim == 0) throw ConfigError("embedding_dim", "must be at least 1");
  if (model.hidden_size == 0) throw ConfigError("hidden_size", "must be at least 1");
  if (model.score == AttentionScore::kContext && model.context_dim == 0) {
    throw ConfigError("attention_context_dim", "must be at least 1");
  }
  if (!(model.dropout_embedding >= 0.0 && model.dropout_embedding < 1.0)) {
    throw ConfigError("dropout_embedding", "must lie in [0, 1)");
  }
  if (!(model.dropout_dense >= 0.0 && model.dropout_dense < 1.0)) throw ConfigError("dropout_dense", "must lie in [0, 1)");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction", "must lie in (0, 1)");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold", "must lie in (0, 1)");
}

void LossCurve::write_csv(std::ostream& out) const {
  out << "epoch,train_loss,val_loss,seconds\n";
  out << std::setprecision(17);
  for (const auto& e : epochs) out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.seconds << '\n';
}

std::pair<SegmentDataset, SegmentDataset> split_by_parent(const SegmentDataset& data, double fraction, Rng& rng) {
  std::vector<std::string> parents;
  std::unordered_set<std::string> seen;
  for (const auto& s : data.segments) {
    if (seen.insert(s.parent_id).second) parents.push_back(s.parent_id);
  }
  SegmentDataset keep = data;
  SegmentDataset held = data;
  keep.segments.clear();
  held.segments.clear();
  std::size_t held_count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(parents.size())));
  held_count = std::max<std::size_t>(held_count, 1);
  if (parents.size() >= 2) held_count = std::min(held_count, parents.size() - 1);
  shuffle(std::span<std::string>(parents), rng);
  const std::unordered_set<std::string> held_ids(parents.begin(),
                                                 parents.begin() + static_cast<std::ptrdiff_t>(held_count));
  for (const auto& s : data.segments) (held_ids.count(s.parent_id) ? held : keep).segments.push_back(s);
  return {std::move(keep), std::move(held)};
}

namespace {

Tensor batch_targets(std::span<const Segment* const> batch) {
  const std::size_t k = batch[0]->labels.size();
  Tensor t({batch.size(), k});
  for (std::size_t b = 0; b < batch.size(); ++b) std::copy(batch[b]->labels.begin(), batch[b]->labels.end(), t.data().begin() + static_cast<std::ptrdiff_t>(b * k));
  return t;
}

}  // namespace

TrainResult train_segment_model(const SegmentDataset& data, const TrainConfig& config, Rng& rng,
                                const SegmentDataset* validation) {
  config.validate();
  if (data.empty()) throw DataError("train_segment_model: empty dataset");

  SegmentDataset train_part;
  SegmentDataset val_part;
  const SegmentDataset* train_set = &data;
  const SegmentDataset* val_set = validation;
  if (!val_set) {
    std::tie(train_part, val_part) = split_by_parent(data, config.validation_fraction, rng);
    if (train_part.empty()) {
      log_warning("only one parent sequence; validating on the training data");
      val_set = &data;
    } else {
      train_set = &train_part;
      val_set = &val_part;
    }
  }
  if (val_set->empty()) throw DataError("train_segment_model: empty validation set");

  ModelConfig mc = config.model;
  mc.label_count = data.label_count;
  if (data.vocab_size) mc.vocab_size = data.vocab_size;
  TrainResult result{SegmentModel(mc, rng), {}};
  SegmentModel& model = result.model;
  Adam adam(model.parameters(), config.adam);

  std::vector<std::size_t> order(train_set->size());
  std::vector<const Segment*> batch;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(std::span<std::size_t>(order), rng);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train_set->segments[order[i]]);
      Tape tape;
      const Var probs = model.forward(tape, batch, true, &rng);
      const Var loss = tape.bce(probs, batch_targets(batch));
      tape.backward(loss);
      model.embedding.freeze_padding_grad();
      adam.step();
      loss_sum += tape.value(loss)[0] * static_cast<double>(batch.size());
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.batch_loss = loss_sum / static_cast<double>(order.size());
    stats.train_loss = evaluate_loss(model, *train_set);
    const Evaluation eval = evaluate(model, *val_set, config.threshold);
    stats.val_loss = eval.loss;
    stats.val_f1 = eval.f1;
    if (config.record_timing) {
      stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    if (!std::isfinite(stats.train_loss) || !std::isfinite(stats.val_loss)) {
      throw NumericError("train_segment_model: non-finite loss at epoch " + std::to_string(epoch));
    }
    result.curve.epochs.push_back(stats);
  }
  return result;
}

Evaluation evaluate(SegmentModel& model, const SegmentDataset& data, double threshold) {
  if (data.empty()) throw DataError("evaluate: empty dataset");
  const auto probs = model.predict(data.segments);
  Evaluation out;
  std::vector<LabelSet> truth;
  std::vector<LabelSet> predicted;
  truth.reserve(data.size());
  predicted.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.loss += bce_loss(probs[i], data.segments[i].labels);
    truth.push_back(labels_from_one_hot(data.segments[i].labels));
    predicted.push_back(threshold_labels(probs[i], threshold));
  }
  out.loss /= static_cast<double>(data.size());
  out.f1 = compute_metrics(truth, predicted).avg_f1;
  return out;
}

double evaluate_loss(SegmentModel& model, const SegmentDataset& data) {
  if (data.empty()) throw DataError("evaluate_loss: empty dataset");
  const auto probs = model.predict(data.segments);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) total += bce_loss(probs[i], data.segments[i].labels);
  return total / static_cast<double>(data.size());
}

}  // namespace lsan
