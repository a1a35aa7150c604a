#include "lsan/model.hpp"

#include <algorithm>
#include <stdexcept>

#include "lsan/error.hpp"

namespace lsan {

std::string_view to_string(CellKind kind) { return kind == CellKind::kGru ? "gru" : "lstm"; }

std::string_view to_string(AttentionKind kind) {
  switch (kind) {
    case AttentionKind::kScaled: return "scaled";
    case AttentionKind::kStandard: return "standard";
    case AttentionKind::kNone: return "none";
  }
  return "?";
}

std::string_view to_string(AttentionScore kind) { return kind == AttentionScore::kScalar ? "scalar" : "context"; }

CellKind parse_cell_kind(std::string_view text) {
  if (text == "gru") return CellKind::kGru;
  if (text == "lstm") return CellKind::kLstm;
  throw std::invalid_argument("expected gru or lstm, got '" + std::string(text) + "'");
}

AttentionKind parse_attention_kind(std::string_view text) {
  if (text == "scaled") return AttentionKind::kScaled;
  if (text == "standard") return AttentionKind::kStandard;
  if (text == "none") return AttentionKind::kNone;
  throw std::invalid_argument("expected scaled, standard or none, got '" + std::string(text) + "'");
}

AttentionScore parse_attention_score(std::string_view text) {
  if (text == "scalar") return AttentionScore::kScalar;
  if (text == "context") return AttentionScore::kContext;
  throw std::invalid_argument("expected scalar or context, got '" + std::string(text) + "'");
}

namespace {

RecurrentParams make_cell(const ModelConfig& c, Rng& rng) {
  if (c.cell == CellKind::kGru) return GruParams::init(c.embedding_dim, c.hidden_size, rng);
  return LstmParams::init(c.embedding_dim, c.hidden_size, rng);
}

const ModelConfig& checked(const ModelConfig& config) {
  if (config.vocab_size < 2 || config.label_count == 0 || config.embedding_dim == 0 || config.hidden_size == 0) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  return config;
}

}  // namespace

SegmentModel::SegmentModel(const ModelConfig& config, Rng& rng)
    : embedding(EmbeddingParams::init(checked(config).vocab_size, config.embedding_dim, rng)),
      forward_cell(make_cell(config, rng)),
      backward_cell(make_cell(config, rng)),
      attention(AttentionParams::init(2 * config.hidden_size, config.lambda, rng, config.score, config.context_dim)),
      dense(DenseParams::init(2 * config.hidden_size, config.label_count, rng)),
      config_(config) {}

Var SegmentModel::forward(Tape& tape, std::span<const Segment* const> batch, bool training, Rng* rng) {
  return forward_trace(tape, batch, training, rng).probs;
}

SegmentModel::Trace SegmentModel::forward_trace(Tape& tape, std::span<const Segment* const> batch, bool training,
                                                Rng* rng) {
  if (batch.empty()) throw DimensionError("forward: empty batch");
  if (training && !rng) throw std::invalid_argument("forward: training mode needs an rng for dropout");
  const std::size_t steps = batch[0]->tokens.size();
  std::vector<std::vector<std::size_t>> indices;
  indices.reserve(batch.size());
  Mask mask;
  mask.reserve(batch.size() * steps);
  for (const Segment* s : batch) {
    if (s->tokens.size() != steps) throw DimensionError("forward: segments differ in length");
    indices.push_back(s->tokens);
    mask.insert(mask.end(), s->pad_mask.begin(), s->pad_mask.end());
  }

  std::vector<Var> inputs = embed(tape, embedding, indices);
  if (training && config_.dropout_embedding > 0.0) {
    for (Var& x : inputs) x = dropout(tape, x, config_.dropout_embedding, *rng, true);
  }
  const std::vector<Var> states = bidir_run(tape, inputs, forward_cell, backward_cell);

  Trace trace;
  Var summary;
  switch (config_.attention) {
    case AttentionKind::kScaled:
      trace.attention = scaled_attention(tape, states, mask, attention);
      summary = trace.attention.context;
      break;
    case AttentionKind::kStandard:
      trace.attention = standard_attention(tape, states, mask, attention);
      summary = trace.attention.context;
      break;
    case AttentionKind::kNone:
      summary = last_hidden(tape, states, mask);
      break;
  }
  if (training && config_.dropout_dense > 0.0) summary = dropout(tape, summary, config_.dropout_dense, *rng, true);
  trace.probs = dense_sigmoid(tape, summary, dense);
  return trace;
}

std::vector<std::vector<double>> SegmentModel::predict(std::span<const Segment> segments, std::size_t batch_size) {
  std::vector<std::vector<double>> out;
  out.reserve(segments.size());
  std::vector<const Segment*> batch;
  for (std::size_t start = 0; start < segments.size(); start += batch_size) {
    const std::size_t end = std::min(segments.size(), start + batch_size);
    batch.clear();
    for (std::size_t i = start; i < end; ++i) batch.push_back(&segments[i]);
    Tape tape;
    const Tensor& probs = tape.value(forward(tape, batch, false, nullptr));
    const std::size_t k = probs.cols();
    for (std::size_t b = 0; b < batch.size(); ++b) {
      out.emplace_back(probs.data().begin() + static_cast<std::ptrdiff_t>(b * k),
                       probs.data().begin() + static_cast<std::ptrdiff_t>((b + 1) * k));
    }
  }
  return out;
}

NamedParams SegmentModel::parameters() {
  NamedParams out;
  embedding.collect("embedding.", out);
  collect(forward_cell, "recurrent.forward.", out);
  collect(backward_cell, "recurrent.backward.", out);
  if (config_.attention != AttentionKind::kNone) attention.collect("attention.", out);
  dense.collect("dense.", out);
  return out;
}

}  // namespace lsan
