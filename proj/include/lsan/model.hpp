#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lsan/layers.hpp"
#include "lsan/seqdata.hpp"

namespace lsan {

enum class CellKind { kGru, kLstm };
/// kScaled is the lambda-scaled network, kStandard the softmax-attention
/// baseline, kNone the last-hidden-state baseline.
enum class AttentionKind { kScaled, kStandard, kNone };

std::string_view to_string(CellKind kind);
std::string_view to_string(AttentionKind kind);
std::string_view to_string(AttentionScore kind);
CellKind parse_cell_kind(std::string_view text);
AttentionKind parse_attention_kind(std::string_view text);
AttentionScore parse_attention_score(std::string_view text);

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t label_count = 0;
  std::size_t embedding_dim = 32;
  std::size_t hidden_size = 70;
  CellKind cell = CellKind::kGru;
  AttentionKind attention = AttentionKind::kScaled;
  AttentionScore score = AttentionScore::kScalar;
  std::size_t context_dim = 32;
  double lambda = 1.0;
  double dropout_embedding = 0.3;
  double dropout_dense = 0.2;
};

/// Embedding -> dropout -> bidirectional recurrence -> attention (or last
/// hidden state) -> dropout -> dense sigmoid head.
class SegmentModel {
 public:
  SegmentModel(const ModelConfig& config, Rng& rng);

  const ModelConfig& config() const noexcept { return config_; }

  /// Sigmoid outputs [B×K] for a batch of segments sharing one length.
  /// `rng` drives dropout and may be null when `training` is false.
  Var forward(Tape& tape, std::span<const Segment* const> batch, bool training, Rng* rng);

  /// Same as forward, also exposing the attention internals (invalid
  /// handles for the last-hidden baseline).
  struct Trace {
    Var probs;
    AttentionOutput attention;
  };
  Trace forward_trace(Tape& tape, std::span<const Segment* const> batch, bool training, Rng* rng);

  /// Inference-mode outputs, one K-vector per segment.
  std::vector<std::vector<double>> predict(std::span<const Segment> segments, std::size_t batch_size = 64);

  /// Every trainable tensor with a stable name, in a fixed order.
  NamedParams parameters();

  EmbeddingParams embedding;
  RecurrentParams forward_cell;
  RecurrentParams backward_cell;
  AttentionParams attention;
  DenseParams dense;

 private:
  ModelConfig config_;
};

}  // namespace lsan
