#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lsan/random.hpp"
#include "lsan/tape.hpp"
#include "lsan/tensor.hpp"

namespace lsan {

using NamedParams = std::vector<std::pair<std::string, Tensor*>>;

/// Glorot/Xavier uniform: U(-sqrt(6/(fan_in+fan_out)), +sqrt(...)), with
/// fan_in = cols and fan_out = rows of a [rows×cols] weight.
Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

struct EmbeddingParams {
  Tensor table;  // [V×d], row 0 (padding) kept at zero

  static EmbeddingParams init(std::size_t vocab_size, std::size_t dim, Rng& rng);
  std::size_t vocab_size() const { return table.rows(); }
  std::size_t dim() const { return table.cols(); }
  /// Zeroes the padding row's gradient so optimizers leave it untouched.
  void freeze_padding_grad();
  void collect(const std::string& prefix, NamedParams& out);
};

struct GruParams {
  Tensor w_z, w_r, w_h;  // [H×d]
  Tensor u_z, u_r, u_h;  // [H×H]
  Tensor b_z, b_r, b_h;  // [H]

  static GruParams init(std::size_t input_dim, std::size_t hidden, Rng& rng);
  std::size_t hidden() const { return u_z.rows(); }
  std::size_t input_dim() const { return w_z.cols(); }
  void collect(const std::string& prefix, NamedParams& out);
};

/// Gate weights act on the concatenation [h_prev, x].
struct LstmParams {
  Tensor w_f, w_i, w_c, w_o;  // [H×(H+d)]
  Tensor b_f, b_i, b_c, b_o;  // [H]

  static LstmParams init(std::size_t input_dim, std::size_t hidden, Rng& rng);
  std::size_t hidden() const { return b_f.size(); }
  std::size_t input_dim() const { return w_f.cols() - hidden(); }
  void collect(const std::string& prefix, NamedParams& out);
};

using RecurrentParams = std::variant<GruParams, LstmParams>;

std::size_t hidden_size(const RecurrentParams& params);
void collect(RecurrentParams& params, const std::string& prefix, NamedParams& out);

/// How the per-position attention score is formed.
///  - kScalar:  u_t = tanh(W_a h_t + b_a), W_a: 2H -> 1; the score is u_t.
///  - kContext: v_t = tanh(W_a h_t + b_a), W_a: 2H -> A; the score is v_t · u_w
///    with a learned context vector u_w.
enum class AttentionScore { kScalar, kContext };

struct AttentionParams {
  Tensor w_a;      // [1×2H] or [A×2H]
  Tensor b_a;      // [1] or [A]
  Tensor context;  // [1×A]; only used by kContext
  double lambda = 1.0;
  AttentionScore score = AttentionScore::kScalar;

  static AttentionParams init(std::size_t state_dim, double lambda, Rng& rng,
                              AttentionScore score = AttentionScore::kScalar, std::size_t context_dim = 0);
  void collect(const std::string& prefix, NamedParams& out);
};

struct DenseParams {
  Tensor w_out;  // [K×in]
  Tensor b_out;  // [K]

  static DenseParams init(std::size_t input_dim, std::size_t outputs, Rng& rng);
  void collect(const std::string& prefix, NamedParams& out);
};

/// Tape handles of one attention evaluation over a batch of B rows.
struct AttentionOutput {
  Var scores;        // [B×T] pre-softmax scores
  Var alpha;         // [B×T] softmax over unmasked positions
  Var alpha_max;     // [B×1]
  Var alpha_scaled;  // [B×T]; equals alpha for standard attention
  Var context;       // [B×2H]
};

/// Per time step, the [B×d] rows table[indices[b][t]]. `indices` holds B
/// index vectors of equal length T.
std::vector<Var> embed(Tape& tape, EmbeddingParams& params, std::span<const std::vector<std::size_t>> indices);

/// One GRU update:
///   z = σ(W_z x + U_z h + b_z)
///   r = σ(W_r x + U_r h + b_r)
///   h~ = tanh(W_h x + r ⊙ (U_h h) + b_h)
///   h' = z ⊙ h + (1 - z) ⊙ h~
/// Inputs are row-batched: x is [B×d], h_prev is [B×H].
Var gru_step(Tape& tape, Var x, Var h_prev, GruParams& params);

struct LstmState {
  Var h;
  Var c;
};

/// One LSTM update on [h_prev, x]:
///   f, i, o = σ(W_{f,i,o} [h, x] + b),  C~ = tanh(W_c [h, x] + b_c)
///   C' = f ⊙ C + i ⊙ C~,  h' = o ⊙ tanh(C')
LstmState lstm_step(Tape& tape, Var x, Var h_prev, Var c_prev, LstmParams& params);

/// Runs one cell left-to-right and another right-to-left from zero states;
/// row t of the result is [h_t^fwd, h_t^bwd] ([B×2H] per step).
std::vector<Var> bidir_run(Tape& tape, std::span<const Var> inputs, RecurrentParams& forward,
                           RecurrentParams& backward);

/// Attention with scores rescaled so the largest unmasked weight equals
/// lambda, context = Σ_t alpha_scaled[t] · h[t]. `mask` is [B×T], nonzero
/// marks padding.
AttentionOutput scaled_attention(Tape& tape, std::span<const Var> states, const Mask& mask, AttentionParams& params);

/// Plain softmax attention; context = Σ_t alpha[t] · h[t].
AttentionOutput standard_attention(Tape& tape, std::span<const Var> states, const Mask& mask,
                                   AttentionParams& params);

/// Row of the last unmasked step for every batch row.
Var last_hidden(Tape& tape, std::span<const Var> states, const Mask& mask);

/// σ(v W_outᵀ + b_out), [B×in] -> [B×K].
Var dense_sigmoid(Tape& tape, Var v, DenseParams& params);

/// Inverted dropout: in training mode entries are zeroed with probability
/// `rate` and survivors scaled by 1/(1-rate). Identity otherwise.
Var dropout(Tape& tape, Var x, double rate, Rng& rng, bool training);

}  // namespace lsan
