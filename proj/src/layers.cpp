#include "lsan/layers.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "lsan/error.hpp"

namespace lsan {

Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor w({rows, cols});
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& v : w.data()) v = uniform(rng, -limit, limit);
  return w;
}

EmbeddingParams EmbeddingParams::init(std::size_t vocab_size, std::size_t dim, Rng& rng) {
  EmbeddingParams p{glorot_uniform(vocab_size, dim, rng)};
  for (std::size_t c = 0; c < dim; ++c) p.table.at(0, c) = 0.0;
  return p;
}

void EmbeddingParams::freeze_padding_grad() {
  if (!table.has_grad()) return;
  auto g = table.grad();
  std::fill_n(g.begin(), table.cols(), 0.0);
}

void EmbeddingParams::collect(const std::string& prefix, NamedParams& out) { out.emplace_back(prefix + "table", &table); }

GruParams GruParams::init(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  GruParams p;
  p.w_z = glorot_uniform(hidden, input_dim, rng);
  p.w_r = glorot_uniform(hidden, input_dim, rng);
  p.w_h = glorot_uniform(hidden, input_dim, rng);
  p.u_z = glorot_uniform(hidden, hidden, rng);
  p.u_r = glorot_uniform(hidden, hidden, rng);
  p.u_h = glorot_uniform(hidden, hidden, rng);
  p.b_z = Tensor({hidden});
  p.b_r = Tensor({hidden});
  p.b_h = Tensor({hidden});
  return p;
}

void GruParams::collect(const std::string& prefix, NamedParams& out) {
  out.emplace_back(prefix + "w_z", &w_z);
  out.emplace_back(prefix + "w_r", &w_r);
  out.emplace_back(prefix + "w_h", &w_h);
  out.emplace_back(prefix + "u_z", &u_z);
  out.emplace_back(prefix + "u_r", &u_r);
  out.emplace_back(prefix + "u_h", &u_h);
  out.emplace_back(prefix + "b_z", &b_z);
  out.emplace_back(prefix + "b_r", &b_r);
  out.emplace_back(prefix + "b_h", &b_h);
}

LstmParams LstmParams::init(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  LstmParams p;
  p.w_f = glorot_uniform(hidden, hidden + input_dim, rng);
  p.w_i = glorot_uniform(hidden, hidden + input_dim, rng);
  p.w_c = glorot_uniform(hidden, hidden + input_dim, rng);
  p.w_o = glorot_uniform(hidden, hidden + input_dim, rng);
  p.b_f = Tensor({hidden});
  p.b_i = Tensor({hidden});
  p.b_c = Tensor({hidden});
  p.b_o = Tensor({hidden});
  return p;
}

void LstmParams::collect(const std::string& prefix, NamedParams& out) {
  out.emplace_back(prefix + "w_f", &w_f);
  out.emplace_back(prefix + "w_i", &w_i);
  out.emplace_back(prefix + "w_c", &w_c);
  out.emplace_back(prefix + "w_o", &w_o);
  out.emplace_back(prefix + "b_f", &b_f);
  out.emplace_back(prefix + "b_i", &b_i);
  out.emplace_back(prefix + "b_c", &b_c);
  out.emplace_back(prefix + "b_o", &b_o);
}

std::size_t hidden_size(const RecurrentParams& params) {
  return std::visit([](const auto& p) { return p.hidden(); }, params);
}

void collect(RecurrentParams& params, const std::string& prefix, NamedParams& out) {
  std::visit([&](auto& p) { p.collect(prefix, out); }, params);
}

AttentionParams AttentionParams::init(std::size_t state_dim, double lambda, Rng& rng, AttentionScore score,
                                      std::size_t context_dim) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("attention lambda must lie in (0, 1]");
  AttentionParams p;
  p.lambda = lambda;
  p.score = score;
  if (score == AttentionScore::kScalar) {
    p.w_a = glorot_uniform(1, state_dim, rng);
    p.b_a = Tensor({1});
  } else {
    if (context_dim == 0) throw std::invalid_argument("context attention needs a positive context dimension");
    p.w_a = glorot_uniform(context_dim, state_dim, rng);
    p.b_a = Tensor({context_dim});
    p.context = glorot_uniform(1, context_dim, rng);
  }
  return p;
}

void AttentionParams::collect(const std::string& prefix, NamedParams& out) {
  out.emplace_back(prefix + "w_a", &w_a);
  out.emplace_back(prefix + "b_a", &b_a);
  if (score == AttentionScore::kContext) out.emplace_back(prefix + "context", &context);
}

DenseParams DenseParams::init(std::size_t input_dim, std::size_t outputs, Rng& rng) {
  return {glorot_uniform(outputs, input_dim, rng), Tensor({outputs})};
}

void DenseParams::collect(const std::string& prefix, NamedParams& out) {
  out.emplace_back(prefix + "w_out", &w_out);
  out.emplace_back(prefix + "b_out", &b_out);
}

std::vector<Var> embed(Tape& tape, EmbeddingParams& params, std::span<const std::vector<std::size_t>> indices) {
  if (indices.empty()) throw DimensionError("embed: empty batch");
  const std::size_t steps = indices[0].size();
  for (const auto& row : indices) {
    if (row.size() != steps) throw DimensionError("embed: index vectors differ in length");
  }
  const Var table = tape.parameter(params.table);
  std::vector<Var> out;
  out.reserve(steps);
  std::vector<std::size_t> column(indices.size());
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < indices.size(); ++b) column[b] = indices[b][t];
    out.push_back(tape.gather_rows(table, column));
  }
  return out;
}

Var gru_step(Tape& tape, Var x, Var h_prev, GruParams& p) {
  const std::size_t hidden = p.hidden();
  if (tape.value(x).cols() != p.input_dim() || tape.value(h_prev).cols() != hidden ||
      tape.value(x).rows() != tape.value(h_prev).rows()) {
    throw DimensionError("gru_step: input " + shape_string(tape.value(x).shape()) + " / state " +
                         shape_string(tape.value(h_prev).shape()) + " do not match a GRU with d=" +
                         std::to_string(p.input_dim()) + ", H=" + std::to_string(hidden));
  }
  auto gate = [&](Tensor& w, Tensor& u, Tensor& b) {
    const Var wx = tape.matmul_nt(x, tape.parameter(w));
    const Var uh = tape.matmul_nt(h_prev, tape.parameter(u));
    return tape.sigmoid(tape.add(tape.add(wx, uh), tape.parameter(b)));
  };
  const Var z = gate(p.w_z, p.u_z, p.b_z);
  const Var r = gate(p.w_r, p.u_r, p.b_r);
  const Var wx = tape.matmul_nt(x, tape.parameter(p.w_h));
  const Var uh = tape.matmul_nt(h_prev, tape.parameter(p.u_h));
  const Var candidate = tape.tanh(tape.add(tape.add(wx, tape.mul(r, uh)), tape.parameter(p.b_h)));
  const Var keep = tape.mul(z, h_prev);
  const Var one_minus_z = tape.affine(z, -1.0, 1.0);
  return tape.add(keep, tape.mul(one_minus_z, candidate));
}

LstmState lstm_step(Tape& tape, Var x, Var h_prev, Var c_prev, LstmParams& p) {
  const std::size_t hidden = p.hidden();
  if (tape.value(x).cols() != p.input_dim() || tape.value(h_prev).cols() != hidden ||
      tape.value(c_prev).cols() != hidden || tape.value(x).rows() != tape.value(h_prev).rows()) {
    throw DimensionError("lstm_step: input " + shape_string(tape.value(x).shape()) + " / state " +
                         shape_string(tape.value(h_prev).shape()) + " do not match an LSTM with d=" +
                         std::to_string(p.input_dim()) + ", H=" + std::to_string(hidden));
  }
  const Var joined_parts[] = {h_prev, x};
  const Var joined = tape.concat_cols(joined_parts);
  auto affine = [&](Tensor& w, Tensor& b) { return tape.add(tape.matmul_nt(joined, tape.parameter(w)), tape.parameter(b)); };
  const Var f = tape.sigmoid(affine(p.w_f, p.b_f));
  const Var i = tape.sigmoid(affine(p.w_i, p.b_i));
  const Var candidate = tape.tanh(affine(p.w_c, p.b_c));
  const Var c = tape.add(tape.mul(f, c_prev), tape.mul(i, candidate));
  const Var o = tape.sigmoid(affine(p.w_o, p.b_o));
  const Var h = tape.mul(o, tape.tanh(c));
  return {h, c};
}

namespace {

// Runs `cell` over `inputs` in the given order and returns states indexed
// by original position.
std::vector<Var> run_direction(Tape& tape, std::span<const Var> inputs, RecurrentParams& cell, bool reverse) {
  const std::size_t steps = inputs.size();
  const std::size_t batch = tape.value(inputs[0]).rows();
  const std::size_t hidden = hidden_size(cell);
  std::vector<Var> states(steps);
  const Var zero = tape.constant(Tensor({batch, hidden}));
  Var h = zero;
  Var c = zero;
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = reverse ? steps - 1 - k : k;
    if (auto* gru = std::get_if<GruParams>(&cell)) {
      h = gru_step(tape, inputs[t], h, *gru);
    } else {
      const LstmState next = lstm_step(tape, inputs[t], h, c, std::get<LstmParams>(cell));
      h = next.h;
      c = next.c;
    }
    states[t] = h;
  }
  return states;
}

void check_states(const Tape& tape, std::span<const Var> states, const Mask& mask, const char* who) {
  if (states.empty()) throw DimensionError(std::string(who) + ": no time steps");
  const std::size_t batch = tape.value(states[0]).rows();
  if (!mask.empty() && mask.size() != batch * states.size()) {
    throw DimensionError(std::string(who) + ": mask has " + std::to_string(mask.size()) + " entries, expected " +
                         std::to_string(batch * states.size()));
  }
}

Var attention_scores(Tape& tape, std::span<const Var> states, AttentionParams& p) {
  const Var w = tape.parameter(p.w_a);
  const Var b = tape.parameter(p.b_a);
  std::vector<Var> per_step;
  per_step.reserve(states.size());
  for (Var h : states) {
    const Var u = tape.tanh(tape.add(tape.matmul_nt(h, w), b));
    per_step.push_back(p.score == AttentionScore::kScalar ? u : tape.matmul_nt(u, tape.parameter(p.context)));
  }
  return tape.concat_cols(per_step);
}

Var weighted_sum(Tape& tape, std::span<const Var> states, Var weights) {
  Var total;
  for (std::size_t t = 0; t < states.size(); ++t) {
    const Var term = tape.mul(tape.slice_cols(weights, t, 1), states[t]);
    total = total.valid() ? tape.add(total, term) : term;
  }
  return total;
}

}  // namespace

std::vector<Var> bidir_run(Tape& tape, std::span<const Var> inputs, RecurrentParams& forward,
                           RecurrentParams& backward) {
  if (inputs.empty()) throw DimensionError("bidir_run: sequence must have at least one step");
  if (hidden_size(forward) != hidden_size(backward)) {
    throw DimensionError("bidir_run: forward and backward cells differ in hidden size");
  }
  const auto fwd = run_direction(tape, inputs, forward, false);
  const auto bwd = run_direction(tape, inputs, backward, true);
  std::vector<Var> out;
  out.reserve(inputs.size());
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const Var parts[] = {fwd[t], bwd[t]};
    out.push_back(tape.concat_cols(parts));
  }
  return out;
}

AttentionOutput scaled_attention(Tape& tape, std::span<const Var> states, const Mask& mask, AttentionParams& params) {
  check_states(tape, states, mask, "scaled_attention");
  if (!(params.lambda > 0.0 && params.lambda <= 1.0)) {
    throw std::invalid_argument("scaled_attention: lambda must lie in (0, 1]");
  }
  AttentionOutput out;
  out.scores = attention_scores(tape, states, params);
  out.alpha = tape.softmax(out.scores, mask);
  // Masked entries are exactly zero and unmasked ones strictly positive, so
  // the plain row max is the max over unmasked positions.
  out.alpha_max = tape.reduce(ReduceKind::kMax, out.alpha, 1);
  out.alpha_scaled = tape.scalar_mul(tape.div(out.alpha, out.alpha_max), params.lambda);
  out.context = weighted_sum(tape, states, out.alpha_scaled);
  return out;
}

AttentionOutput standard_attention(Tape& tape, std::span<const Var> states, const Mask& mask,
                                   AttentionParams& params) {
  check_states(tape, states, mask, "standard_attention");
  AttentionOutput out;
  out.scores = attention_scores(tape, states, params);
  out.alpha = tape.softmax(out.scores, mask);
  out.alpha_max = tape.reduce(ReduceKind::kMax, out.alpha, 1);
  out.alpha_scaled = out.alpha;
  out.context = weighted_sum(tape, states, out.alpha);
  return out;
}

Var last_hidden(Tape& tape, std::span<const Var> states, const Mask& mask) {
  check_states(tape, states, mask, "last_hidden");
  const std::size_t steps = states.size();
  const std::size_t batch = tape.value(states[0]).rows();
  // Rows grouped by the position of their last real token.
  std::map<std::size_t, std::vector<std::size_t>> rows_by_step;
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t last = steps;
    for (std::size_t t = steps; t-- > 0;) {
      if (mask.empty() || !mask[b * steps + t]) {
        last = t;
        break;
      }
    }
    if (last == steps) throw EmptyAttentionError("last_hidden: every position of row " + std::to_string(b) + " is masked");
    rows_by_step[last].push_back(b);
  }
  if (rows_by_step.size() == 1 && rows_by_step.begin()->second.size() == batch) {
    return states[rows_by_step.begin()->first];
  }
  Var total;
  for (const auto& [t, rows] : rows_by_step) {
    Tensor indicator({batch, 1});
    for (std::size_t b : rows) indicator[b] = 1.0;
    const Var term = tape.mul(states[t], tape.constant(std::move(indicator)));
    total = total.valid() ? tape.add(total, term) : term;
  }
  return total;
}

Var dense_sigmoid(Tape& tape, Var v, DenseParams& params) {
  if (tape.value(v).cols() != params.w_out.cols()) {
    throw DimensionError("dense_sigmoid: input " + shape_string(tape.value(v).shape()) + " vs weight " +
                         shape_string(params.w_out.shape()));
  }
  const Var logits = tape.add(tape.matmul_nt(v, tape.parameter(params.w_out)), tape.parameter(params.b_out));
  return tape.sigmoid(logits);
}

Var dropout(Tape& tape, Var x, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout: rate must lie in [0, 1)");
  if (!training || rate == 0.0) return x;
  const Tensor& vx = tape.value(x);
  Tensor keep(vx.shape());
  const double scale = 1.0 / (1.0 - rate);
  for (double& k : keep.data()) k = bernoulli(rng, rate) ? 0.0 : scale;
  return tape.mul(x, tape.constant(std::move(keep)));
}

}  // namespace lsan
