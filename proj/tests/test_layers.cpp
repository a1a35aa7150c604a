#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "lsan/error.hpp"
#include "lsan/finite_diff.hpp"
#include "lsan/layers.hpp"
#include "lsan/model.hpp"
#include "lsan/pipeline.hpp"
#include "test_util.hpp"

namespace lsan {
namespace {

using testing::random_tensor;
using Vec = std::vector<double>;

// Straight-line reference math on plain vectors, independent of the tape.
Vec affine_row(const Tensor& w, const Vec& x, const Tensor& b) {
  Vec y(w.rows());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    y[i] = b[i];
    for (std::size_t j = 0; j < w.cols(); ++j) y[i] += w.at(i, j) * x[j];
  }
  return y;
}
Vec matvec(const Tensor& w, const Vec& x) {
  Vec y(w.rows(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) y[i] += w.at(i, j) * x[j];
  return y;
}
double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct GruOracle {
  Vec h;
  Vec candidate;
};

GruOracle gru_oracle(const GruParams& p, const Vec& x, const Vec& h) {
  const std::size_t n = h.size();
  const Vec wz = affine_row(p.w_z, x, p.b_z), wr = affine_row(p.w_r, x, p.b_r), wh = affine_row(p.w_h, x, p.b_h);
  const Vec uz = matvec(p.u_z, h), ur = matvec(p.u_r, h), uh = matvec(p.u_h, h);
  GruOracle out{Vec(n), Vec(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double z = sigm(wz[i] + uz[i]);
    const double r = sigm(wr[i] + ur[i]);
    out.candidate[i] = std::tanh(wh[i] + r * uh[i]);
    out.h[i] = z * h[i] + (1.0 - z) * out.candidate[i];
  }
  return out;
}

std::pair<Vec, Vec> lstm_oracle(const LstmParams& p, const Vec& x, const Vec& h, const Vec& c) {
  Vec hx = h;
  hx.insert(hx.end(), x.begin(), x.end());
  const Vec f = affine_row(p.w_f, hx, p.b_f), i = affine_row(p.w_i, hx, p.b_i), g = affine_row(p.w_c, hx, p.b_c),
            o = affine_row(p.w_o, hx, p.b_o);
  Vec h2(h.size()), c2(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    c2[k] = sigm(f[k]) * c[k] + sigm(i[k]) * std::tanh(g[k]);
    h2[k] = sigm(o[k]) * std::tanh(c2[k]);
  }
  return {h2, c2};
}

void randomize(NamedParams params, Rng& rng, double scale = 0.8) {
  for (auto& [name, t] : params)
    for (double& v : t->data()) v = uniform(rng, -scale, scale);
}

std::vector<Tensor*> pointers(const NamedParams& params) {
  std::vector<Tensor*> out;
  for (const auto& [name, t] : params) out.push_back(t);
  return out;
}

Vec row(const Tensor& t, std::size_t r) {
  return Vec(t.data().begin() + static_cast<std::ptrdiff_t>(r * t.cols()),
             t.data().begin() + static_cast<std::ptrdiff_t>((r + 1) * t.cols()));
}

// Gradient of loss() w.r.t. params by the tape vs. central differences.
double gradient_error(const std::function<Var(Tape&)>& loss, const std::vector<Tensor*>& params) {
  Tape tape;
  tape.backward(loss(tape));
  std::vector<Tensor> analytic;
  for (Tensor* p : params) analytic.emplace_back(p->shape(), Vec(p->grad().begin(), p->grad().end()));
  const auto numeric = finite_diff_grad(
      [&] {
        Tape t;
        return t.value(loss(t))[0];
      },
      params);
  return max_relative_error(analytic, numeric);
}

// Weighted sum of every entry so all outputs feed the scalar differently.
Var contract(Tape& tape, Var out, std::uint64_t seed) {
  Rng rng(seed);
  return tape.sum_all(tape.mul(out, tape.constant(random_tensor(tape.value(out).shape(), rng, 0.5, 1.5))));
}

std::vector<Var> constants(Tape& tape, const std::vector<Tensor>& xs) {
  std::vector<Var> out;
  for (const auto& x : xs) out.push_back(tape.constant(x));
  return out;
}

constexpr double kGradTol = 1e-4;

TEST(Glorot, WithinBoundAndCentred) {
  Rng rng(1);
  const Tensor w = glorot_uniform(40, 60, rng);
  const double bound = std::sqrt(6.0 / 100.0);
  double mean = 0.0;
  for (double v : w.data()) {
    EXPECT_LE(std::abs(v), bound);
    mean += v;
  }
  EXPECT_NEAR(mean / static_cast<double>(w.size()), 0.0, 0.02);
}

TEST(Embedding, PaddingRowStartsAndStaysZeroGradient) {
  Rng rng(2);
  auto p = EmbeddingParams::init(6, 4, rng);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(p.table.at(0, j), 0.0);
  Tape tape;
  const std::vector<std::vector<std::size_t>> idx{{0, 3, 5}, {2, 0, 3}};
  const auto steps = embed(tape, p, idx);
  ASSERT_EQ(steps.size(), 3u);
  EXPECT_EQ(row(tape.value(steps[1]), 0), row(p.table, 3));
  EXPECT_EQ(row(tape.value(steps[2]), 1), row(p.table, 3));
  tape.backward(tape.sum_all(tape.concat_cols(steps)));
  EXPECT_EQ(p.table.grad()[0], 2.0);
  p.freeze_padding_grad();
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(p.table.grad()[j], 0.0);
  // Token 3 appears twice, so its rows accumulate.
  EXPECT_EQ(p.table.grad()[3 * 4], 2.0);
}

TEST(Embedding, RejectsOutOfRangeIndex) {
  Rng rng(2);
  auto p = EmbeddingParams::init(4, 2, rng);
  Tape tape;
  const std::vector<std::vector<std::size_t>> idx{{1, 4}};
  EXPECT_THROW(embed(tape, p, idx), DimensionError);
}

TEST(Gru, MatchesStraightLineOracle) {
  Rng rng(3);
  auto p = GruParams::init(5, 6, rng);
  NamedParams named;
  p.collect("g", named);
  randomize(named, rng);
  const Tensor x = random_tensor({2, 5}, rng);
  const Tensor h = random_tensor({2, 6}, rng, -0.9, 0.9);
  Tape tape;
  const auto& got = tape.value(gru_step(tape, tape.constant(x), tape.constant(h), p));
  for (std::size_t b = 0; b < 2; ++b) {
    const auto want = gru_oracle(p, row(x, b), row(h, b));
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_NEAR(got.at(b, i), want.h[i], 1e-12);
      // Convex combination of the previous state and the candidate.
      EXPECT_GE(got.at(b, i), std::min(h.at(b, i), want.candidate[i]) - 1e-15);
      EXPECT_LE(got.at(b, i), std::max(h.at(b, i), want.candidate[i]) + 1e-15);
    }
  }
}

TEST(Lstm, MatchesStraightLineOracleAndStaysBounded) {
  Rng rng(4);
  auto p = LstmParams::init(3, 4, rng);
  NamedParams named;
  p.collect("l", named);
  randomize(named, rng, 2.0);
  Tensor h({1, 4}), c({1, 4});
  Tape tape;
  Var hv = tape.constant(h), cv = tape.constant(c);
  Vec h_ref(4, 0.0), c_ref(4, 0.0);
  for (int t = 0; t < 6; ++t) {
    const Tensor x = random_tensor({1, 3}, rng, -3.0, 3.0);
    const auto next = lstm_step(tape, tape.constant(x), hv, cv, p);
    hv = next.h;
    cv = next.c;
    std::tie(h_ref, c_ref) = lstm_oracle(p, row(x, 0), h_ref, c_ref);
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_NEAR(tape.value(hv)[i], h_ref[i], 1e-12);
      EXPECT_NEAR(tape.value(cv)[i], c_ref[i], 1e-12);
      EXPECT_LT(std::abs(tape.value(hv)[i]), 1.0);
    }
  }
}

TEST(Bidirectional, PalindromeMirrorsStates) {
  Rng rng(5);
  RecurrentParams fwd = GruParams::init(3, 4, rng);
  RecurrentParams bwd = fwd;
  std::vector<Tensor> xs;
  for (int t = 0; t < 3; ++t) xs.push_back(random_tensor({1, 3}, rng));
  xs.push_back(xs[1]);
  xs.push_back(xs[0]);
  Tape tape;
  const auto states = bidir_run(tape, constants(tape, xs), fwd, bwd);
  ASSERT_EQ(states.size(), 5u);
  for (std::size_t t = 0; t < 5; ++t) {
    const auto& s = tape.value(states[t]);
    const auto& mirror = tape.value(states[4 - t]);
    ASSERT_EQ(s.cols(), 8u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(s[i], mirror[4 + i], 1e-14);
  }
}

TEST(Bidirectional, ForwardHalfMatchesStepwiseOracle) {
  Rng rng(6);
  RecurrentParams fwd = GruParams::init(2, 3, rng);
  RecurrentParams bwd = GruParams::init(2, 3, rng);
  std::vector<Tensor> xs;
  for (int t = 0; t < 4; ++t) xs.push_back(random_tensor({1, 2}, rng));
  Tape tape;
  const auto states = bidir_run(tape, constants(tape, xs), fwd, bwd);
  Vec h(3, 0.0);
  for (std::size_t t = 0; t < 4; ++t) {
    h = gru_oracle(std::get<GruParams>(fwd), row(xs[t], 0), h).h;
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(tape.value(states[t])[i], h[i], 1e-13);
  }
  h.assign(3, 0.0);
  for (std::size_t t = 4; t-- > 0;) {
    h = gru_oracle(std::get<GruParams>(bwd), row(xs[t], 0), h).h;
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(tape.value(states[t])[3 + i], h[i], 1e-13);
  }
}

class Attention : public ::testing::Test {
 protected:
  Rng rng{7};

  std::vector<Tensor> states(std::size_t batch, std::size_t steps, std::size_t dim) {
    std::vector<Tensor> out;
    for (std::size_t t = 0; t < steps; ++t) out.push_back(random_tensor({batch, dim}, rng));
    return out;
  }
};

TEST_F(Attention, SinglePositionGetsFullWeight) {
  auto p = AttentionParams::init(4, 1.0, rng);
  const auto hs = states(1, 3, 4);
  Tape tape;
  const auto out = scaled_attention(tape, constants(tape, hs), Mask{1, 0, 1}, p);
  EXPECT_EQ(tape.value(out.alpha).values(), (Vec{0, 1, 0}));
  EXPECT_EQ(tape.value(out.context).values(), hs[1].values());
}

TEST_F(Attention, ScaledMatchesOracle) {
  auto p = AttentionParams::init(4, 0.5, rng);
  const auto hs = states(2, 5, 4);
  const Mask mask{0, 0, 0, 1, 1, 0, 0, 0, 0, 0};
  Tape tape;
  const auto out = scaled_attention(tape, constants(tape, hs), mask, p);
  for (std::size_t b = 0; b < 2; ++b) {
    Vec u(5), w(5, 0.0);
    double hi = -1e300, z = 0.0;
    for (std::size_t t = 0; t < 5; ++t) {
      u[t] = std::tanh(affine_row(p.w_a, row(hs[t], b), p.b_a)[0]);
      if (!mask[b * 5 + t]) hi = std::max(hi, u[t]);
    }
    for (std::size_t t = 0; t < 5; ++t)
      if (!mask[b * 5 + t]) z += std::exp(u[t] - hi);
    double wmax = 0.0;
    for (std::size_t t = 0; t < 5; ++t) {
      if (!mask[b * 5 + t]) w[t] = std::exp(u[t] - hi) / z;
      wmax = std::max(wmax, w[t]);
    }
    Vec ctx(4, 0.0);
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t i = 0; i < 4; ++i) ctx[i] += 0.5 * w[t] / wmax * hs[t].at(b, i);
    for (std::size_t t = 0; t < 5; ++t) {
      EXPECT_NEAR(tape.value(out.alpha).at(b, t), w[t], 1e-14);
      EXPECT_NEAR(tape.value(out.alpha_scaled).at(b, t), 0.5 * w[t] / wmax, 1e-14);
    }
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(tape.value(out.context).at(b, i), ctx[i], 1e-13);
  }
}

TEST_F(Attention, StandardContextIsSoftmaxWeightedMean) {
  auto p = AttentionParams::init(3, 1.0, rng);
  const auto hs = states(1, 4, 3);
  Tape tape;
  const auto out = standard_attention(tape, constants(tape, hs), {}, p);
  const auto& alpha = tape.value(out.alpha);
  for (std::size_t i = 0; i < 3; ++i) {
    double want = 0.0;
    for (std::size_t t = 0; t < 4; ++t) want += alpha[t] * hs[t][i];
    EXPECT_NEAR(tape.value(out.context)[i], want, 1e-14);
  }
}

TEST_F(Attention, InvariantsOnRandomInputs) {
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t steps = 1 + uniform_index(rng, 12);
    const std::size_t dim = 1 + uniform_index(rng, 4);
    const double lambda = uniform(rng, 0.01, 1.0);
    auto p = AttentionParams::init(dim, lambda, rng);
    for (double& v : p.w_a.data()) v = uniform(rng, -3.0, 3.0);
    const auto hs = states(1, steps, dim);
    Mask mask(steps);
    for (auto& m : mask) m = bernoulli(rng, 0.3);
    mask[uniform_index(rng, steps)] = 0;
    Tape tape;
    const auto out = scaled_attention(tape, constants(tape, hs), mask, p);
    const auto& alpha = tape.value(out.alpha);
    const auto& scaled = tape.value(out.alpha_scaled);
    const auto& scores = tape.value(out.scores);
    double total = 0.0, top = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      total += alpha[t];
      top = std::max(top, scaled[t]);
      if (mask[t]) {
        EXPECT_EQ(scaled[t], 0.0);
      }
      for (std::size_t s = 0; s < steps; ++s) {
        if (!mask[t] && !mask[s] && scores[t] > scores[s]) {
          EXPECT_GE(scaled[t], scaled[s]);
        }
      }
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(top, lambda, 1e-12);
  }
}

TEST_F(Attention, ScaledMaximumDoesNotVanishWithLength) {
  for (std::size_t steps : {2u, 16u, 128u, 512u}) {
    auto p = AttentionParams::init(2, 1.0, rng);
    for (double& v : p.w_a.data()) v = uniform(rng, -0.05, 0.05);
    const auto hs = states(1, steps, 2);
    Tape tape;
    const auto vars = constants(tape, hs);
    const auto scaled = scaled_attention(tape, vars, {}, p);
    const auto standard = standard_attention(tape, vars, {}, p);
    const auto& a = tape.value(scaled.alpha_scaled).values();
    EXPECT_EQ(*std::max_element(a.begin(), a.end()), 1.0);
    const auto& s = tape.value(standard.alpha).values();
    EXPECT_LT(*std::max_element(s.begin(), s.end()), 2.0 / static_cast<double>(steps));
  }
}

TEST_F(Attention, RejectsBadInput) {
  auto p = AttentionParams::init(2, 1.0, rng);
  const auto hs = states(1, 2, 2);
  Tape tape;
  const auto vars = constants(tape, hs);
  EXPECT_THROW(scaled_attention(tape, vars, Mask{1, 1}, p), EmptyAttentionError);
  EXPECT_THROW(AttentionParams::init(2, 0.0, rng), std::invalid_argument);
  EXPECT_THROW(AttentionParams::init(2, 1.5, rng), std::invalid_argument);
}

TEST(LastHidden, PicksLastUnmaskedRow) {
  Rng rng(8);
  std::vector<Tensor> hs;
  for (int t = 0; t < 4; ++t) hs.push_back(random_tensor({3, 2}, rng));
  Tape tape;
  const auto out = tape.value(last_hidden(tape, constants(tape, hs), Mask{0, 0, 0, 0, 0, 0, 1, 1, 0, 1, 1, 1}));
  EXPECT_EQ(row(out, 0), row(hs[3], 0));
  EXPECT_EQ(row(out, 1), row(hs[1], 1));
  EXPECT_EQ(row(out, 2), row(hs[0], 2));
}

TEST(Dense, MatchesOracle) {
  Rng rng(9);
  auto p = DenseParams::init(4, 3, rng);
  for (double& v : p.b_out.data()) v = uniform(rng, -1, 1);
  const Tensor v = random_tensor({1, 4}, rng);
  Tape tape;
  const auto& out = tape.value(dense_sigmoid(tape, tape.constant(v), p));
  const Vec z = affine_row(p.w_out, row(v, 0), p.b_out);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(out[k], sigm(z[k]), 1e-15);
}

TEST(Dropout, PreservesExpectationAndDropsAtRate) {
  Rng rng(10);
  const double rate = 0.3;
  const Tensor x({1, 20000}, 2.0);
  Tape tape;
  const auto& out = tape.value(dropout(tape, tape.constant(x), rate, rng, true));
  double mean = 0.0;
  std::size_t zeros = 0;
  for (double v : out.data()) {
    mean += v;
    zeros += v == 0.0;
    if (v != 0.0) {
      EXPECT_DOUBLE_EQ(v, 2.0 / 0.7);
    }
  }
  mean /= 20000.0;
  // Binomial standard error of the drop fraction is about 0.0032.
  EXPECT_NEAR(static_cast<double>(zeros) / 20000.0, rate, 0.015);
  EXPECT_NEAR(mean, 2.0, 0.05);
}

TEST(Dropout, IdentityOutsideTraining) {
  Rng rng(10);
  Tape tape;
  const Var x = tape.constant(Tensor::vector({1, 2, 3}));
  EXPECT_EQ(dropout(tape, x, 0.5, rng, false), x);
  EXPECT_THROW(dropout(tape, x, 1.0, rng, true), std::invalid_argument);
  EXPECT_THROW(dropout(tape, x, -0.1, rng, true), std::invalid_argument);
}

class LayerGradient : public ::testing::Test {
 protected:
  Rng rng{12};
};

TEST_F(LayerGradient, Embedding) {
  auto p = EmbeddingParams::init(7, 5, rng);
  const std::vector<std::vector<std::size_t>> idx{{1, 6, 3, 6}, {2, 2, 0, 5}};
  auto loss = [&](Tape& t) { return contract(t, t.tanh(t.concat_cols(embed(t, p, idx))), 1); };
  EXPECT_LT(gradient_error(loss, {&p.table}), kGradTol);
}

TEST_F(LayerGradient, GruSequence) {
  auto p = GruParams::init(5, 6, rng);
  NamedParams named;
  p.collect("g", named);
  std::vector<Tensor> xs;
  for (int t = 0; t < 8; ++t) xs.push_back(random_tensor({2, 5}, rng));
  auto loss = [&](Tape& t) {
    Var h = t.constant(Tensor({2, 6}));
    for (const auto& x : xs) h = gru_step(t, t.constant(x), h, p);
    return contract(t, h, 2);
  };
  EXPECT_LT(gradient_error(loss, pointers(named)), kGradTol);
}

TEST_F(LayerGradient, LstmSequence) {
  auto p = LstmParams::init(4, 5, rng);
  NamedParams named;
  p.collect("l", named);
  std::vector<Tensor> xs;
  for (int t = 0; t < 7; ++t) xs.push_back(random_tensor({2, 4}, rng));
  auto loss = [&](Tape& t) {
    LstmState s{t.constant(Tensor({2, 5})), t.constant(Tensor({2, 5}))};
    for (const auto& x : xs) s = lstm_step(t, t.constant(x), s.h, s.c, p);
    return contract(t, t.concat_cols(std::vector<Var>{s.h, s.c}), 3);
  };
  EXPECT_LT(gradient_error(loss, pointers(named)), kGradTol);
}

TEST_F(LayerGradient, Bidirectional) {
  for (bool lstm : {false, true}) {
    RecurrentParams fwd = lstm ? RecurrentParams(LstmParams::init(3, 4, rng)) : RecurrentParams(GruParams::init(3, 4, rng));
    RecurrentParams bwd = lstm ? RecurrentParams(LstmParams::init(3, 4, rng)) : RecurrentParams(GruParams::init(3, 4, rng));
    NamedParams named;
    collect(fwd, "f", named);
    collect(bwd, "b", named);
    std::vector<Tensor> xs;
    for (int t = 0; t < 6; ++t) xs.push_back(random_tensor({2, 3}, rng));
    auto loss = [&](Tape& t) { return contract(t, t.concat_cols(bidir_run(t, constants(t, xs), fwd, bwd)), 4); };
    EXPECT_LT(gradient_error(loss, pointers(named)), kGradTol) << (lstm ? "lstm" : "gru");
  }
}

TEST_F(LayerGradient, ScaledAndStandardAttention) {
  std::vector<Tensor> hs;
  for (int t = 0; t < 6; ++t) hs.push_back(random_tensor({3, 4}, rng));
  const Mask mask{0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 0, 1, 0, 0, 1, 0};
  for (auto score : {AttentionScore::kScalar, AttentionScore::kContext}) {
    auto p = AttentionParams::init(4, 0.7, rng, score, 3);
    for (double& v : p.b_a.data()) v = uniform(rng, -0.5, 0.5);
    NamedParams named;
    p.collect("a", named);
    std::vector<Tensor*> params = pointers(named);
    for (auto& h : hs) params.push_back(&h);
    for (bool scaled : {true, false}) {
      auto loss = [&](Tape& t) {
        std::vector<Var> vars;
        for (auto& h : hs) vars.push_back(t.parameter(h));
        const auto out = scaled ? scaled_attention(t, vars, mask, p) : standard_attention(t, vars, mask, p);
        return contract(t, out.context, 5);
      };
      EXPECT_LT(gradient_error(loss, params), kGradTol) << "scaled=" << scaled;
    }
  }
}

TEST_F(LayerGradient, DenseAndMlp) {
  auto dense = DenseParams::init(5, 3, rng);
  Tensor v = random_tensor({2, 5}, rng);
  auto dense_loss = [&](Tape& t) { return t.bce(dense_sigmoid(t, t.parameter(v), dense), Tensor({2, 3}, Vec{1, 0, 1, 0, 0, 1})); };
  EXPECT_LT(gradient_error(dense_loss, {&dense.w_out, &dense.b_out, &v}), kGradTol);

  auto mlp = MlpParams::init(4, 3, 2, rng);
  for (double& b : mlp.b_hidden.data()) b = uniform(rng, -0.5, 0.5);
  const Tensor x = random_tensor({3, 4}, rng);
  auto mlp_loss = [&](Tape& t) { return t.bce(mlp_forward(t, t.constant(x), mlp), Tensor({3, 2}, Vec{1, 0, 0, 1, 1, 1})); };
  EXPECT_LT(gradient_error(mlp_loss, pointers(mlp.parameters())), kGradTol);
}

TEST(Model, ParameterNamesAndHeadShape) {
  Rng rng(13);
  ModelConfig c;
  c.vocab_size = 9;
  c.label_count = 3;
  c.embedding_dim = 4;
  c.hidden_size = 5;
  SegmentModel scaled(c, rng);
  const auto names = scaled.parameters();
  EXPECT_EQ(names.front().first, "embedding.table");
  EXPECT_EQ(names.back().first, "dense.b_out");
  bool has_attention = false;
  for (const auto& [n, t] : names) has_attention |= n.rfind("attention.", 0) == 0;
  EXPECT_TRUE(has_attention);

  c.attention = AttentionKind::kNone;
  SegmentModel baseline(c, rng);
  for (const auto& [n, t] : baseline.parameters()) EXPECT_NE(n.rfind("attention.", 0), 0u) << n;

  Segment s{{2, 3, 4, 0}, {0, 0, 0, 1}, {0, 1, 0}, "p"};
  const std::vector<Segment> batch{s, s};
  const auto probs = scaled.predict(batch);
  ASSERT_EQ(probs.size(), 2u);
  ASSERT_EQ(probs[0].size(), 3u);
  for (double p : probs[0]) {
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
  EXPECT_EQ(probs[0], probs[1]);
}

TEST(Model, RejectsDegenerateConfig) {
  Rng rng(13);
  ModelConfig c;
  c.vocab_size = 1;
  c.label_count = 2;
  EXPECT_THROW(SegmentModel(c, rng), std::invalid_argument);
}

}  // namespace
}  // namespace lsan
