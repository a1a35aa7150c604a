#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "lsan/error.hpp"
#include "lsan/finite_diff.hpp"
#include "lsan/synth.hpp"
#include "lsan/train.hpp"

namespace lsan {
namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 2;
  c.batch_size = 8;
  c.segment_size = 20;
  c.model.embedding_dim = 4;
  c.model.hidden_size = 5;
  return c;
}

SynthSpec small_spec() {
  SynthSpec s;
  s.class_count = 3;
  s.motifs_per_class = 4;
  s.sequence_length = 30;
  s.train_count = 60;
  s.val_count = 15;
  s.test_count = 15;
  return s;
}

SegmentDataset small_dataset(const Corpus& corpus, const TrainConfig& c) {
  const Vocabulary v = Vocabulary::build(corpus.sequences, c.ngram);
  return build_segment_dataset(corpus.sequences, c.segment_size, v, corpus.label_count());
}

TEST(BceLoss, Examples) {
  EXPECT_NEAR(bce_loss(std::vector<double>{1.0, 0.0}, std::vector<double>{1.0, 0.0}), 0.0, 1e-11);
  EXPECT_NEAR(bce_loss(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0}), std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_loss(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 1.0}), std::log(2.0), 1e-15);
  EXPECT_THROW(bce_loss(std::vector<double>{0.5}, std::vector<double>{1.0, 0.0}), DimensionError);
}

TEST(BceLoss, LogitGradientIsResidualOverK) {
  Rng rng(1);
  Tensor z({1, 4});
  for (double& v : z.data()) v = uniform(rng, -2.0, 2.0);
  const Tensor y = Tensor::vector({1, 0, 0, 1});
  Tape tape;
  const Var p = tape.sigmoid(tape.parameter(z));
  tape.backward(tape.bce(p, y));
  for (std::size_t k = 0; k < 4; ++k) {
    const double prob = 1.0 / (1.0 + std::exp(-z[k]));
    EXPECT_NEAR(z.grad()[k], (prob - y[k]) / 4.0, 1e-15);
  }
  const auto numeric = finite_diff_grad(
      [&] {
        std::vector<double> probs;
        for (double v : z.data()) probs.push_back(1.0 / (1.0 + std::exp(-v)));
        return bce_loss(probs, y.values());
      },
      std::vector<Tensor*>{&z});
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(z.grad()[k], numeric[0][k], 1e-9);
}

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  Tensor w = Tensor::vector({1.0, -2.0});
  w.enable_grad();
  Adam adam({{"w", &w}});
  for (int i = 0; i < 5; ++i) adam.step();
  EXPECT_EQ(w.values(), (std::vector<double>{1.0, -2.0}));
}

TEST(Adam, FirstStepMovesByLearningRateTimesSign) {
  Tensor w = Tensor::vector({1.0, 1.0});
  w.enable_grad();
  w.grad()[0] = 3.0;
  w.grad()[1] = -0.01;
  Adam adam({{"w", &w}}, AdamConfig{.learning_rate = 0.1});
  adam.step();
  EXPECT_NEAR(w[0], 1.0 - 0.1, 1e-7);
  EXPECT_NEAR(w[1], 1.0 + 0.1, 1e-5);
}

TEST(Adam, MinimisesSquare) {
  Tensor w = Tensor::vector({5.0});
  Adam adam({{"w", &w}}, AdamConfig{.learning_rate = 0.1});
  for (int i = 0; i < 100; ++i) {
    Tape tape;
    const Var v = tape.parameter(w);
    tape.backward(tape.sum_all(tape.mul(v, v)));
    adam.step();
  }
  EXPECT_LT(std::abs(w[0]), 0.5);
}

TEST(Adam, NonFiniteGradientIsReportedByName) {
  Tensor w = Tensor::vector({1.0});
  w.enable_grad();
  w.grad()[0] = std::nan("");
  Adam adam({{"layer.w", &w}});
  try {
    adam.step();
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("layer.w"), std::string::npos);
  }
  EXPECT_EQ(w[0], 1.0);
}

TEST(TrainConfig, ValidationNamesTheKey) {
  auto key_of = [](TrainConfig c) {
    try {
      c.validate();
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string();
  };
  TrainConfig c;
  EXPECT_EQ(key_of(c), "");
  c.model.lambda = 0.0;
  EXPECT_EQ(key_of(c), "lambda");
  c = TrainConfig{};
  c.epochs = 0;
  EXPECT_EQ(key_of(c), "epochs");
  c = TrainConfig{};
  c.model.dropout_embedding = 1.0;
  EXPECT_EQ(key_of(c), "dropout_embedding");
}

TEST(SplitByParent, KeepsParentsTogether) {
  Rng rng(2);
  const auto corpus = generate(small_spec(), rng);
  TrainConfig c = small_config();
  const auto ds = small_dataset(corpus.train, c);
  const auto [train, held] = split_by_parent(ds, 0.1, rng);
  EXPECT_EQ(train.size() + held.size(), ds.size());
  std::set<std::string> train_parents, held_parents;
  for (const auto& s : train.segments) train_parents.insert(s.parent_id);
  for (const auto& s : held.segments) held_parents.insert(s.parent_id);
  EXPECT_EQ(held_parents.size(), 6u);
  for (const auto& p : held_parents) EXPECT_EQ(train_parents.count(p), 0u);
}

TEST(TrainSegmentModel, OneEpochSmoke) {
  Rng rng(3);
  const auto corpus = generate(small_spec(), rng);
  TrainConfig c = small_config();
  c.epochs = 1;
  const auto ds = small_dataset(corpus.train, c);
  const auto result = train_segment_model(ds, c, rng);
  ASSERT_EQ(result.curve.epochs.size(), 1u);
  EXPECT_TRUE(std::isfinite(result.curve.epochs[0].train_loss));
  EXPECT_TRUE(std::isfinite(result.curve.epochs[0].val_loss));
}

TEST(TrainSegmentModel, SameSeedIsBitIdentical) {
  Rng gen(4);
  const auto corpus = generate(small_spec(), gen);
  for (auto kind : {AttentionKind::kScaled, AttentionKind::kStandard, AttentionKind::kNone}) {
    TrainConfig c = small_config();
    c.model.attention = kind;
    c.model.cell = kind == AttentionKind::kNone ? CellKind::kLstm : CellKind::kGru;
    const auto ds = small_dataset(corpus.train, c);
    auto run = [&] {
      Rng rng(99);
      auto r = train_segment_model(ds, c, rng);
      std::ostringstream csv;
      r.curve.write_csv(csv);
      for (const auto& [name, t] : r.model.parameters()) csv << name << t->values()[0];
      return csv.str();
    };
    EXPECT_EQ(run(), run());
  }
}

TEST(TrainSegmentModel, EveryParameterReceivesGradient) {
  Rng rng(5);
  const auto corpus = generate(small_spec(), rng);
  TrainConfig c = small_config();
  const auto ds = small_dataset(corpus.train, c);
  ModelConfig mc = c.model;
  mc.vocab_size = ds.vocab_size;
  mc.label_count = ds.label_count;
  SegmentModel model(mc, rng);
  std::vector<const Segment*> batch;
  for (std::size_t i = 0; i < 8; ++i) batch.push_back(&ds.segments[i]);
  Tape tape;
  Tensor targets({8, ds.label_count});
  for (std::size_t b = 0; b < 8; ++b)
    for (std::size_t k = 0; k < ds.label_count; ++k) targets.at(b, k) = batch[b]->labels[k];
  tape.backward(tape.bce(model.forward(tape, batch, true, &rng), targets));
  for (const auto& [name, t] : model.parameters()) {
    double norm = 0.0;
    for (double g : t->grad()) norm += g * g;
    EXPECT_GT(norm, 0.0) << name;
  }
}

TEST(TrainSegmentModel, TrainingLossFallsOverFirstEpochs) {
  std::vector<std::vector<double>> losses(5);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng gen(seed);
    const auto corpus = generate(small_spec(), gen);
    TrainConfig c = small_config();
    c.epochs = 5;
    c.segment_size = 30;
    const auto ds = small_dataset(corpus.train, c);
    Rng rng(seed);
    const auto r = train_segment_model(ds, c, rng);
    for (std::size_t e = 0; e < 5; ++e) losses[e].push_back(r.curve.epochs[e].train_loss);
  }
  for (std::size_t e = 1; e < 5; ++e) EXPECT_LT(median(losses[e]), median(losses[e - 1])) << "epoch " << e + 1;
}

TEST(EvaluateLoss, MatchesPerSampleAverage) {
  Rng rng(6);
  const auto corpus = generate(small_spec(), rng);
  TrainConfig c = small_config();
  SegmentDataset ds = small_dataset(corpus.train, c);
  ds.segments.resize(10);
  ModelConfig mc = c.model;
  mc.vocab_size = ds.vocab_size;
  mc.label_count = ds.label_count;
  SegmentModel model(mc, rng);
  const auto probs = model.predict(ds.segments);
  double manual = 0.0;
  for (std::size_t i = 0; i < 10; ++i) manual += bce_loss(probs[i], ds.segments[i].labels);
  EXPECT_NEAR(evaluate_loss(model, ds), manual / 10.0, 1e-15);

  SegmentDataset doubled = ds;
  doubled.segments.insert(doubled.segments.end(), ds.segments.begin(), ds.segments.end());
  EXPECT_NEAR(evaluate_loss(model, doubled), evaluate_loss(model, ds), 1e-15);
  EXPECT_THROW(evaluate_loss(model, SegmentDataset{}), DataError);
}

}  // namespace
}  // namespace lsan
