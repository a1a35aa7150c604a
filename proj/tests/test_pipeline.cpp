#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <sstream>

#include "lsan/error.hpp"
#include "lsan/metrics.hpp"
#include "lsan/pipeline.hpp"
#include "lsan/synth.hpp"

namespace lsan {
namespace {

using Vec = std::vector<double>;

LabelSet from_bits(unsigned bits) {
  LabelSet s;
  for (std::size_t k = 0; k < 32; ++k)
    if (bits & (1u << k)) s.push_back(k);
  return s;
}

TEST(Aggregate, Examples) {
  const std::vector<Vec> two{{0.2, 0.4}, {0.4, 0.0}};
  const auto r = aggregate(two, "x");
  EXPECT_EQ(r.id, "x");
  EXPECT_DOUBLE_EQ(r.values[0], 1.0);
  EXPECT_NEAR(r.values[1], 2.0 / 3.0, 1e-15);
  EXPECT_EQ(aggregate(std::vector<Vec>{{0.5, 0.25}}).values, (Vec{1.0, 0.5}));
  EXPECT_EQ(aggregate(std::vector<Vec>{{0.0, 0.0}, {0.0, 0.0}}).values, (Vec{0.0, 0.0}));
  EXPECT_THROW(aggregate(std::vector<Vec>{}), DataError);
  EXPECT_THROW(aggregate(std::vector<Vec>{{0.1}, {0.1, 0.2}}), DimensionError);
}

TEST(Aggregate, MaxIsOneAndOrderFree) {
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 1 + uniform_index(rng, 6);
    std::vector<Vec> outputs(1 + uniform_index(rng, 8), Vec(k));
    for (auto& v : outputs)
      for (double& x : v) x = uniform01(rng);
    const auto a = aggregate(outputs);
    EXPECT_EQ(*std::max_element(a.values.begin(), a.values.end()), 1.0);
    shuffle(std::span<Vec>(outputs), rng);
    const auto b = aggregate(outputs);
    for (std::size_t j = 0; j < k; ++j) EXPECT_NEAR(a.values[j], b.values[j], 1e-15);
  }
}

TEST(ThresholdLabels, Examples) {
  EXPECT_EQ(threshold_labels(Vec{0.9, 0.1}, 0.5), (LabelSet{0}));
  EXPECT_EQ(threshold_labels(Vec{0.2, 0.3}, 0.5), (LabelSet{1}));
  EXPECT_EQ(threshold_labels(Vec{0.5, 0.49}, 0.5), (LabelSet{0}));
  EXPECT_EQ(threshold_labels(Vec{0.7, 0.6, 0.1}, 0.5), (LabelSet{0, 1}));
  EXPECT_EQ(threshold_labels(Vec{0.3, 0.3}, 0.5), (LabelSet{0}));
}

TEST(ThresholdLabels, NeverEmpty) {
  Rng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    Vec out(1 + uniform_index(rng, 6));
    for (double& x : out) x = uniform01(rng);
    EXPECT_FALSE(threshold_labels(out, uniform(rng, 0.01, 0.99)).empty());
  }
}

TEST(Metrics, Examples) {
  const std::vector<LabelSet> y{{0, 1}}, p{{1, 2}};
  const auto r = compute_metrics(y, p);
  EXPECT_DOUBLE_EQ(r.avg_precision, 0.5);
  EXPECT_DOUBLE_EQ(r.avg_recall, 0.5);
  EXPECT_DOUBLE_EQ(r.avg_f1, 0.5);
  const std::vector<LabelSet> same{{0}, {1, 3}, {2}};
  const auto perfect = compute_metrics(same, same);
  EXPECT_EQ(perfect.avg_precision, 1.0);
  EXPECT_EQ(perfect.avg_recall, 1.0);
  EXPECT_EQ(perfect.avg_f1, 1.0);
}

TEST(Metrics, HandEnumeratedThreeSamples) {
  // {0,1} vs {1}: P 1, R 1/2, F1 2/3.  {2} vs {0,2,3}: P 1/3, R 1, F1 1/2.
  // {1,3} vs {0}: all 0.
  const std::vector<LabelSet> y{{0, 1}, {2}, {1, 3}}, p{{1}, {0, 2, 3}, {0}};
  const auto r = compute_metrics(y, p);
  EXPECT_NEAR(r.avg_precision, (1.0 + 1.0 / 3.0) / 3.0, 1e-15);
  EXPECT_NEAR(r.avg_recall, (0.5 + 1.0) / 3.0, 1e-15);
  EXPECT_NEAR(r.avg_f1, (2.0 / 3.0 + 0.5) / 3.0, 1e-15);
  const auto printed = compute_metrics(y, p, RecallMode::kPrinted);
  EXPECT_EQ(printed.avg_recall, printed.avg_precision);
}

TEST(Metrics, MatchBitmaskEnumeration) {
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const unsigned universe = 1u + static_cast<unsigned>(uniform_index(rng, 6));
    const unsigned full = (1u << universe) - 1u;
    const unsigned yb = 1u + static_cast<unsigned>(uniform_index(rng, full));
    const unsigned pb = 1u + static_cast<unsigned>(uniform_index(rng, full));
    const double hit = std::popcount(yb & pb);
    const double ny = std::popcount(yb), np = std::popcount(pb);
    const std::vector<LabelSet> y{from_bits(yb)}, p{from_bits(pb)};
    const auto r = compute_metrics(y, p);
    EXPECT_EQ(r.avg_precision, hit / np);
    EXPECT_EQ(r.avg_recall, hit / ny);
    EXPECT_EQ(r.avg_f1, 2.0 * hit / (ny + np));
    EXPECT_GE(r.avg_f1, 0.0);
    EXPECT_LE(r.avg_f1, 1.0);
    // F1 is the harmonic mean of precision and recall whenever both are positive.
    if (hit > 0) {
      EXPECT_NEAR(r.avg_f1, 2 * r.avg_precision * r.avg_recall / (r.avg_precision + r.avg_recall), 1e-15);
    }
  }
}

TEST(Metrics, RejectsBadInput) {
  const std::vector<LabelSet> one{{0}}, two{{0}, {1}}, empty{{}};
  EXPECT_THROW(compute_metrics(one, two), DimensionError);
  EXPECT_THROW(compute_metrics(one, empty), DataError);
  EXPECT_THROW(compute_metrics(std::vector<LabelSet>{}, std::vector<LabelSet>{}), DataError);
}

TEST(Metrics, CsvHeader) {
  std::ostringstream out;
  write_metrics_csv(out, MetricsReport{0.5, 0.25, 0.75, 4});
  EXPECT_EQ(out.str(), "avg_precision,avg_recall,avg_f1,n\n0.5,0.25,0.75,4\n");
}

std::vector<SequenceRepresentation> reps_of(const std::vector<Vec>& xs) {
  std::vector<SequenceRepresentation> out;
  for (std::size_t i = 0; i < xs.size(); ++i) out.push_back({"s" + std::to_string(i), xs[i]});
  return out;
}

TEST(Mlp, LearnsSeparableToySet) {
  Rng rng(4);
  std::vector<Vec> xs, ys;
  for (int i = 0; i < 80; ++i) {
    const double a = uniform01(rng), b = uniform01(rng);
    if (std::abs(a - b) < 0.1) continue;
    xs.push_back({a, b});
    ys.push_back(a > b ? Vec{1, 0} : Vec{0, 1});
  }
  const auto reps = reps_of(xs);
  MlpConfig c;
  Rng train_rng(5);
  const auto r = train_mlp(reps, ys, c, train_rng);
  ASSERT_EQ(r.losses.size(), 200u);
  EXPECT_LT(r.losses.back(), 0.1);
}

TEST(Mlp, SameSeedSameWeightsAndSingleLabelSpace) {
  const auto reps = reps_of({{0.1, 0.9}, {0.8, 0.3}, {0.5, 0.5}});
  const std::vector<Vec> ys{{1}, {0}, {1}};
  MlpConfig c;
  c.epochs = 20;
  Rng a(6), b(6);
  auto ra = train_mlp(reps, ys, c, a);
  auto rb = train_mlp(reps, ys, c, b);
  EXPECT_EQ(ra.params.w_hidden.values(), rb.params.w_hidden.values());
  EXPECT_EQ(ra.losses, rb.losses);
  EXPECT_EQ(predict(ra.params, reps[0]).size(), 1u);
  EXPECT_THROW(train_mlp(std::vector<SequenceRepresentation>{}, std::vector<Vec>{}, c, a), DataError);
}

SynthSpec tiny_spec() {
  SynthSpec s;
  s.class_count = 3;
  s.motifs_per_class = 5;
  s.sequence_length = 40;
  s.train_count = 60;
  s.val_count = 12;
  s.test_count = 12;
  return s;
}

PipelineConfig tiny_pipeline() {
  PipelineConfig c;
  c.segment.epochs = 2;
  c.segment.segment_size = 30;
  c.segment.model.embedding_dim = 4;
  c.segment.model.hidden_size = 4;
  c.mlp.epochs = 20;
  return c;
}

TEST(ClassifySegments, ShapesAndRange) {
  Rng rng(7);
  ModelConfig mc;
  mc.vocab_size = 10;
  mc.label_count = 3;
  mc.embedding_dim = 3;
  mc.hidden_size = 3;
  SegmentModel model(mc, rng);
  const Segment s{{2, 3, 9}, {0, 0, 0}, {0, 0, 0}, "p"};
  const auto one = classify_segments(model, std::vector<Segment>{s});
  ASSERT_EQ(one.size(), 1u);
  for (double p : one[0]) {
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
  const auto two = classify_segments(model, std::vector<Segment>{s, s});
  EXPECT_EQ(two[0], two[1]);
  EXPECT_THROW(classify_segments(model, std::vector<Segment>{}), DataError);
}

TEST(RunPipeline, SmokeAndDeterminism) {
  Rng gen(8);
  const auto corpus = generate(tiny_spec(), gen);
  auto run = [&] {
    const auto r = run_pipeline(corpus.train, corpus.test, tiny_pipeline());
    std::ostringstream csv;
    write_metrics_csv(csv, r.metrics);
    write_representations_csv(csv, r.test_representations);
    return csv.str();
  };
  const std::string first = run();
  EXPECT_EQ(first, run());
  EXPECT_EQ(first.rfind("avg_precision,avg_recall,avg_f1,n\n", 0), 0u);
}

TEST(RunPipeline, RejectsMismatchedLabelTables) {
  Rng gen(9);
  auto corpus = generate(tiny_spec(), gen);
  corpus.test.label_names.push_back("extra");
  EXPECT_THROW(run_pipeline(corpus.train, corpus.test, tiny_pipeline()), DataError);
}

TEST(RunPipeline, ShortTestSequenceGetsZeroRepresentation) {
  Rng gen(10);
  auto corpus = generate(tiny_spec(), gen);
  corpus.test.sequences[0].residues = "AC";
  const auto r = run_pipeline(corpus.train, corpus.test, tiny_pipeline());
  EXPECT_EQ(r.test_representations[0].values, Vec(3, 0.0));
  EXPECT_FALSE(r.test_predictions[0].empty());
}

TEST(RunPipeline, ScaledAttentionBeatsLastHiddenBaseline) {
  SynthSpec spec;
  spec.class_count = 4;
  spec.train_count = 300;
  spec.val_count = 60;
  spec.test_count = 100;
  Rng gen(11);
  const auto corpus = generate(spec, gen);
  std::vector<double> scaled, baseline;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (auto kind : {AttentionKind::kScaled, AttentionKind::kNone}) {
      PipelineConfig c;
      c.segment.seed = seed;
      c.mlp.seed = seed;
      c.segment.epochs = 4;
      c.segment.model.embedding_dim = 8;
      c.segment.model.hidden_size = 8;
      c.segment.model.attention = kind;
      const auto r = run_pipeline(corpus.train, corpus.test, c, &corpus.validation);
      (kind == AttentionKind::kScaled ? scaled : baseline).push_back(r.metrics.avg_f1);
    }
  }
  EXPECT_GT(median(scaled), median(baseline));
}

}  // namespace
}  // namespace lsan
