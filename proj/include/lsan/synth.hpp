#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lsan/pipeline.hpp"
#include "lsan/random.hpp"
#include "lsan/seqdata.hpp"
#include "lsan/train.hpp"

namespace lsan {

/// Planted-motif corpus: every class owns a disjoint set of motif words
/// (short residue strings) and each of its sequences scatters all of them
/// among uniform noise residues, so many words per sequence matter at once.
struct SynthSpec {
  std::size_t alphabet_size = 20;
  std::size_t sequence_length = 100;
  std::size_t class_count = 8;
  std::size_t motifs_per_class = 15;
  /// Residues per motif word.
  std::size_t motif_length = 3;
  std::size_t train_count = 2000;
  std::size_t val_count = 500;
  std::size_t test_count = 500;
  /// Chance that a sequence carries a second class, blending half of each
  /// class's motifs.
  double multi_label_probability = 0.2;
  std::uint64_t seed = 7;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct SynthCorpus {
  Corpus train;
  Corpus validation;
  Corpus test;
  /// motifs[c] are the words planted for class c.
  std::vector<std::vector<std::string>> motifs;
};

/// Deterministic for a fixed spec and rng state. Primary classes are
/// assigned round-robin so each split is balanced within one sequence.
SynthCorpus generate(const SynthSpec& spec, Rng& rng);

/// First epoch (1-based) whose validation F1 reaches `fraction` of the last
/// epoch's validation F1.
std::size_t epochs_to_plateau(const LossCurve& curve, double fraction = 0.95);

struct Variant {
  std::string name;
  TrainConfig config;
};

/// The column set of the published comparison tables: the last-hidden
/// baseline, the softmax-attention baseline, and one scaled variant per
/// lambda, all sharing `base` otherwise.
std::vector<Variant> standard_variants(const TrainConfig& base, std::span<const double> lambdas);

struct RunResult {
  std::uint64_t seed = 0;
  double test_f1 = 0.0;
  double final_val_f1 = 0.0;
  std::size_t epochs_to_plateau = 0;
  double train_loss_at_plateau = 0.0;
  double val_loss_at_plateau = 0.0;
  LossCurve curve;

  /// Magnitude of the validation/training loss difference.
  double gap_at_plateau() const { return std::abs(val_loss_at_plateau - train_loss_at_plateau); }
};

struct VariantSummary {
  std::string name;
  std::vector<RunResult> runs;

  double median_test_f1() const;
  double median_epochs_to_plateau() const;
  double median_gap_at_plateau() const;
};

struct ComparisonReport {
  std::size_t segment_size = 0;
  std::vector<VariantSummary> variants;

  const VariantSummary& find(const std::string& name) const;
  /// One row per run.
  void write_csv(std::ostream& out) const;
  /// One row per variant with the medians.
  void write_summary_csv(std::ostream& out) const;
  /// Plain-text tables laid out like the published comparison: variants as
  /// columns, F1 / convergence / loss gap as rows.
  void write_summary_table(std::ostream& out) const;
};

struct CompareOptions {
  std::vector<std::uint64_t> seeds{1};
  double plateau_fraction = 0.95;
  MlpConfig mlp;
  double threshold = 0.5;
  /// Worker threads; runs share nothing, and results are merged in
  /// (variant, seed) order regardless of completion order.
  std::size_t jobs = 1;
};

double median(std::vector<double> values);

/// Trains every variant with every seed on one generated corpus and
/// collects curves, plateau epochs and pipeline-level test F1.
ComparisonReport compare_variants(const SynthSpec& spec, std::span<const Variant> variants,
                                  const CompareOptions& options);
ComparisonReport compare_variants(const SynthCorpus& corpus, std::span<const Variant> variants,
                                  const CompareOptions& options);

}  // namespace lsan
