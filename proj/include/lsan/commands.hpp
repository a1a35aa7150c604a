#pragma once

#include <iosfwd>

#include "lsan/config.hpp"

namespace lsan {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Every command validates the config, creates `output_dir` and writes the
/// resolved config there as `resolved.cfg` before doing any work.

/// train_fasta/train_labels (+ optional val_*) -> model.ckpt, loss_curve.csv.
void cmd_train_segments(const RunConfig& config);
/// checkpoint + input_fasta -> representations.csv.
void cmd_embed(const RunConfig& config);
/// checkpoint + train corpus -> mlp.ckpt, mlp_loss.csv, train_representations.csv.
void cmd_train_mlp(const RunConfig& config);
/// checkpoint + mlp_checkpoint + test corpus -> metrics.txt, metrics.csv, predictions.tsv.
void cmd_evaluate(const RunConfig& config);
/// checkpoint + mlp_checkpoint + input_fasta -> predictions.tsv.
void cmd_predict(const RunConfig& config);
/// Synthetic variant comparison -> comparison.csv, comparison_summary.csv, comparison.txt.
void cmd_compare(const RunConfig& config);
/// Both stages end to end on train/test corpora.
void cmd_pipeline(const RunConfig& config);
/// Writes a synthetic corpus as FASTA and label files plus motifs.tsv.
void cmd_generate(const RunConfig& config);

/// `lsan_cli <command> --config PATH [--seed N] [--out DIR]`. Returns the
/// process exit code: 0 success, 1 runtime failure, 2 configuration error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lsan
