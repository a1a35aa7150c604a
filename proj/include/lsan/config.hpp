#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lsan/pipeline.hpp"
#include "lsan/synth.hpp"

namespace lsan {

/// Everything a command needs, read from a flat `key = value` file.
/// Every field has a default; `write_run_config` lists all keys with their
/// resolved values, so an echoed file reproduces the run on its own.
struct RunConfig {
  /// Segment training, MLP, decision threshold and recall mode. The
  /// top-level `seed` drives both the segment model and the MLP.
  PipelineConfig pipeline;
  SynthSpec synth;

  std::vector<double> compare_lambdas{1.0, 0.5, 0.1};
  std::vector<std::uint64_t> compare_seeds{1, 2, 3, 4, 5};
  double plateau_fraction = 0.95;
  std::size_t compare_jobs = 1;

  std::filesystem::path train_fasta;
  std::filesystem::path train_labels;
  std::filesystem::path val_fasta;
  std::filesystem::path val_labels;
  std::filesystem::path test_fasta;
  std::filesystem::path test_labels;
  /// Unlabelled sequences for `embed` and `predict`.
  std::filesystem::path input_fasta;
  std::filesystem::path checkpoint;
  std::filesystem::path mlp_checkpoint;
  std::filesystem::path output_dir = "lsan_out";

  /// Keys that were set explicitly rather than left at their default.
  std::set<std::string> explicit_keys;

  /// Parses and applies one value. Throws ConfigError naming `key` for
  /// unknown keys and malformed values.
  void set(std::string_view key, std::string_view value);
  bool is_explicit(const std::string& key) const { return explicit_keys.count(key) > 0; }

  /// Range checks across every field. Throws ConfigError naming the key.
  void validate() const;
  /// CompareOptions assembled from the compare_* keys and the MLP settings.
  CompareOptions compare_options() const;
};

/// Every recognised key, in the order `write_run_config` emits them.
const std::vector<std::string>& run_config_keys();

/// Reads `key = value` lines; `#` starts a comment. Relative paths are
/// resolved against `base_dir`. Does not call validate().
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// One `key = value` line per key, values printed so they parse back to
/// identical settings.
void write_run_config(std::ostream& out, const RunConfig& config);
std::string run_config_text(const RunConfig& config);

}  // namespace lsan
