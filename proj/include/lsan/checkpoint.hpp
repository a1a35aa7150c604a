#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lsan/config.hpp"
#include "lsan/model.hpp"
#include "lsan/pipeline.hpp"
#include "lsan/seqdata.hpp"

namespace lsan {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Single-file container: a plain-text header (version, kind, resolved
/// config, seed, vocabulary, label table, tensor directory) followed by
/// the tensor values as little-endian IEEE-754 float64 in directory order.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  /// "segment" for the segment classifier, "mlp" for the second stage.
  std::string kind;
  std::string config_text;
  std::uint64_t seed = 0;
  std::size_t ngram = 0;
  /// Vocabulary tokens after the two reserved entries, in index order.
  std::vector<std::string> vocabulary;
  std::vector<std::string> label_names;
  std::vector<NamedTensor> tensors;
};

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
/// Throws DataError on a malformed or truncated container.
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint make_segment_checkpoint(const RunConfig& config, const Vocabulary& vocab,
                                   const std::vector<std::string>& label_names, SegmentModel& model);

struct RestoredSegmentModel {
  RunConfig config;
  Vocabulary vocab;
  std::vector<std::string> label_names;
  SegmentModel model;
};

/// Rebuilds the model from the embedded config and copies every tensor in,
/// checking names and shapes.
RestoredSegmentModel restore_segment_model(const Checkpoint& checkpoint);

Checkpoint make_mlp_checkpoint(const RunConfig& config, const std::vector<std::string>& label_names, MlpParams& mlp);

struct RestoredMlp {
  RunConfig config;
  std::vector<std::string> label_names;
  MlpParams params;
};

RestoredMlp restore_mlp(const Checkpoint& checkpoint);

}  // namespace lsan
