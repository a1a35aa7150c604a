#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lsan/tape.hpp"

namespace lsan {

struct LabeledSequence {
  std::string id;
  std::string residues;
  /// Sorted, unique label indices in [0, K).
  std::vector<std::size_t> labels;
};

/// n-mer token table. Index 0 is padding and index 1 is the unknown token;
/// real n-mers start at 2.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnknown = 1;

  explicit Vocabulary(std::size_t ngram = 3);

  /// Every n-mer of every sequence, in first-appearance order.
  static Vocabulary build(std::span<const LabeledSequence> sequences, std::size_t ngram);

  std::size_t ngram() const noexcept { return ngram_; }
  std::size_t size() const noexcept { return tokens_.size(); }

  /// Adds `token` if missing; returns its index either way.
  std::size_t add(std::string_view token);
  std::optional<std::size_t> find(std::string_view token) const;
  /// Index of `token`, or kUnknown.
  std::size_t index_of(std::string_view token) const;
  const std::string& token(std::size_t index) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.ngram_ == b.ngram_ && a.tokens_ == b.tokens_;
  }

 private:
  std::size_t ngram_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Overlapping n-mers at stride 1: length(residues) - n + 1 of them.
std::vector<std::string> tokenize(std::string_view residues, std::size_t n);

struct PaddedTokens {
  std::vector<std::size_t> indices;
  Mask pad_mask;
};

PaddedTokens pad_or_truncate(std::span<const std::string> tokens, std::size_t length, const Vocabulary& vocab);

/// Windows of `segment_size` residues starting every floor(segment_size/2)
/// positions until the sequence end is covered. The last window may be
/// shorter. A sequence no longer than one window yields a single segment.
std::vector<std::string> segment(std::string_view residues, std::size_t segment_size);

/// Number of time steps of a segment: segment_size - n + 1.
std::size_t segment_time_steps(std::size_t segment_size, std::size_t ngram);

struct Segment {
  std::vector<std::size_t> tokens;
  Mask pad_mask;
  /// One-hot over K labels, copied from the parent sequence.
  std::vector<double> labels;
  std::string parent_id;
};

struct SegmentDataset {
  std::vector<Segment> segments;
  std::size_t segment_size = 0;
  std::size_t ngram = 0;
  std::size_t time_steps = 0;
  std::size_t label_count = 0;
  /// Size of the vocabulary the tokens index into.
  std::size_t vocab_size = 0;
  /// Sequences dropped for being shorter than one n-mer.
  std::size_t skipped_sequences = 0;

  std::size_t size() const noexcept { return segments.size(); }
  bool empty() const noexcept { return segments.empty(); }
};

std::vector<double> one_hot(std::span<const std::size_t> labels, std::size_t label_count);

/// Segments, tokenizes and pads every sequence. Sequences shorter than n are
/// skipped with a warning.
SegmentDataset build_segment_dataset(std::span<const LabeledSequence> sequences, std::size_t segment_size,
                                     const Vocabulary& vocab, std::size_t label_count);

/// Segments of one sequence, in order, with an all-zero label vector when
/// the labels are unknown (prediction time).
std::vector<Segment> segment_sequence(const LabeledSequence& sequence, std::size_t segment_size,
                                      const Vocabulary& vocab, std::size_t label_count);

struct Corpus {
  std::vector<LabeledSequence> sequences;
  /// Label names indexed by label id, in first-appearance order.
  std::vector<std::string> label_names;

  std::size_t label_count() const noexcept { return label_names.size(); }
};

struct FastaRecord {
  std::string id;
  std::string residues;
};

std::vector<FastaRecord> read_fasta(std::istream& in);
void write_fasta(std::ostream& out, std::span<const LabeledSequence> sequences);
void write_labels(std::ostream& out, const Corpus& corpus);

/// Joins FASTA records with `id<TAB>name,name,...` label lines. Label names
/// are assigned dense indices in first-appearance order. When `known_labels`
/// is given, indices follow that table and names outside it are an error.
Corpus load_corpus(const std::filesystem::path& fasta_path, const std::filesystem::path& label_path,
                   const std::vector<std::string>* known_labels = nullptr);
Corpus parse_corpus(std::istream& fasta, std::istream& labels, const std::vector<std::string>* known_labels = nullptr);

}  // namespace lsan
