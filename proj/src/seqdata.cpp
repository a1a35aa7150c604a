#include "lsan/seqdata.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "lsan/error.hpp"
#include "lsan/log.hpp"

namespace lsan {

Vocabulary::Vocabulary(std::size_t ngram) : ngram_(ngram) {
  if (ngram == 0) throw std::invalid_argument("n-mer size must be at least 1");
  tokens_ = {"<pad>", "<unk>"};
}

Vocabulary Vocabulary::build(std::span<const LabeledSequence> sequences, std::size_t ngram) {
  Vocabulary vocab(ngram);
  for (const auto& seq : sequences) {
    if (seq.residues.size() < ngram) continue;
    for (std::size_t i = 0; i + ngram <= seq.residues.size(); ++i) {
      vocab.add(std::string_view(seq.residues).substr(i, ngram));
    }
  }
  return vocab;
}

std::size_t Vocabulary::add(std::string_view token) {
  if (token.size() != ngram_) {
    throw std::invalid_argument("token '" + std::string(token) + "' is not a " + std::to_string(ngram_) + "-mer");
  }
  auto [it, inserted] = index_.try_emplace(std::string(token), tokens_.size());
  if (inserted) tokens_.emplace_back(token);
  return it->second;
}

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::index_of(std::string_view token) const { return find(token).value_or(kUnknown); }

const std::string& Vocabulary::token(std::size_t index) const {
  if (index >= tokens_.size()) throw std::out_of_range("vocabulary index " + std::to_string(index) + " out of range");
  return tokens_[index];
}

std::vector<std::string> tokenize(std::string_view residues, std::size_t n) {
  if (n == 0) throw std::invalid_argument("tokenize: n must be at least 1");
  if (residues.size() < n) {
    throw DataError("tokenize: sequence of length " + std::to_string(residues.size()) + " is shorter than n=" +
                    std::to_string(n));
  }
  std::vector<std::string> out;
  out.reserve(residues.size() - n + 1);
  for (std::size_t i = 0; i + n <= residues.size(); ++i) out.emplace_back(residues.substr(i, n));
  return out;
}

PaddedTokens pad_or_truncate(std::span<const std::string> tokens, std::size_t length, const Vocabulary& vocab) {
  if (length == 0) throw std::invalid_argument("pad_or_truncate: length must be at least 1");
  PaddedTokens out;
  out.indices.assign(length, Vocabulary::kPad);
  out.pad_mask.assign(length, 1);
  const std::size_t kept = std::min(tokens.size(), length);
  for (std::size_t t = 0; t < kept; ++t) {
    out.indices[t] = vocab.index_of(tokens[t]);
    out.pad_mask[t] = 0;
  }
  return out;
}

std::vector<std::string> segment(std::string_view residues, std::size_t segment_size) {
  if (segment_size < 2) throw std::invalid_argument("segment: segment_size must be at least 2");
  if (residues.empty()) throw DataError("segment: empty sequence");
  const std::size_t stride = segment_size / 2;
  std::vector<std::string> out;
  std::size_t start = 0;
  out.emplace_back(residues.substr(0, segment_size));
  while (start + segment_size < residues.size()) {
    start += stride;
    out.emplace_back(residues.substr(start, segment_size));
  }
  return out;
}

std::size_t segment_time_steps(std::size_t segment_size, std::size_t ngram) {
  if (ngram == 0 || segment_size < ngram) {
    throw std::invalid_argument("segment_size " + std::to_string(segment_size) + " leaves no room for " +
                                std::to_string(ngram) + "-mers");
  }
  return segment_size - ngram + 1;
}

std::vector<double> one_hot(std::span<const std::size_t> labels, std::size_t label_count) {
  std::vector<double> out(label_count, 0.0);
  for (std::size_t k : labels) {
    if (k >= label_count) {
      throw DimensionError("label index " + std::to_string(k) + " out of range for " + std::to_string(label_count) +
                           " labels");
    }
    out[k] = 1.0;
  }
  return out;
}

std::vector<Segment> segment_sequence(const LabeledSequence& sequence, std::size_t segment_size,
                                      const Vocabulary& vocab, std::size_t label_count) {
  const std::size_t n = vocab.ngram();
  const std::size_t steps = segment_time_steps(segment_size, n);
  const std::vector<double> labels = one_hot(sequence.labels, label_count);
  std::vector<Segment> out;
  for (const std::string& piece : segment(sequence.residues, segment_size)) {
    Segment seg;
    if (piece.size() >= n) {
      const auto tokens = tokenize(piece, n);
      auto padded = pad_or_truncate(tokens, steps, vocab);
      seg.tokens = std::move(padded.indices);
      seg.pad_mask = std::move(padded.pad_mask);
    } else {
      // Only reachable when the trailing window is shorter than one n-mer.
      continue;
    }
    seg.labels = labels;
    seg.parent_id = sequence.id;
    out.push_back(std::move(seg));
  }
  return out;
}

SegmentDataset build_segment_dataset(std::span<const LabeledSequence> sequences, std::size_t segment_size,
                                     const Vocabulary& vocab, std::size_t label_count) {
  SegmentDataset ds;
  ds.segment_size = segment_size;
  ds.ngram = vocab.ngram();
  ds.time_steps = segment_time_steps(segment_size, vocab.ngram());
  ds.label_count = label_count;
  ds.vocab_size = vocab.size();
  for (const auto& seq : sequences) {
    if (seq.residues.size() < vocab.ngram()) {
      log_warning("skipping sequence '" + seq.id + "': length " + std::to_string(seq.residues.size()) +
                  " is shorter than n=" + std::to_string(vocab.ngram()));
      ++ds.skipped_sequences;
      continue;
    }
    auto segs = segment_sequence(seq, segment_size, vocab, label_count);
    std::move(segs.begin(), segs.end(), std::back_inserter(ds.segments));
  }
  return ds;
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::vector<FastaRecord> read_fasta(std::istream& in) {
  std::vector<FastaRecord> records;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  auto finish = [&] {
    if (!records.empty() && records.back().residues.empty()) {
      throw DataError("malformed FASTA: record '" + records.back().id + "' has no sequence");
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '>') {
      finish();
      std::istringstream header(line.substr(1));
      std::string id;
      header >> id;
      if (id.empty()) throw DataError("malformed FASTA: empty header at line " + std::to_string(line_no));
      if (!seen.insert(id).second) throw DataError("duplicate FASTA id '" + id + "'");
      records.push_back({id, {}});
      continue;
    }
    if (records.empty()) {
      throw DataError("malformed FASTA: sequence data before the first header at line " + std::to_string(line_no));
    }
    for (char c : line) {
      if (std::isspace(static_cast<unsigned char>(c))) continue;
      if (!std::isalpha(static_cast<unsigned char>(c)) && c != '*' && c != '-') {
        throw DataError("malformed FASTA: unexpected character '" + std::string(1, c) + "' at line " +
                        std::to_string(line_no));
      }
      records.back().residues.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
  }
  finish();
  return records;
}

void write_fasta(std::ostream& out, std::span<const LabeledSequence> sequences) {
  for (const auto& s : sequences) {
    out << '>' << s.id << '\n';
    for (std::size_t i = 0; i < s.residues.size(); i += 60) out << s.residues.substr(i, 60) << '\n';
  }
}

void write_labels(std::ostream& out, const Corpus& corpus) {
  for (const auto& s : corpus.sequences) {
    out << s.id << '\t';
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
      if (i) out << ',';
      out << corpus.label_names.at(s.labels[i]);
    }
    out << '\n';
  }
}

Corpus parse_corpus(std::istream& fasta, std::istream& labels, const std::vector<std::string>* known_labels) {
  auto records = read_fasta(fasta);
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < records.size(); ++i) position.emplace(records[i].id, i);

  Corpus corpus;
  std::unordered_map<std::string, std::size_t> label_index;
  if (known_labels) {
    corpus.label_names = *known_labels;
    for (std::size_t k = 0; k < known_labels->size(); ++k) label_index.emplace((*known_labels)[k], k);
  }
  std::vector<std::optional<std::set<std::size_t>>> assigned(records.size());

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(labels, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("malformed label file: line " + std::to_string(line_no) + " has no tab separator");
    }
    const std::string id = trim(std::string_view(line).substr(0, tab));
    auto it = position.find(id);
    if (it == position.end()) throw DataError("label file references unknown id '" + id + "'");
    if (assigned[it->second]) throw DataError("duplicate label line for id '" + id + "'");
    std::set<std::size_t> set;
    std::stringstream names(line.substr(tab + 1));
    std::string name;
    while (std::getline(names, name, ',')) {
      name = trim(name);
      if (name.empty()) continue;
      auto found = label_index.find(name);
      if (found == label_index.end()) {
        if (known_labels) throw DataError("label '" + name + "' for id '" + id + "' is not in the model's label table");
        found = label_index.emplace(name, corpus.label_names.size()).first;
        corpus.label_names.push_back(name);
      }
      set.insert(found->second);
    }
    assigned[it->second] = std::move(set);
  }

  corpus.sequences.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!assigned[i] || assigned[i]->empty()) throw DataError("sequence '" + records[i].id + "' has no labels");
    corpus.sequences.push_back(
        {std::move(records[i].id), std::move(records[i].residues), {assigned[i]->begin(), assigned[i]->end()}});
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& fasta_path, const std::filesystem::path& label_path,
                   const std::vector<std::string>* known_labels) {
  std::ifstream fasta(fasta_path);
  if (!fasta) throw DataError("cannot open FASTA file " + fasta_path.string());
  std::ifstream labels(label_path);
  if (!labels) throw DataError("cannot open label file " + label_path.string());
  return parse_corpus(fasta, labels, known_labels);
}

}  // namespace lsan
