#include "lsan/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "lsan/error.hpp"

namespace lsan {
namespace {

constexpr const char* kMagic = "lsan-checkpoint";

void put_le(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (char& b : bytes) {
    b = static_cast<char>(bits & 0xffu);
    bits >>= 8;
  }
  out.write(bytes, 8);
}

double get_le(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[i];
  return std::bit_cast<double>(bits);
}

class HeaderReader {
 public:
  explicit HeaderReader(std::istream& in) : in_(in) {}

  std::string line() {
    std::string s;
    if (!std::getline(in_, s)) throw DataError("checkpoint: truncated header");
    return s;
  }

  // "<tag> <rest>"; returns rest.
  std::string tagged(const std::string& tag) {
    const std::string s = line();
    if (s.rfind(tag + " ", 0) != 0) throw DataError("checkpoint: expected '" + tag + "', got '" + s + "'");
    return s.substr(tag.size() + 1);
  }

  std::size_t count(const std::string& tag) {
    const std::string rest = tagged(tag);
    try {
      std::size_t used = 0;
      const auto n = std::stoull(rest, &used);
      if (used != rest.size()) throw std::invalid_argument(rest);
      return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
      throw DataError("checkpoint: bad count for '" + tag + "': '" + rest + "'");
    }
  }

  std::vector<std::string> lines(const std::string& tag) {
    std::vector<std::string> out(count(tag));
    for (auto& s : out) s = line();
    return out;
  }

 private:
  std::istream& in_;
};

RunConfig config_of(const Checkpoint& c) {
  std::istringstream in(c.config_text);
  RunConfig config = parse_run_config(in);
  config.validate();
  return config;
}

void copy_tensors(const Checkpoint& c, const NamedParams& params) {
  if (c.tensors.size() != params.size()) {
    throw DataError("checkpoint: holds " + std::to_string(c.tensors.size()) + " tensors, model expects " +
                    std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, target] = params[i];
    const NamedTensor& source = c.tensors[i];
    if (source.name != name) throw DataError("checkpoint: expected tensor '" + name + "', found '" + source.name + "'");
    if (source.tensor.shape() != target->shape()) {
      throw DataError("checkpoint: tensor '" + name + "' has shape " + shape_string(source.tensor.shape()) +
                      ", model expects " + shape_string(target->shape()));
    }
    std::copy(source.tensor.data().begin(), source.tensor.data().end(), target->data().begin());
  }
}

std::vector<NamedTensor> snapshot(const NamedParams& params) {
  std::vector<NamedTensor> out;
  for (const auto& [name, t] : params) out.push_back({name, t->detached()});
  return out;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& c) {
  out << kMagic << ' ' << Checkpoint::kFormatVersion << '\n';
  out << "kind " << c.kind << '\n';
  out << "seed " << c.seed << '\n';
  std::vector<std::string> config_lines;
  {
    std::istringstream in(c.config_text);
    for (std::string s; std::getline(in, s);) config_lines.push_back(s);
  }
  out << "config " << config_lines.size() << '\n';
  for (const auto& s : config_lines) out << s << '\n';
  out << "ngram " << c.ngram << '\n';
  out << "vocabulary " << c.vocabulary.size() << '\n';
  for (const auto& t : c.vocabulary) out << t << '\n';
  out << "labels " << c.label_names.size() << '\n';
  for (const auto& l : c.label_names) out << l << '\n';
  out << "tensors " << c.tensors.size() << '\n';
  std::size_t values = 0;
  for (const auto& [name, t] : c.tensors) {
    out << name << ' ' << t.rank();
    for (std::size_t d : t.shape()) out << ' ' << d;
    out << '\n';
    values += t.size();
  }
  out << "data " << values * 8 << '\n';
  for (const auto& nt : c.tensors)
    for (double v : nt.tensor.data()) put_le(out, v);
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  HeaderReader r(in);
  Checkpoint c;
  const std::string version = r.tagged(kMagic);
  if (version != std::to_string(Checkpoint::kFormatVersion)) {
    throw DataError("checkpoint: unsupported format version " + version);
  }
  c.kind = r.tagged("kind");
  c.seed = r.count("seed");
  for (const auto& s : r.lines("config")) c.config_text += s + '\n';
  c.ngram = r.count("ngram");
  c.vocabulary = r.lines("vocabulary");
  c.label_names = r.lines("labels");
  const std::size_t tensor_count = r.count("tensors");
  std::vector<Shape> shapes;
  for (std::size_t i = 0; i < tensor_count; ++i) {
    std::istringstream entry(r.line());
    std::string name;
    std::size_t rank = 0;
    if (!(entry >> name >> rank)) throw DataError("checkpoint: bad tensor entry " + std::to_string(i));
    Shape shape(rank);
    for (auto& d : shape)
      if (!(entry >> d)) throw DataError("checkpoint: bad shape for tensor '" + name + "'");
    c.tensors.push_back({name, {}});
    shapes.push_back(shape);
  }
  const std::size_t bytes = r.count("data");
  std::vector<unsigned char> blob(bytes);
  in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) throw DataError("checkpoint: truncated tensor data");
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("checkpoint: trailing bytes after tensor data");
  std::size_t offset = 0;
  for (std::size_t i = 0; i < tensor_count; ++i) {
    Tensor t(shapes[i]);
    if (offset + t.size() * 8 > bytes) throw DataError("checkpoint: tensor data shorter than the directory");
    for (double& v : t.data()) {
      v = get_le(blob.data() + offset);
      offset += 8;
    }
    c.tensors[i].tensor = std::move(t);
  }
  if (offset != bytes) throw DataError("checkpoint: tensor data longer than the directory");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  write_checkpoint(out, checkpoint);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in);
}

Checkpoint make_segment_checkpoint(const RunConfig& config, const Vocabulary& vocab,
                                   const std::vector<std::string>& label_names, SegmentModel& model) {
  Checkpoint c;
  c.kind = "segment";
  c.config_text = run_config_text(config);
  c.seed = config.pipeline.segment.seed;
  c.ngram = vocab.ngram();
  for (std::size_t i = 2; i < vocab.size(); ++i) c.vocabulary.push_back(vocab.token(i));
  c.label_names = label_names;
  c.tensors = snapshot(model.parameters());
  return c;
}

RestoredSegmentModel restore_segment_model(const Checkpoint& c) {
  if (c.kind != "segment") throw DataError("checkpoint: expected a segment model, got '" + c.kind + "'");
  RunConfig config = config_of(c);
  Vocabulary vocab(c.ngram);
  for (const auto& t : c.vocabulary) vocab.add(t);
  ModelConfig mc = config.pipeline.segment.model;
  mc.vocab_size = vocab.size();
  mc.label_count = c.label_names.size();
  Rng rng(c.seed);
  SegmentModel model(mc, rng);
  copy_tensors(c, model.parameters());
  return {std::move(config), std::move(vocab), c.label_names, std::move(model)};
}

Checkpoint make_mlp_checkpoint(const RunConfig& config, const std::vector<std::string>& label_names, MlpParams& mlp) {
  Checkpoint c;
  c.kind = "mlp";
  c.config_text = run_config_text(config);
  c.seed = config.pipeline.mlp.seed;
  c.label_names = label_names;
  c.tensors = snapshot(mlp.parameters());
  return c;
}

RestoredMlp restore_mlp(const Checkpoint& c) {
  if (c.kind != "mlp") throw DataError("checkpoint: expected an MLP, got '" + c.kind + "'");
  if (c.tensors.size() != 4) throw DataError("checkpoint: an MLP has 4 tensors");
  RunConfig config = config_of(c);
  const Shape& w_hidden = c.tensors[0].tensor.shape();
  const Shape& w_out = c.tensors[2].tensor.shape();
  if (w_hidden.size() != 2 || w_out.size() != 2) throw DataError("checkpoint: MLP weights must be matrices");
  Rng rng(c.seed);
  MlpParams params = MlpParams::init(w_hidden[1], w_hidden[0], w_out[0], rng);
  copy_tensors(c, params.parameters());
  if (params.outputs() != c.label_names.size()) throw DataError("checkpoint: MLP outputs do not match its label table");
  return {std::move(config), c.label_names, std::move(params)};
}

}  // namespace lsan
