#include "lsan/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "lsan/error.hpp"

namespace lsan {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = text.find(',');
    out.push_back(trim(text.substr(0, comma)));
    if (comma == std::string_view::npos) return out;
    text.remove_prefix(comma + 1);
  }
}

[[noreturn]] void bad_value(std::string_view key, std::string_view expected, std::string_view value) {
  throw ConfigError(std::string(key), "expected " + std::string(expected) + ", got '" + std::string(value) + "'");
}

void parse_value(std::string_view key, std::string_view text, std::uint64_t& out) {
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (text.empty() || ec != std::errc() || ptr != end) bad_value(key, "a non-negative integer", text);
}

void parse_value(std::string_view key, std::string_view text, double& out) {
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (text.empty() || ec != std::errc() || ptr != end) bad_value(key, "a number", text);
}

void parse_value(std::string_view key, std::string_view text, bool& out) {
  if (text == "true" || text == "1") {
    out = true;
  } else if (text == "false" || text == "0") {
    out = false;
  } else {
    bad_value(key, "true or false", text);
  }
}

void parse_value(std::string_view, std::string_view text, std::filesystem::path& out) { out = std::string(text); }

template <typename T>
void parse_value(std::string_view key, std::string_view text, std::vector<T>& out) {
  std::vector<T> values;
  for (std::string_view item : split_list(text)) parse_value(key, item, values.emplace_back());
  out = std::move(values);
}

template <typename Enum, typename Parse>
void parse_enum(std::string_view key, std::string_view text, Enum& out, Parse parse) {
  try {
    out = parse(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(key), e.what());
  }
}

void parse_value(std::string_view key, std::string_view text, CellKind& out) { parse_enum(key, text, out, parse_cell_kind); }
void parse_value(std::string_view key, std::string_view text, AttentionKind& out) {
  parse_enum(key, text, out, parse_attention_kind);
}
void parse_value(std::string_view key, std::string_view text, AttentionScore& out) {
  parse_enum(key, text, out, parse_attention_score);
}
void parse_value(std::string_view key, std::string_view text, RecallMode& out) {
  parse_enum(key, text, out, parse_recall_mode);
}

std::string format_value(std::uint64_t v) { return std::to_string(v); }
std::string format_value(bool v) { return v ? "true" : "false"; }
std::string format_value(const std::filesystem::path& v) { return v.string(); }
std::string format_value(CellKind v) { return std::string(to_string(v)); }
std::string format_value(AttentionKind v) { return std::string(to_string(v)); }
std::string format_value(AttentionScore v) { return std::string(to_string(v)); }
std::string format_value(RecallMode v) { return std::string(to_string(v)); }

// Shortest text that parses back to the same double.
std::string format_value(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T>
std::string format_value(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format_value(values[i]);
  return out;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

// `ref` maps a config to one of its members. The getter only reads through it.
template <typename Ref>
Field field(std::string key, Ref ref) {
  return {key,
          [key, ref](RunConfig& c, std::string_view v) { parse_value(key, v, ref(c)); },
          [ref](const RunConfig& c) { return format_value(ref(const_cast<RunConfig&>(c))); }};
}

#define LSAN_FIELD(key, member) field(key, [](RunConfig& c) -> auto& { return c.member; })

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"seed",
                 [](RunConfig& c, std::string_view v) {
                   parse_value("seed", v, c.pipeline.segment.seed);
                   c.pipeline.mlp.seed = c.pipeline.segment.seed;
                 },
                 [](const RunConfig& c) { return format_value(c.pipeline.segment.seed); }});
    f.push_back(LSAN_FIELD("output_dir", output_dir));
    f.push_back(LSAN_FIELD("train_fasta", train_fasta));
    f.push_back(LSAN_FIELD("train_labels", train_labels));
    f.push_back(LSAN_FIELD("val_fasta", val_fasta));
    f.push_back(LSAN_FIELD("val_labels", val_labels));
    f.push_back(LSAN_FIELD("test_fasta", test_fasta));
    f.push_back(LSAN_FIELD("test_labels", test_labels));
    f.push_back(LSAN_FIELD("input_fasta", input_fasta));
    f.push_back(LSAN_FIELD("checkpoint", checkpoint));
    f.push_back(LSAN_FIELD("mlp_checkpoint", mlp_checkpoint));

    f.push_back(LSAN_FIELD("segment_size", pipeline.segment.segment_size));
    f.push_back(LSAN_FIELD("ngram", pipeline.segment.ngram));
    f.push_back(LSAN_FIELD("embedding_dim", pipeline.segment.model.embedding_dim));
    f.push_back(LSAN_FIELD("hidden_size", pipeline.segment.model.hidden_size));
    f.push_back(LSAN_FIELD("cell", pipeline.segment.model.cell));
    f.push_back(LSAN_FIELD("attention", pipeline.segment.model.attention));
    f.push_back(LSAN_FIELD("attention_score", pipeline.segment.model.score));
    f.push_back(LSAN_FIELD("attention_context_dim", pipeline.segment.model.context_dim));
    f.push_back(LSAN_FIELD("lambda", pipeline.segment.model.lambda));
    f.push_back(LSAN_FIELD("dropout_embedding", pipeline.segment.model.dropout_embedding));
    f.push_back(LSAN_FIELD("dropout_dense", pipeline.segment.model.dropout_dense));
    f.push_back(LSAN_FIELD("epochs", pipeline.segment.epochs));
    f.push_back(LSAN_FIELD("batch_size", pipeline.segment.batch_size));
    f.push_back(LSAN_FIELD("learning_rate", pipeline.segment.adam.learning_rate));
    f.push_back(LSAN_FIELD("adam_beta1", pipeline.segment.adam.beta1));
    f.push_back(LSAN_FIELD("adam_beta2", pipeline.segment.adam.beta2));
    f.push_back(LSAN_FIELD("adam_epsilon", pipeline.segment.adam.epsilon));
    f.push_back(LSAN_FIELD("validation_fraction", pipeline.segment.validation_fraction));
    f.push_back(LSAN_FIELD("record_timing", pipeline.segment.record_timing));

    f.push_back(LSAN_FIELD("mlp_hidden", pipeline.mlp.hidden));
    f.push_back(LSAN_FIELD("mlp_epochs", pipeline.mlp.epochs));
    f.push_back(LSAN_FIELD("mlp_batch_size", pipeline.mlp.batch_size));
    f.push_back(LSAN_FIELD("mlp_learning_rate", pipeline.mlp.adam.learning_rate));
    f.push_back({"threshold",
                 [](RunConfig& c, std::string_view v) {
                   parse_value("threshold", v, c.pipeline.threshold);
                   c.pipeline.segment.threshold = c.pipeline.threshold;
                 },
                 [](const RunConfig& c) { return format_value(c.pipeline.threshold); }});
    f.push_back(LSAN_FIELD("recall", pipeline.recall));

    f.push_back(LSAN_FIELD("synth_alphabet_size", synth.alphabet_size));
    f.push_back(LSAN_FIELD("synth_sequence_length", synth.sequence_length));
    f.push_back(LSAN_FIELD("synth_classes", synth.class_count));
    f.push_back(LSAN_FIELD("synth_motifs_per_class", synth.motifs_per_class));
    f.push_back(LSAN_FIELD("synth_motif_length", synth.motif_length));
    f.push_back(LSAN_FIELD("synth_train_count", synth.train_count));
    f.push_back(LSAN_FIELD("synth_val_count", synth.val_count));
    f.push_back(LSAN_FIELD("synth_test_count", synth.test_count));
    f.push_back(LSAN_FIELD("synth_multilabel_probability", synth.multi_label_probability));
    f.push_back(LSAN_FIELD("synth_seed", synth.seed));

    f.push_back(LSAN_FIELD("compare_lambdas", compare_lambdas));
    f.push_back(LSAN_FIELD("compare_seeds", compare_seeds));
    f.push_back(LSAN_FIELD("plateau_fraction", plateau_fraction));
    f.push_back(LSAN_FIELD("compare_jobs", compare_jobs));
    return f;
  }();
  return table;
}

#undef LSAN_FIELD

bool is_path_key(std::string_view key) {
  return key == "output_dir" || key == "checkpoint" || key == "mlp_checkpoint" || key.ends_with("_fasta") ||
         key.ends_with("_labels");
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(*this, trim(value));
      explicit_keys.insert(f.key);
      return;
    }
  }
  throw ConfigError(std::string(key), "unknown key");
}

void RunConfig::validate() const {
  pipeline.segment.validate();
  synth.validate();
  if (pipeline.mlp.epochs == 0) throw ConfigError("mlp_epochs", "must be at least 1");
  if (pipeline.mlp.batch_size == 0) throw ConfigError("mlp_batch_size", "must be at least 1");
  if (!(pipeline.mlp.adam.learning_rate > 0.0)) throw ConfigError("mlp_learning_rate", "must be positive");
  if (compare_lambdas.empty()) throw ConfigError("compare_lambdas", "must list at least one value");
  for (double l : compare_lambdas) {
    if (!(l > 0.0 && l <= 1.0)) throw ConfigError("compare_lambdas", "every value must lie in (0, 1]");
  }
  if (compare_seeds.empty()) throw ConfigError("compare_seeds", "must list at least one seed");
  if (!(plateau_fraction > 0.0 && plateau_fraction <= 1.0)) {
    throw ConfigError("plateau_fraction", "must lie in (0, 1]");
  }
  if (compare_jobs == 0) throw ConfigError("compare_jobs", "must be at least 1");
  if (val_fasta.empty() != val_labels.empty()) {
    throw ConfigError(val_fasta.empty() ? "val_fasta" : "val_labels", "val_fasta and val_labels go together");
  }
}

CompareOptions RunConfig::compare_options() const {
  CompareOptions o;
  o.seeds = compare_seeds;
  o.plateau_fraction = plateau_fraction;
  o.mlp = pipeline.mlp;
  o.threshold = pipeline.threshold;
  o.jobs = compare_jobs;
  return o;
}

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir) {
  RunConfig config;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(text), "line " + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string_view key = trim(text.substr(0, eq));
    const std::string_view value = trim(text.substr(eq + 1));
    if (config.is_explicit(std::string(key))) throw ConfigError(std::string(key), "set more than once");
    if (is_path_key(key) && !value.empty() && !base_dir.empty()) {
      const std::filesystem::path p{std::string(value)};
      config.set(key, p.is_absolute() ? p.string() : (base_dir / p).lexically_normal().string());
    } else {
      config.set(key, value);
    }
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path.string() + "'");
  return parse_run_config(in, std::filesystem::absolute(path).parent_path());
}

void write_run_config(std::ostream& out, const RunConfig& config) {
  for (const auto& f : fields()) out << f.key << " = " << f.get(config) << '\n';
}

std::string run_config_text(const RunConfig& config) {
  std::ostringstream out;
  write_run_config(out, config);
  return out.str();
}

}  // namespace lsan
