#include "lsan/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "lsan/error.hpp"

namespace lsan {
namespace {

constexpr std::string_view kAlphabet = "ACDEFGHIKLMNPQRSTVWYBJOUXZ";

std::string random_word(std::size_t length, std::size_t alphabet, Rng& rng) {
  std::string w(length, 'A');
  for (char& c : w) c = kAlphabet[uniform_index(rng, alphabet)];
  return w;
}

std::string id_for(const std::string& split, std::size_t i) {
  std::ostringstream os;
  os << split << '_' << std::setw(5) << std::setfill('0') << i;
  return os.str();
}

}  // namespace

void SynthSpec::validate() const {
  if (alphabet_size < 2 || alphabet_size > kAlphabet.size()) {
    throw ConfigError("synth_alphabet_size", "must lie in [2, " + std::to_string(kAlphabet.size()) + "]");
  }
  if (class_count < 2) throw ConfigError("synth_classes", "must be at least 2");
  if (motifs_per_class == 0) throw ConfigError("synth_motifs_per_class", "must be at least 1");
  if (motif_length == 0) throw ConfigError("synth_motif_length", "must be at least 1");
  if (sequence_length == 0) throw ConfigError("synth_sequence_length", "must be at least 1");
  if (motifs_per_class * motif_length > sequence_length) {
    throw ConfigError("synth_motifs_per_class", "motif words do not fit in the sequence length");
  }
  if (train_count == 0 || val_count == 0 || test_count == 0) {
    throw ConfigError("synth_train_count", "train, validation and test counts must be positive");
  }
  if (!(multi_label_probability >= 0.0 && multi_label_probability <= 1.0)) {
    throw ConfigError("synth_multilabel_probability", "must lie in [0, 1]");
  }
  const double words = std::pow(static_cast<double>(alphabet_size), static_cast<double>(motif_length));
  if (words < static_cast<double>(class_count * motifs_per_class)) {
    throw ConfigError("synth_motifs_per_class", "an alphabet of " + std::to_string(alphabet_size) +
                                                   " cannot supply " + std::to_string(class_count * motifs_per_class) +
                                                   " disjoint motif words of length " + std::to_string(motif_length));
  }
}

SynthCorpus generate(const SynthSpec& spec, Rng& rng) {
  spec.validate();
  SynthCorpus out;
  std::set<std::string> used;
  out.motifs.resize(spec.class_count);
  for (auto& words : out.motifs) {
    while (words.size() < spec.motifs_per_class) {
      std::string w = random_word(spec.motif_length, spec.alphabet_size, rng);
      if (used.insert(w).second) words.push_back(std::move(w));
    }
  }
  std::vector<std::string> names;
  for (std::size_t c = 0; c < spec.class_count; ++c) names.push_back("class_" + std::to_string(c));

  auto make_split = [&](const std::string& split, std::size_t count) {
    Corpus corpus;
    corpus.label_names = names;
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t primary = i % spec.class_count;
      std::vector<std::string> words;
      std::vector<std::size_t> labels{primary};
      if (bernoulli(rng, spec.multi_label_probability)) {
        std::size_t second = static_cast<std::size_t>(uniform_index(rng, spec.class_count - 1));
        if (second >= primary) ++second;
        labels.push_back(second);
        const std::size_t take_first = (spec.motifs_per_class + 1) / 2;
        const std::size_t take_second = spec.motifs_per_class - take_first;
        for (std::size_t c : {primary, second}) {
          std::vector<std::string> pool = out.motifs[c];
          shuffle(std::span<std::string>(pool), rng);
          const std::size_t take = c == primary ? take_first : take_second;
          words.insert(words.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
        }
        std::sort(labels.begin(), labels.end());
      } else {
        words = out.motifs[primary];
      }
      // Interleave motif words with single noise residues in random order.
      const std::size_t noise = spec.sequence_length - words.size() * spec.motif_length;
      std::vector<std::string> pieces = std::move(words);
      for (std::size_t n = 0; n < noise; ++n) pieces.push_back(random_word(1, spec.alphabet_size, rng));
      shuffle(std::span<std::string>(pieces), rng);
      std::string residues;
      residues.reserve(spec.sequence_length);
      for (const auto& p : pieces) residues += p;
      corpus.sequences.push_back({id_for(split, i), std::move(residues), std::move(labels)});
    }
    // Shuffle so classes are not in lock-step order.
    shuffle(std::span<LabeledSequence>(corpus.sequences), rng);
    return corpus;
  };
  out.train = make_split("train", spec.train_count);
  out.validation = make_split("val", spec.val_count);
  out.test = make_split("test", spec.test_count);
  return out;
}

std::size_t epochs_to_plateau(const LossCurve& curve, double fraction) {
  if (curve.epochs.empty()) throw DataError("epochs_to_plateau: empty curve");
  const double target = fraction * curve.epochs.back().val_f1;
  for (const auto& e : curve.epochs) {
    if (e.val_f1 >= target) return e.epoch;
  }
  return curve.epochs.back().epoch;
}

std::vector<Variant> standard_variants(const TrainConfig& base, std::span<const double> lambdas) {
  std::vector<Variant> out;
  TrainConfig none = base;
  none.model.attention = AttentionKind::kNone;
  out.push_back({"Base.", none});
  TrainConfig standard = base;
  standard.model.attention = AttentionKind::kStandard;
  out.push_back({"Base.+Attn.", standard});
  for (double lambda : lambdas) {
    TrainConfig scaled = base;
    scaled.model.attention = AttentionKind::kScaled;
    scaled.model.lambda = lambda;
    std::ostringstream name;
    name << "lambda=" << std::fixed << std::setprecision(1) << lambda;
    out.push_back({name.str(), scaled});
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double VariantSummary::median_test_f1() const {
  std::vector<double> v;
  for (const auto& r : runs) v.push_back(r.test_f1);
  return median(std::move(v));
}

double VariantSummary::median_epochs_to_plateau() const {
  std::vector<double> v;
  for (const auto& r : runs) v.push_back(static_cast<double>(r.epochs_to_plateau));
  return median(std::move(v));
}

double VariantSummary::median_gap_at_plateau() const {
  std::vector<double> v;
  for (const auto& r : runs) v.push_back(r.gap_at_plateau());
  return median(std::move(v));
}

const VariantSummary& ComparisonReport::find(const std::string& name) const {
  for (const auto& v : variants) {
    if (v.name == name) return v;
  }
  throw std::out_of_range("no variant named '" + name + "'");
}

void ComparisonReport::write_csv(std::ostream& out) const {
  out << "variant,seed,test_f1,final_val_f1,epochs_to_plateau,train_loss_at_plateau,val_loss_at_plateau,gap_at_plateau\n";
  out << std::setprecision(17);
  for (const auto& v : variants) {
    for (const auto& r : v.runs) {
      out << v.name << ',' << r.seed << ',' << r.test_f1 << ',' << r.final_val_f1 << ',' << r.epochs_to_plateau << ','
          << r.train_loss_at_plateau << ',' << r.val_loss_at_plateau << ',' << r.gap_at_plateau() << '\n';
    }
  }
}

void ComparisonReport::write_summary_csv(std::ostream& out) const {
  out << "variant,runs,median_test_f1,median_epochs_to_plateau,median_gap_at_plateau\n";
  out << std::setprecision(17);
  for (const auto& v : variants) {
    out << v.name << ',' << v.runs.size() << ',' << v.median_test_f1() << ',' << v.median_epochs_to_plateau() << ','
        << v.median_gap_at_plateau() << '\n';
  }
}

void ComparisonReport::write_summary_table(std::ostream& out) const {
  constexpr int kWidth = 13;
  auto header = [&](const char* title) {
    out << title << '\n';
    out << std::left << std::setw(10) << "Seg. size";
    for (const auto& v : variants) out << std::right << std::setw(kWidth) << v.name;
    out << '\n';
  };
  auto row = [&](auto value, int precision) {
    out << std::left << std::setw(10) << segment_size << std::right << std::fixed << std::setprecision(precision);
    for (const auto& v : variants) out << std::setw(kWidth) << value(v);
    out << std::defaultfloat << "\n\n";
  };
  header("Test F1 (x100, median over seeds)");
  row([](const VariantSummary& v) { return 100.0 * v.median_test_f1(); }, 2);
  header("Epochs to plateau (median over seeds)");
  row([](const VariantSummary& v) { return v.median_epochs_to_plateau(); }, 1);
  header("|Validation - training loss| at plateau (median over seeds)");
  row([](const VariantSummary& v) { return v.median_gap_at_plateau(); }, 4);
}

ComparisonReport compare_variants(const SynthSpec& spec, std::span<const Variant> variants,
                                  const CompareOptions& options) {
  Rng rng(spec.seed);
  return compare_variants(generate(spec, rng), variants, options);
}

ComparisonReport compare_variants(const SynthCorpus& corpus, std::span<const Variant> variants,
                                  const CompareOptions& options) {
  if (variants.empty()) throw ConfigError("compare_variants", "at least one variant is required");
  if (options.seeds.empty()) throw ConfigError("compare_seeds", "at least one seed is required");
  for (const auto& v : variants) v.config.validate();

  ComparisonReport report;
  report.segment_size = variants[0].config.segment_size;
  report.variants.resize(variants.size());
  for (std::size_t i = 0; i < variants.size(); ++i) {
    report.variants[i].name = variants[i].name;
    report.variants[i].runs.resize(options.seeds.size());
  }

  const std::size_t total = variants.size() * options.seeds.size();
  auto run_one = [&](std::size_t task) {
    const std::size_t vi = task / options.seeds.size();
    const std::size_t si = task % options.seeds.size();
    PipelineConfig pc;
    pc.segment = variants[vi].config;
    pc.segment.seed = options.seeds[si];
    pc.mlp = options.mlp;
    pc.mlp.seed = options.seeds[si];
    pc.threshold = options.threshold;
    PipelineResult res = run_pipeline(corpus.train, corpus.test, pc, &corpus.validation);

    RunResult& r = report.variants[vi].runs[si];
    r.seed = options.seeds[si];
    r.test_f1 = res.metrics.avg_f1;
    r.final_val_f1 = res.curve.epochs.back().val_f1;
    r.epochs_to_plateau = epochs_to_plateau(res.curve, options.plateau_fraction);
    const EpochStats& at = res.curve.epochs[r.epochs_to_plateau - 1];
    r.train_loss_at_plateau = at.train_loss;
    r.val_loss_at_plateau = at.val_loss;
    r.curve = std::move(res.curve);
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, total));
  if (jobs == 1) {
    for (std::size_t t = 0; t < total; ++t) run_one(t);
    return report;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t t = next++; t < total; t = next++) {
        try {
          run_one(t);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
  return report;
}

}  // namespace lsan
