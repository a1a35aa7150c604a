#include "lsan/commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>

#include "lsan/checkpoint.hpp"
#include "lsan/error.hpp"

namespace lsan {
namespace {

namespace fs = std::filesystem;

const fs::path& require_file(const fs::path& path, const char* key) {
  if (path.empty()) throw ConfigError(key, "required by this command");
  if (!fs::is_regular_file(path)) throw ConfigError(key, "no such file '" + path.string() + "'");
  return path;
}

std::ofstream open_output(const RunConfig& config, const char* name) {
  const fs::path path = config.output_dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

void prepare(const RunConfig& config) {
  config.validate();
  fs::create_directories(config.output_dir);
  auto out = open_output(config, "resolved.cfg");
  write_run_config(out, config);
}

Corpus train_corpus(const RunConfig& c, const std::vector<std::string>* known = nullptr) {
  return load_corpus(require_file(c.train_fasta, "train_fasta"), require_file(c.train_labels, "train_labels"), known);
}

Corpus test_corpus(const RunConfig& c, const std::vector<std::string>& known) {
  return load_corpus(require_file(c.test_fasta, "test_fasta"), require_file(c.test_labels, "test_labels"), &known);
}

std::vector<LabeledSequence> unlabelled_input(const RunConfig& c) {
  std::ifstream in(require_file(c.input_fasta, "input_fasta"));
  std::vector<LabeledSequence> out;
  for (auto& r : read_fasta(in)) out.push_back({std::move(r.id), std::move(r.residues), {}});
  return out;
}

RestoredSegmentModel restore_checked(const RunConfig& c) {
  RestoredSegmentModel r = restore_segment_model(load_checkpoint(require_file(c.checkpoint, "checkpoint")));
  const TrainConfig& trained = r.config.pipeline.segment;
  if (c.is_explicit("ngram") && c.pipeline.segment.ngram != trained.ngram) {
    throw ConfigError("ngram", "checkpoint was trained with ngram = " + std::to_string(trained.ngram));
  }
  if (c.is_explicit("segment_size") && c.pipeline.segment.segment_size != trained.segment_size) {
    throw ConfigError("segment_size",
                      "checkpoint was trained with segment_size = " + std::to_string(trained.segment_size));
  }
  return r;
}

RestoredMlp restore_mlp_for(const RunConfig& c, const RestoredSegmentModel& segment) {
  RestoredMlp mlp = restore_mlp(load_checkpoint(require_file(c.mlp_checkpoint, "mlp_checkpoint")));
  if (mlp.label_names != segment.label_names) {
    throw ConfigError("mlp_checkpoint", "label table differs from the segment model checkpoint");
  }
  return mlp;
}

std::vector<SequenceRepresentation> represent(RestoredSegmentModel& r, std::span<const LabeledSequence> seqs) {
  return represent_sequences(r.model, seqs, r.config.pipeline.segment.segment_size, r.vocab);
}

void write_predictions(std::ostream& out, std::span<const SequenceRepresentation> reps,
                       std::span<const LabelSet> predictions, const std::vector<std::string>& label_names) {
  for (std::size_t i = 0; i < reps.size(); ++i) {
    out << reps[i].id << '\t';
    for (std::size_t j = 0; j < predictions[i].size(); ++j) out << (j ? "," : "") << label_names[predictions[i][j]];
    out << '\n';
  }
}

void write_mlp_losses(std::ostream& out, std::span<const double> losses) {
  out << "epoch,loss\n" << std::setprecision(17);
  for (std::size_t e = 0; e < losses.size(); ++e) out << e + 1 << ',' << losses[e] << '\n';
}

void write_metrics(const RunConfig& config, const MetricsReport& m) {
  auto text = open_output(config, "metrics.txt");
  write_metrics_text(text, m);
  auto csv = open_output(config, "metrics.csv");
  write_metrics_csv(csv, m);
}

std::vector<std::vector<double>> targets_of(const Corpus& corpus) {
  std::vector<std::vector<double>> out;
  for (const auto& s : corpus.sequences) out.push_back(one_hot(s.labels, corpus.label_count()));
  return out;
}

}  // namespace

void cmd_train_segments(const RunConfig& config) {
  prepare(config);
  const Corpus train = train_corpus(config);
  const TrainConfig& tc = config.pipeline.segment;
  const Vocabulary vocab = Vocabulary::build(train.sequences, tc.ngram);
  const SegmentDataset data = build_segment_dataset(train.sequences, tc.segment_size, vocab, train.label_count());
  SegmentDataset val_data;
  if (!config.val_fasta.empty()) {
    const Corpus val = load_corpus(require_file(config.val_fasta, "val_fasta"),
                                   require_file(config.val_labels, "val_labels"), &train.label_names);
    val_data = build_segment_dataset(val.sequences, tc.segment_size, vocab, train.label_count());
  }
  Rng rng(tc.seed);
  TrainResult result = train_segment_model(data, tc, rng, config.val_fasta.empty() ? nullptr : &val_data);
  save_checkpoint(config.output_dir / "model.ckpt",
                  make_segment_checkpoint(config, vocab, train.label_names, result.model));
  auto curve = open_output(config, "loss_curve.csv");
  result.curve.write_csv(curve);
}

void cmd_embed(const RunConfig& config) {
  prepare(config);
  const auto input = unlabelled_input(config);
  RestoredSegmentModel restored = restore_checked(config);
  const auto reps = represent(restored, input);
  auto out = open_output(config, "representations.csv");
  write_representations_csv(out, reps);
}

void cmd_train_mlp(const RunConfig& config) {
  prepare(config);
  RestoredSegmentModel restored = restore_checked(config);
  const Corpus train = train_corpus(config, &restored.label_names);
  const auto reps = represent(restored, train.sequences);
  Rng rng(config.pipeline.mlp.seed);
  MlpTrainResult mlp = train_mlp(reps, targets_of(train), config.pipeline.mlp, rng);
  save_checkpoint(config.output_dir / "mlp.ckpt", make_mlp_checkpoint(config, restored.label_names, mlp.params));
  auto losses = open_output(config, "mlp_loss.csv");
  write_mlp_losses(losses, mlp.losses);
  auto out = open_output(config, "train_representations.csv");
  write_representations_csv(out, reps);
}

void cmd_evaluate(const RunConfig& config) {
  prepare(config);
  RestoredSegmentModel restored = restore_checked(config);
  RestoredMlp mlp = restore_mlp_for(config, restored);
  const Corpus test = test_corpus(config, restored.label_names);
  const auto reps = represent(restored, test.sequences);
  std::vector<LabelSet> truth, predicted;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    truth.push_back(test.sequences[i].labels);
    predicted.push_back(predict(mlp.params, reps[i], config.pipeline.threshold));
  }
  write_metrics(config, compute_metrics(truth, predicted, config.pipeline.recall));
  auto out = open_output(config, "predictions.tsv");
  write_predictions(out, reps, predicted, restored.label_names);
}

void cmd_predict(const RunConfig& config) {
  prepare(config);
  const auto input = unlabelled_input(config);
  RestoredSegmentModel restored = restore_checked(config);
  RestoredMlp mlp = restore_mlp_for(config, restored);
  const auto reps = represent(restored, input);
  std::vector<LabelSet> predicted;
  for (const auto& r : reps) predicted.push_back(predict(mlp.params, r, config.pipeline.threshold));
  auto out = open_output(config, "predictions.tsv");
  write_predictions(out, reps, predicted, restored.label_names);
}

void cmd_compare(const RunConfig& config) {
  prepare(config);
  const auto variants = standard_variants(config.pipeline.segment, config.compare_lambdas);
  const ComparisonReport report = compare_variants(config.synth, variants, config.compare_options());
  auto csv = open_output(config, "comparison.csv");
  report.write_csv(csv);
  auto summary = open_output(config, "comparison_summary.csv");
  report.write_summary_csv(summary);
  auto table = open_output(config, "comparison.txt");
  report.write_summary_table(table);
}

void cmd_pipeline(const RunConfig& config) {
  prepare(config);
  const Corpus train = train_corpus(config);
  const Corpus test = test_corpus(config, train.label_names);
  Corpus val;
  if (!config.val_fasta.empty()) {
    val = load_corpus(require_file(config.val_fasta, "val_fasta"), require_file(config.val_labels, "val_labels"),
                      &train.label_names);
  }
  PipelineResult r = run_pipeline(train, test, config.pipeline, config.val_fasta.empty() ? nullptr : &val);
  save_checkpoint(config.output_dir / "model.ckpt", make_segment_checkpoint(config, r.vocab, r.label_names, r.model));
  save_checkpoint(config.output_dir / "mlp.ckpt", make_mlp_checkpoint(config, r.label_names, r.mlp));
  auto curve = open_output(config, "loss_curve.csv");
  r.curve.write_csv(curve);
  auto losses = open_output(config, "mlp_loss.csv");
  write_mlp_losses(losses, r.mlp_losses);
  auto reps = open_output(config, "representations.csv");
  write_representations_csv(reps, r.test_representations);
  write_metrics(config, r.metrics);
  auto out = open_output(config, "predictions.tsv");
  write_predictions(out, r.test_representations, r.test_predictions, r.label_names);
}

void cmd_generate(const RunConfig& config) {
  prepare(config);
  Rng rng(config.synth.seed);
  const SynthCorpus corpus = generate(config.synth, rng);
  const std::pair<const char*, const Corpus*> splits[] = {
      {"train", &corpus.train}, {"val", &corpus.validation}, {"test", &corpus.test}};
  for (const auto& [name, split] : splits) {
    auto fasta = open_output(config, (std::string(name) + ".fasta").c_str());
    write_fasta(fasta, split->sequences);
    auto labels = open_output(config, (std::string(name) + ".labels").c_str());
    write_labels(labels, *split);
  }
  auto motifs = open_output(config, "motifs.tsv");
  for (std::size_t c = 0; c < corpus.motifs.size(); ++c) {
    motifs << corpus.train.label_names[c] << '\t';
    for (std::size_t j = 0; j < corpus.motifs[c].size(); ++j) motifs << (j ? "," : "") << corpus.motifs[c][j];
    motifs << '\n';
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const std::vector<std::pair<std::string, std::function<void(const RunConfig&)>>> commands{
      {"train-segments", cmd_train_segments},
      {"embed", cmd_embed},
      {"train-mlp", cmd_train_mlp},
      {"evaluate", cmd_evaluate},
      {"predict", cmd_predict},
      {"compare", cmd_compare},
      {"pipeline", cmd_pipeline},
      {"generate", cmd_generate},
  };
  const std::map<std::string, std::string> help{
      {"train-segments", "Train the segment classifier"},
      {"embed", "Write global sequence representations"},
      {"train-mlp", "Train the second-stage MLP on representations"},
      {"evaluate", "Score a labelled test corpus"},
      {"predict", "Predict labels for unlabelled sequences"},
      {"compare", "Run the synthetic attention-variant comparison"},
      {"pipeline", "Run both stages end to end"},
      {"generate", "Write a synthetic planted-motif corpus"},
  };

  CLI::App app("Segment-level recurrent attention classifier for multi-label sequence data", "lsan_cli");
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  app.add_option("--config", config_path, "Run configuration file (key = value lines)")->required();
  app.add_option("--seed", seed, "Override the seed key");
  app.add_option("--out", out_dir, "Override the output_dir key");
  for (const auto& [name, fn] : commands) app.add_subcommand(name, help.at(name))->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig config = load_run_config(config_path);
    if (seed) config.set("seed", std::to_string(*seed));
    if (out_dir) config.set("output_dir", *out_dir);
    for (const auto& [name, fn] : commands) {
      if (app.got_subcommand(name)) fn(config);
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace lsan
