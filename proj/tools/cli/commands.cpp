#include "cli/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "minipath/checkpoint.hpp"
#include "minipath/error.hpp"
#include "minipath/inference.hpp"
#include "minipath/model.hpp"
#include "minipath/sampling.hpp"
#include "minipath/taxonomy.hpp"

namespace fs = std::filesystem;

namespace minipath::cli {

namespace {

void require_file(const std::string& path, const char* key) {
  if (path.empty()) throw InputError(fmt::format("missing required setting [data] {}", key));
  if (!fs::is_regular_file(path)) throw InputError(fmt::format("{} file not found: '{}'", key, path));
}

void optional_file(const std::string& path, const char* key) {
  if (!path.empty() && !fs::is_regular_file(path)) throw InputError(fmt::format("{} file not found: '{}'", key, path));
}

fs::path prepare_output(const RunConfig& cfg) {
  fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw InputError(fmt::format("cannot create output directory '{}'", cfg.output_dir));
  }
  std::ofstream echo(dir / "effective_config.ini");
  write_run_config(cfg, echo);
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

// Everything the model-based commands read.
struct LoadedData {
  Taxonomy taxonomy;
  EmbeddingTable embeddings;
  DepPathStore dep_paths;
  PairFrequencyTable frequencies;

  FeatureSources sources(std::size_t suffix_k) const {
    return FeatureSources{taxonomy, embeddings, dep_paths, frequencies, suffix_k};
  }
};

LoadedData load_data(const RunConfig& cfg) {
  require_file(cfg.data.taxonomy, "taxonomy");
  require_file(cfg.data.embeddings, "embeddings");
  optional_file(cfg.data.dep_paths, "dep_paths");
  optional_file(cfg.data.frequencies, "frequencies");
  LoadedData d{Taxonomy::load_file(cfg.data.taxonomy),
               EmbeddingTable::load_file(cfg.data.embeddings, cfg.features.oov_policy),
               cfg.data.dep_paths.empty() ? DepPathStore{}
                                          : DepPathStore::load_file(cfg.data.dep_paths,
                                                                    cfg.features.max_dep_path_length),
               cfg.data.frequencies.empty() ? PairFrequencyTable{}
                                            : PairFrequencyTable::load_file(cfg.data.frequencies)};
  return d;
}

ModelDims expected_dims(const RunConfig& cfg, const FeatureSources& sources) {
  return infer_dims(sources, cfg.sampler.path_length, cfg.features.propagated_dim, cfg.features.context_dims(),
                    cfg.features.classifier_hidden);
}

CoTrainModel load_model(const RunConfig& cfg, const std::string& checkpoint, const FeatureSources& sources) {
  if (!fs::is_regular_file(checkpoint)) throw InputError(fmt::format("checkpoint file not found: '{}'", checkpoint));
  CoTrainModel model = load_checkpoint_file(checkpoint);
  std::string diff = describe_mismatch(expected_dims(cfg, sources), model.dims());
  if (!diff.empty()) {
    throw ShapeError(fmt::format("checkpoint '{}' does not match the configuration: {}", checkpoint, diff));
  }
  return model;
}

std::vector<MiniPath> inference_paths(const RunConfig& cfg, const Taxonomy& t, std::ostream& log) {
  std::vector<MiniPath> paths = enumerate_minipaths(t, cfg.sampler.path_length);
  if (paths.empty()) {
    throw InputError(fmt::format("taxonomy has no mini-paths of length {} (height {})", cfg.sampler.path_length,
                                 t.height()));
  }
  fmt::print(log, "scoring against {} mini-paths of length {}\n", paths.size(), cfg.sampler.path_length);
  return paths;
}

}  // namespace

void cmd_sample_paths(const RunConfig& cfg, std::ostream& log) {
  require_file(cfg.data.taxonomy, "taxonomy");
  Taxonomy t = Taxonomy::load_file(cfg.data.taxonomy);
  fs::path dir = prepare_output(cfg);

  std::vector<MiniPath> paths = sample_minipaths(t, cfg.sampler);
  {
    std::ofstream out = open_output(dir / "minipaths.tsv");
    for (const MiniPath& p : paths) {
      for (std::size_t i = 0; i < p.nodes.size(); ++i) {
        out << (i ? "\t" : "") << t.term(p.nodes[i]).surface;
      }
      out << '\n';
    }
  }
  {
    std::ofstream out = open_output(dir / "minipath_counts.tsv");
    const std::size_t top = std::max<std::size_t>(4, cfg.sampler.path_length);
    for (std::size_t l = 1; l <= top; ++l) {
      out << l << '\t' << enumerate_minipaths(t, l).size() << '\n';
    }
  }
  fmt::print(log, "{} terms, height {}, {} mini-paths of length {}\n", t.size(), t.height(), paths.size(),
             cfg.sampler.path_length);
  if (paths.empty()) return;
  std::vector<TrainingInstance> set;
  try {
    set = build_training_set(t, cfg.sampler);
  } catch (const InputError& e) {
    fmt::print(log, "no training set written: {}\n", e.what());
    return;
  }
  std::ofstream out = open_output(dir / "training_set.tsv");
  write_training_set(t, set, out);
  fmt::print(log, "{} training instances\n", set.size());
}

void cmd_train(const RunConfig& cfg, std::ostream& log) {
  LoadedData data = load_data(cfg);
  FeatureSources sources = data.sources(cfg.features.suffix_k);
  fs::path dir = prepare_output(cfg);

  std::vector<TrainingInstance> set = build_training_set(data.taxonomy, cfg.sampler);
  {
    std::ofstream out = open_output(dir / "training_set.tsv");
    write_training_set(data.taxonomy, set, out);
  }
  ModelDims dims = expected_dims(cfg, sources);
  CoTrainModel model(dims, cfg.train.seed);
  fmt::print(log, "training on {} instances for {} epochs\n", set.size(), cfg.train.epochs);

  std::ofstream trace = open_output(dir / "loss_trace.tsv");
  train(model, sources, set, cfg.train, [&](const EpochLoss& e) {
    const LossValues& l = e.loss;
    fmt::print(trace, "{}\t{:.12g}\t{:.12g}\t{:.12g}\t{:.12g}\n", e.epoch, l.total, l.aggregated, l.per_view,
               l.consistency);
    trace.flush();
    fmt::print(log, "epoch {:>3}  loss {:.6f}\n", e.epoch, l.total);
  });
  save_checkpoint_file(model, (dir / "checkpoint.txt").string());
}

void cmd_expand(const RunConfig& cfg, const std::string& checkpoint, std::ostream& log) {
  LoadedData data = load_data(cfg);
  FeatureSources sources = data.sources(cfg.features.suffix_k);
  std::vector<std::string> queries;
  if (!cfg.data.queries.empty()) {
    require_file(cfg.data.queries, "queries");
    queries = load_vocabulary_file(cfg.data.queries);
  } else {
    require_file(cfg.data.test, "test");
    for (const TestPair& p : load_test_pairs_file(cfg.data.test, data.taxonomy)) queries.push_back(p.query);
  }
  CoTrainModel model = load_model(cfg, checkpoint, sources);
  fs::path dir = prepare_output(cfg);
  std::vector<MiniPath> paths = inference_paths(cfg, data.taxonomy, log);

  ModelScorer scorer(model, sources);
  std::vector<ParentRanking> rankings;
  rankings.reserve(queries.size());
  for (const std::string& q : queries) rankings.push_back(score_parents(scorer, data.taxonomy, paths, q));
  std::ofstream out = open_output(dir / "rankings.tsv");
  write_rankings(rankings, data.taxonomy, cfg.top_k, out);
  fmt::print(log, "ranked {} queries\n", rankings.size());
}

void cmd_eval(const RunConfig& cfg, const std::string& checkpoint, std::ostream& log) {
  LoadedData data = load_data(cfg);
  FeatureSources sources = data.sources(cfg.features.suffix_k);
  require_file(cfg.data.test, "test");
  std::vector<TestPair> tests = load_test_pairs_file(cfg.data.test, data.taxonomy);
  if (tests.empty()) throw InputError(fmt::format("test file '{}' has no pairs", cfg.data.test));
  CoTrainModel model = load_model(cfg, checkpoint, sources);
  fs::path dir = prepare_output(cfg);
  std::vector<MiniPath> paths = inference_paths(cfg, data.taxonomy, log);

  ModelScorer scorer(model, sources);
  EvalReport report = evaluate(scorer, data.taxonomy, paths, tests);
  {
    std::ofstream out = open_output(dir / "report.txt");
    write_report_text(report, data.taxonomy, out);
  }
  {
    std::ofstream out = open_output(dir / "report.kv");
    write_report_kv(report, data.taxonomy, out);
  }
  fmt::print(log, "accuracy {:.4f}  mrr {:.4f}  wu_palmer {:.4f}\n", report.accuracy, report.mrr, report.wu_palmer);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Taxonomy expansion with mini-path anchors", "minipath"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string checkpoint;
  std::optional<std::size_t> top_k;
  app.add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "root random seed (overrides [run] seed)");
  app.add_option("--out", out_dir, "output directory (overrides [output] dir)");

  CLI::App* sample = app.add_subcommand("sample-paths", "enumerate mini-paths and build the training set");
  CLI::App* train_cmd = app.add_subcommand("train", "train the co-training model");
  CLI::App* expand = app.add_subcommand("expand", "rank candidate parents for new terms");
  CLI::App* eval = app.add_subcommand("eval", "evaluate on held-out (query, parent) pairs");
  for (CLI::App* sub : {expand, eval}) {
    sub->add_option("--checkpoint", checkpoint, "model checkpoint (default <out>/checkpoint.txt)");
  }
  expand->add_option("--top-k", top_k, "candidates written per query");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed) apply_seed(cfg, *seed);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (top_k) {
      if (*top_k == 0) throw InputError("--top-k must be >= 1");
      cfg.top_k = *top_k;
    }
    if (checkpoint.empty()) checkpoint = (fs::path(cfg.output_dir) / "checkpoint.txt").string();

    if (sample->parsed()) {
      cmd_sample_paths(cfg, out);
    } else if (train_cmd->parsed()) {
      cmd_train(cfg, out);
    } else if (expand->parsed()) {
      cmd_expand(cfg, checkpoint, out);
    } else {
      cmd_eval(cfg, checkpoint, out);
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace minipath::cli
