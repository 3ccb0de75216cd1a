#include "cli/run_config.hpp"

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "minipath/checkpoint.hpp"
#include "minipath/error.hpp"
#include "minipath/random.hpp"

namespace minipath::cli {

namespace pt = boost::property_tree;

ContextDims FeatureSettings::context_dims() const {
  ContextDims c;
  c.lemma_dim = lemma_dim;
  c.pos_dim = pos_dim;
  c.dep_dim = dep_dim;
  c.dir_dim = dir_dim;
  c.hidden = lstm_hidden;
  c.attention = attention_dim;
  return c;
}

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"run", {"seed"}},
      {"data", {"taxonomy", "embeddings", "dep_paths", "frequencies", "test", "queries"}},
      {"sampler", {"path_length", "negative_ratio", "max_paths"}},
      {"train",
       {"learning_rate", "epochs", "dropout", "weight_decay", "lambda", "mu", "batch_size", "adam_beta1", "adam_beta2",
        "adam_epsilon"}},
      {"features",
       {"propagated_dim", "classifier_hidden", "lemma_dim", "pos_dim", "dep_dim", "dir_dim", "lstm_hidden",
        "attention_dim", "max_dep_path_length", "suffix_k", "oov_policy"}},
      {"infer", {"top_k"}},
      {"output", {"dir"}},
  };
  return keys;
}

class Section {
 public:
  Section(const pt::ptree* tree, std::string name, const std::string& source)
      : tree_(tree), name_(std::move(name)), source_(source) {}

  template <typename T>
  void read(const char* key, T& out) const {
    if (!tree_) return;
    auto v = tree_->get_optional<std::string>(key);
    if (!v) return;
    try {
      out = tree_->get<T>(key);
    } catch (const pt::ptree_bad_data&) {
      throw InputError(fmt::format("{}: [{}] {} = '{}' is not a valid value", source_, name_, key, *v));
    }
    if constexpr (std::is_unsigned_v<T>) {
      if (!v->empty() && v->front() == '-') {
        throw InputError(fmt::format("{}: [{}] {} must be non-negative", source_, name_, key));
      }
    }
  }

  void read_path(const char* key, std::string& out, const std::string& base_dir) const {
    read(key, out);
    if (!out.empty() && std::filesystem::path(out).is_relative() && !base_dir.empty()) {
      out = (std::filesystem::path(base_dir) / out).lexically_normal().string();
    }
  }

 private:
  const pt::ptree* tree_;
  std::string name_;
  const std::string& source_;
};

}  // namespace

RunConfig parse_run_config(std::istream& in, const std::string& base_dir, const std::string& source_name) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError(fmt::format("{}:{}: {}", source_name, e.line(), e.message()));
  }
  for (const auto& [section, body] : tree) {
    auto it = schema().find(section);
    if (it == schema().end()) throw InputError(fmt::format("{}: unknown section [{}]", source_name, section));
    if (!body.data().empty()) throw InputError(fmt::format("{}: key '{}' outside any section", source_name, section));
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) {
        throw InputError(fmt::format("{}: unknown key '{}' in [{}]", source_name, key, section));
      }
    }
  }
  auto section = [&](const char* name) { return Section(tree.get_child_optional(name).get_ptr(), name, source_name); };

  RunConfig cfg;
  std::uint64_t seed = 0;
  section("run").read("seed", seed);

  Section data = section("data");
  data.read_path("taxonomy", cfg.data.taxonomy, base_dir);
  data.read_path("embeddings", cfg.data.embeddings, base_dir);
  data.read_path("dep_paths", cfg.data.dep_paths, base_dir);
  data.read_path("frequencies", cfg.data.frequencies, base_dir);
  data.read_path("test", cfg.data.test, base_dir);
  data.read_path("queries", cfg.data.queries, base_dir);

  Section sampler = section("sampler");
  sampler.read("path_length", cfg.sampler.path_length);
  sampler.read("negative_ratio", cfg.sampler.negative_ratio);
  sampler.read("max_paths", cfg.sampler.max_paths);

  Section train = section("train");
  train.read("learning_rate", cfg.train.learning_rate);
  train.read("epochs", cfg.train.epochs);
  train.read("dropout", cfg.train.dropout);
  train.read("weight_decay", cfg.train.weight_decay);
  train.read("lambda", cfg.train.lambda);
  train.read("mu", cfg.train.mu);
  train.read("batch_size", cfg.train.batch_size);
  train.read("adam_beta1", cfg.train.adam_beta1);
  train.read("adam_beta2", cfg.train.adam_beta2);
  train.read("adam_epsilon", cfg.train.adam_epsilon);

  Section features = section("features");
  FeatureSettings& f = cfg.features;
  features.read("propagated_dim", f.propagated_dim);
  features.read("classifier_hidden", f.classifier_hidden);
  features.read("lemma_dim", f.lemma_dim);
  features.read("pos_dim", f.pos_dim);
  features.read("dep_dim", f.dep_dim);
  features.read("dir_dim", f.dir_dim);
  features.read("lstm_hidden", f.lstm_hidden);
  features.read("attention_dim", f.attention_dim);
  features.read("max_dep_path_length", f.max_dep_path_length);
  features.read("suffix_k", f.suffix_k);
  std::string oov = std::string(to_string(f.oov_policy));
  features.read("oov_policy", oov);
  f.oov_policy = parse_oov_policy(oov);

  section("infer").read("top_k", cfg.top_k);
  section("output").read_path("dir", cfg.output_dir, base_dir);

  if (cfg.sampler.path_length == 0) throw InputError(fmt::format("{}: [sampler] path_length must be >= 1", source_name));
  if (cfg.sampler.negative_ratio == 0) {
    throw InputError(fmt::format("{}: [sampler] negative_ratio must be >= 1", source_name));
  }
  if (cfg.top_k == 0) throw InputError(fmt::format("{}: [infer] top_k must be >= 1", source_name));
  if (f.suffix_k == 0) throw InputError(fmt::format("{}: [features] suffix_k must be >= 1", source_name));
  for (auto [name, v] : {std::pair{"classifier_hidden", f.classifier_hidden}, {"lemma_dim", f.lemma_dim},
                         {"pos_dim", f.pos_dim}, {"dep_dim", f.dep_dim}, {"dir_dim", f.dir_dim},
                         {"lstm_hidden", f.lstm_hidden}, {"attention_dim", f.attention_dim},
                         {"max_dep_path_length", f.max_dep_path_length}}) {
    if (v == 0) throw InputError(fmt::format("{}: [features] {} must be >= 1", source_name, name));
  }
  cfg.train.validate();
  apply_seed(cfg, seed);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open config file '{}'", path));
  return parse_run_config(in, std::filesystem::path(path).parent_path().string(), path);
}

void apply_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.train.seed = seed;
  cfg.sampler.seed = derive_seed(seed, "sampler");
}

void write_run_config(const RunConfig& c, std::ostream& out) {
  // Reals use shortest round-trip formatting.
  out << "[run]\nseed = " << c.seed << "\n\n";
  out << "[data]\n";
  out << "taxonomy = " << c.data.taxonomy << '\n';
  out << "embeddings = " << c.data.embeddings << '\n';
  out << "dep_paths = " << c.data.dep_paths << '\n';
  out << "frequencies = " << c.data.frequencies << '\n';
  out << "test = " << c.data.test << '\n';
  out << "queries = " << c.data.queries << "\n\n";
  out << "[sampler]\n";
  out << "path_length = " << c.sampler.path_length << '\n';
  out << "negative_ratio = " << c.sampler.negative_ratio << '\n';
  out << "max_paths = " << c.sampler.max_paths << "\n\n";
  out << "[train]\n";
  out << fmt::format("learning_rate = {}\n", c.train.learning_rate);
  out << "epochs = " << c.train.epochs << '\n';
  out << fmt::format("dropout = {}\n", c.train.dropout);
  out << fmt::format("weight_decay = {}\n", c.train.weight_decay);
  out << fmt::format("lambda = {}\n", c.train.lambda);
  out << fmt::format("mu = {}\n", c.train.mu);
  out << "batch_size = " << c.train.batch_size << '\n';
  out << fmt::format("adam_beta1 = {}\n", c.train.adam_beta1);
  out << fmt::format("adam_beta2 = {}\n", c.train.adam_beta2);
  out << fmt::format("adam_epsilon = {}\n\n", c.train.adam_epsilon);
  const FeatureSettings& f = c.features;
  out << "[features]\n";
  out << "propagated_dim = " << f.propagated_dim << '\n';
  out << "classifier_hidden = " << f.classifier_hidden << '\n';
  out << "lemma_dim = " << f.lemma_dim << '\n';
  out << "pos_dim = " << f.pos_dim << '\n';
  out << "dep_dim = " << f.dep_dim << '\n';
  out << "dir_dim = " << f.dir_dim << '\n';
  out << "lstm_hidden = " << f.lstm_hidden << '\n';
  out << "attention_dim = " << f.attention_dim << '\n';
  out << "max_dep_path_length = " << f.max_dep_path_length << '\n';
  out << "suffix_k = " << f.suffix_k << '\n';
  out << "oov_policy = " << to_string(f.oov_policy) << "\n\n";
  out << "[infer]\ntop_k = " << c.top_k << "\n\n";
  out << "[output]\ndir = " << c.output_dir << '\n';
}

}  // namespace minipath::cli
