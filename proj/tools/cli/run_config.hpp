#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "minipath/context.hpp"
#include "minipath/embedding.hpp"
#include "minipath/model.hpp"
#include "minipath/sampling.hpp"

namespace minipath::cli {

struct DataPaths {
  std::string taxonomy;     // required
  std::string embeddings;   // required for train/expand/eval
  std::string dep_paths;    // optional
  std::string frequencies;  // optional
  std::string test;         // required for eval
  std::string queries;      // candidate terms for expand; falls back to the test file
};

struct FeatureSettings {
  std::size_t propagated_dim = 0;  // 0 = embedding dimension
  std::size_t classifier_hidden = 50;
  std::size_t lemma_dim = 50;
  std::size_t pos_dim = 4;
  std::size_t dep_dim = 5;
  std::size_t dir_dim = 1;
  std::size_t lstm_hidden = 200;
  std::size_t attention_dim = 200;
  std::size_t max_dep_path_length = DepPathStore::kDefaultMaxLength;
  std::size_t suffix_k = 3;
  OovPolicy oov_policy = OovPolicy::kZero;

  ContextDims context_dims() const;
};

struct RunConfig {
  std::uint64_t seed = 0;
  DataPaths data;
  SamplerConfig sampler;
  TrainConfig train;
  FeatureSettings features;
  std::size_t top_k = 10;
  std::string output_dir = "out";
};

// INI file with sections [run], [data], [sampler], [train], [features],
// [infer], [output]. Relative data paths resolve against the config file's
// directory. Unknown sections or keys are errors.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(std::istream& in, const std::string& base_dir, const std::string& source_name);

// Effective configuration with defaults filled in; parses back to the same
// RunConfig.
void write_run_config(const RunConfig& cfg, std::ostream& out);

// Splits the root seed into the per-module seeds.
void apply_seed(RunConfig& cfg, std::uint64_t seed);

}  // namespace minipath::cli
