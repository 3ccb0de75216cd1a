#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "minipath/context.hpp"
#include "minipath/embedding.hpp"
#include "minipath/lexsyn.hpp"
#include "minipath/model.hpp"
#include "minipath/random.hpp"
#include "minipath/sampling.hpp"
#include "minipath/taxonomy.hpp"

namespace minipath::testing {

using EdgeRows = std::vector<std::pair<std::string, std::string>>;

// Chain n0 -> n1 -> ... -> n{n-1}.
EdgeRows chain_rows(std::size_t n);
// Tree on t0..t{n-1}; node i > 0 gets a parent drawn uniformly from [0, i).
EdgeRows random_tree_rows(Rng& rng, std::size_t n);

// Number of length-L node sequences over the n named nodes in which every
// consecutive pair is a row. Tries all n^L sequences.
std::size_t brute_force_minipath_count(const EdgeRows& rows, std::size_t length);

// Empty when the instance is valid for the taxonomy, else a reason.
std::string instance_violation(const Taxonomy& t, const TrainingInstance& inst);

// Longest common contiguous substring by checking every pair of start
// offsets.
std::size_t lcs_oracle(const std::string& x, const std::string& y);

// Small fully-populated data set: every view sees real input.
struct MicroData {
  Taxonomy taxonomy;
  EmbeddingTable embeddings;
  DepPathStore dep_paths;
  PairFrequencyTable frequencies;

  FeatureSources sources() const { return {taxonomy, embeddings, dep_paths, frequencies, 3}; }
};

MicroData micro_data();
// L = 2 and every dimension <= 8.
ModelDims micro_dims(const MicroData& data);
// Three instances over micro_data(), one per label kind.
std::vector<TrainingInstance> micro_instances(const Taxonomy& t);

// Three-level tree with held-out leaves whose parents are recoverable from
// the frequency features alone.
struct SeparableData {
  EdgeRows seed_rows;
  std::vector<std::pair<std::string, std::string>> held_out;  // (query, parent)
  std::vector<std::string> embedding_lines;
  std::vector<std::string> frequency_lines;
  std::vector<std::string> dep_path_lines;
};

SeparableData separable_data(std::uint64_t seed);

// Writes taxonomy.tsv, embeddings.tsv, frequencies.tsv, dep_paths.tsv,
// test.tsv and config.ini (data section only plus any extra lines) into dir.
void write_separable_files(const SeparableData& data, const std::filesystem::path& dir,
                           const std::string& extra_config = "");

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

std::string read_file(const std::filesystem::path& path);

}  // namespace minipath::testing
