#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "minipath/taxonomy.hpp"

namespace minipath {

// A query term matched against a mini-path. label is 1-based: l <= L means
// the query is a child of the l-th anchor, L + 1 means "not attached here".
struct TrainingInstance {
  TermId query = 0;
  MiniPath path;
  std::size_t label = 0;

  friend bool operator==(const TrainingInstance&, const TrainingInstance&) = default;
  friend auto operator<=>(const TrainingInstance&, const TrainingInstance&) = default;
};

struct SamplerConfig {
  std::size_t path_length = 3;
  std::size_t negative_ratio = 4;
  std::uint64_t seed = 0;
  // 0 keeps every mini-path; otherwise a seeded subsample of this size.
  std::size_t max_paths = 0;
};

std::vector<TrainingInstance> generate_positives(const Taxonomy& t, const std::vector<MiniPath>& paths);

// Terms that may serve as a negative query for `path`: everything except the
// root, the path nodes and the children of path nodes.
std::vector<TermId> negative_pool(const Taxonomy& t, const MiniPath& path);

// Exactly negative_ratio * |positives| instances with label L + 1. Each draw
// picks a path from the positives' path multiset (restricted to paths with a
// non-empty pool), then a query uniformly from that path's pool.
std::vector<TrainingInstance> generate_negatives(const Taxonomy& t, const std::vector<TrainingInstance>& positives,
                                                 const SamplerConfig& cfg);

// Enumerates (and optionally subsamples) mini-paths of cfg.path_length.
std::vector<MiniPath> sample_minipaths(const Taxonomy& t, const SamplerConfig& cfg);

// Positives plus negatives, shuffled under cfg.seed.
std::vector<TrainingInstance> build_training_set(const Taxonomy& t, const SamplerConfig& cfg);

// "query<TAB>p_1,...,p_L<TAB>label" per instance, original surfaces.
void write_training_set(const Taxonomy& t, const std::vector<TrainingInstance>& set, std::ostream& out);

}  // namespace minipath
