#include "minipath/sampling.hpp"

#include <algorithm>
#include <map>
#include <ostream>

#include "minipath/error.hpp"
#include "minipath/random.hpp"

namespace minipath {

std::vector<TrainingInstance> generate_positives(const Taxonomy& t, const std::vector<MiniPath>& paths) {
  std::vector<TrainingInstance> out;
  for (const MiniPath& path : paths) {
    for (std::size_t l = 0; l < path.length(); ++l) {
      for (TermId child : t.children(path.nodes[l])) {
        if (path.contains(child)) continue;
        out.push_back(TrainingInstance{child, path, l + 1});
      }
    }
  }
  return out;
}

std::vector<TermId> negative_pool(const Taxonomy& t, const MiniPath& path) {
  std::vector<bool> excluded(t.size(), false);
  excluded[t.root()] = true;
  for (TermId node : path.nodes) {
    excluded[node] = true;
    for (TermId c : t.children(node)) excluded[c] = true;
  }
  std::vector<TermId> pool;
  for (TermId i = 0; i < t.size(); ++i) {
    if (!excluded[i]) pool.push_back(i);
  }
  return pool;
}

std::vector<TrainingInstance> generate_negatives(const Taxonomy& t, const std::vector<TrainingInstance>& positives,
                                                 const SamplerConfig& cfg) {
  if (positives.empty()) throw InputError("negative sampling needs at least one positive instance");
  if (cfg.negative_ratio == 0) throw InputError("negative ratio must be at least 1");

  std::map<MiniPath, std::vector<TermId>> pools;
  std::vector<const MiniPath*> draws;  // path multiset, eligible entries only
  for (const TrainingInstance& pos : positives) {
    auto it = pools.find(pos.path);
    if (it == pools.end()) it = pools.emplace(pos.path, negative_pool(t, pos.path)).first;
    if (!it->second.empty()) draws.push_back(&it->first);
  }
  if (draws.empty()) throw InputError("taxonomy too small for negative sampling");

  Rng rng(derive_seed(cfg.seed, "negatives"));
  const std::size_t label = positives.front().path.length() + 1;
  std::vector<TrainingInstance> out;
  out.reserve(positives.size() * cfg.negative_ratio);
  for (std::size_t i = 0; i < positives.size() * cfg.negative_ratio; ++i) {
    const MiniPath& path = *draws[uniform_index(rng, draws.size())];
    const auto& pool = pools.at(path);
    out.push_back(TrainingInstance{pool[uniform_index(rng, pool.size())], path, label});
  }
  return out;
}

std::vector<MiniPath> sample_minipaths(const Taxonomy& t, const SamplerConfig& cfg) {
  auto paths = enumerate_minipaths(t, cfg.path_length);
  if (cfg.max_paths != 0 && paths.size() > cfg.max_paths) {
    Rng rng(derive_seed(cfg.seed, "minipaths"));
    shuffle(paths, rng);
    paths.resize(cfg.max_paths);
    std::sort(paths.begin(), paths.end());
  }
  return paths;
}

std::vector<TrainingInstance> build_training_set(const Taxonomy& t, const SamplerConfig& cfg) {
  auto paths = sample_minipaths(t, cfg);
  auto set = generate_positives(t, paths);
  if (set.empty()) throw InputError("no positive training instances: taxonomy too shallow for the mini-path length");
  auto negatives = generate_negatives(t, set, cfg);
  set.insert(set.end(), negatives.begin(), negatives.end());
  Rng rng(derive_seed(cfg.seed, "training-set"));
  shuffle(set, rng);
  return set;
}

void write_training_set(const Taxonomy& t, const std::vector<TrainingInstance>& set, std::ostream& out) {
  for (const auto& inst : set) {
    out << t.term(inst.query).surface << '\t';
    for (std::size_t i = 0; i < inst.path.length(); ++i) {
      out << (i ? "," : "") << t.term(inst.path.nodes[i]).surface;
    }
    out << '\t' << inst.label << '\n';
  }
}

}  // namespace minipath
