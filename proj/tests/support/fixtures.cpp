#include "support/fixtures.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace minipath::testing {

EdgeRows chain_rows(std::size_t n) {
  EdgeRows rows;
  for (std::size_t i = 1; i < n; ++i) rows.emplace_back(fmt::format("n{}", i - 1), fmt::format("n{}", i));
  return rows;
}

EdgeRows random_tree_rows(Rng& rng, std::size_t n) {
  EdgeRows rows;
  for (std::size_t i = 1; i < n; ++i) {
    rows.emplace_back(fmt::format("t{}", uniform_index(rng, i)), fmt::format("t{}", i));
  }
  return rows;
}

std::size_t brute_force_minipath_count(const EdgeRows& rows, std::size_t length) {
  std::map<std::string, std::size_t> ids;
  for (const auto& [p, c] : rows) {
    ids.emplace(p, ids.size());
    ids.emplace(c, ids.size());
  }
  const std::size_t n = std::max<std::size_t>(ids.size(), 1);
  std::vector<char> edge(n * n, 0);
  for (const auto& [p, c] : rows) edge[ids[p] * n + ids[c]] = 1;

  std::vector<std::size_t> seq(length, 0);
  std::size_t count = 0;
  while (true) {
    bool ok = true;
    for (std::size_t i = 0; i + 1 < length && ok; ++i) ok = edge[seq[i] * n + seq[i + 1]] != 0;
    if (ok) ++count;
    std::size_t k = 0;
    while (k < length && ++seq[k] == n) seq[k++] = 0;
    if (k == length) break;
  }
  return count;
}

std::string instance_violation(const Taxonomy& t, const TrainingInstance& inst) {
  const std::vector<TermId>& nodes = inst.path.nodes;
  const std::size_t L = nodes.size();
  if (L == 0) return "empty path";
  for (std::size_t i = 0; i + 1 < L; ++i) {
    if (!t.is_edge(nodes[i], nodes[i + 1])) return "path is not an edge chain";
  }
  if (inst.label < 1 || inst.label > L + 1) return "label out of range";
  if (inst.label <= L) {
    if (!t.is_edge(nodes[inst.label - 1], inst.query)) return "query is not a child of the labelled anchor";
    return "";
  }
  if (inst.query == t.root()) return "negative query is the root";
  for (TermId n : nodes) {
    if (n == inst.query) return "negative query lies on the path";
    if (t.is_edge(n, inst.query)) return "negative query is a child of a path node";
  }
  return "";
}

std::size_t lcs_oracle(const std::string& x, const std::string& y) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) {
      std::size_t k = 0;
      while (i + k < x.size() && j + k < y.size() && x[i + k] == y[j + k]) ++k;
      best = std::max(best, k);
    }
  }
  return best;
}

MicroData micro_data() {
  Taxonomy t = Taxonomy::from_edges({{"root", "alpha"}, {"root", "beta"}, {"alpha", "gamma"}, {"alpha", "delta"},
                                     {"beta", "epsilon"}});
  EmbeddingTable emb(4);
  Rng rng(7);
  for (const char* term : {"root", "alpha", "beta", "gamma", "delta", "epsilon"}) {
    std::vector<double> v(4);
    for (double& x : v) x = uniform_real(rng, -1.0, 1.0);
    emb.insert(term, v);
  }
  std::istringstream deps(
      "gamma\talpha\tbe|VB|cop|<;kind|NN|nsubj|>\n"
      "gamma\talpha\tsuch|JJ|amod|>\n"
      "gamma\troot\tinclude|VB|dobj|<;be|VB|cop|>;as|IN|case|<\n"
      "epsilon\tbeta\tkind|NN|nmod|>\n"
      "epsilon\troot\tsuch|JJ|amod|<;include|VB|dobj|>\n");
  DepPathStore store = DepPathStore::load(deps, "micro");
  PairFrequencyTable freq;
  freq.add("alpha", "gamma", 3);
  freq.add("alpha", "delta", 1);
  freq.add("beta", "epsilon", 2);
  freq.add("gamma", "alpha", 1);
  return {std::move(t), std::move(emb), std::move(store), std::move(freq)};
}

ModelDims micro_dims(const MicroData& data) {
  ContextDims c;
  c.lemma_dim = 3;
  c.pos_dim = 2;
  c.dep_dim = 2;
  c.dir_dim = 1;
  c.hidden = 4;
  c.attention = 3;
  return infer_dims(data.sources(), 2, 3, c, 5);
}

std::vector<TrainingInstance> micro_instances(const Taxonomy& t) {
  auto id = [&](const char* s) { return *t.find(s); };
  return {
      {id("gamma"), {{id("root"), id("alpha")}}, 2},
      {id("epsilon"), {{id("root"), id("beta")}}, 2},
      {id("gamma"), {{id("root"), id("beta")}}, 3},
  };
}

SeparableData separable_data(std::uint64_t seed) {
  constexpr std::size_t kMids = 5;
  constexpr std::size_t kLeaves = 7;  // per mid, one of them held out
  constexpr std::size_t kDim = 8;
  Rng rng(seed);
  SeparableData d;
  std::vector<std::pair<std::string, std::string>> all_edges;
  for (std::size_t m = 0; m < kMids; ++m) {
    const std::string mid = fmt::format("group{}", m);
    all_edges.emplace_back("thing", mid);
    for (std::size_t k = 0; k < kLeaves; ++k) {
      const std::string leaf = fmt::format("item{}x{}", m, k);
      all_edges.emplace_back(mid, leaf);
      if (k + 1 == kLeaves) {
        d.held_out.emplace_back(leaf, mid);
      } else {
        d.seed_rows.emplace_back(mid, leaf);
      }
    }
  }
  EdgeRows seed_rows;
  for (std::size_t m = 0; m < kMids; ++m) seed_rows.emplace_back("thing", fmt::format("group{}", m));
  seed_rows.insert(seed_rows.end(), d.seed_rows.begin(), d.seed_rows.end());
  d.seed_rows = std::move(seed_rows);

  std::set<std::string> terms{"thing"};
  for (const auto& [p, c] : all_edges) {
    terms.insert(c);
    d.frequency_lines.push_back(fmt::format("{}\t{}\t5", p, c));
  }
  for (const std::string& term : terms) {
    std::string line = term + "\t";
    for (std::size_t i = 0; i < kDim; ++i) line += fmt::format("{}{:.6f}", i ? " " : "", uniform_real(rng, -1, 1));
    d.embedding_lines.push_back(line);
  }
  // A few co-occurrence paths so the context encoder runs; they carry no
  // label signal.
  for (std::size_t m = 0; m < kMids; ++m) {
    d.dep_path_lines.push_back(fmt::format("item{}x0\tgroup{}\tsuch|JJ|amod|<;as|IN|case|>", m, m));
    d.dep_path_lines.push_back(fmt::format("item{}x1\tthing\tinclude|VB|dobj|>", m));
  }
  return d;
}

namespace {
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const std::string& l : lines) out << l << '\n';
}
}  // namespace

void write_separable_files(const SeparableData& data, const std::filesystem::path& dir,
                           const std::string& extra_config) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> rows;
  for (const auto& [p, c] : data.seed_rows) rows.push_back(p + "\t" + c);
  write_lines(dir / "taxonomy.tsv", rows);
  write_lines(dir / "embeddings.tsv", data.embedding_lines);
  write_lines(dir / "frequencies.tsv", data.frequency_lines);
  write_lines(dir / "dep_paths.tsv", data.dep_path_lines);
  std::vector<std::string> tests;
  for (const auto& [q, p] : data.held_out) tests.push_back(q + "\t" + p);
  write_lines(dir / "test.tsv", tests);
  std::ofstream cfg(dir / "config.ini");
  cfg << "[data]\ntaxonomy = taxonomy.tsv\nembeddings = embeddings.tsv\nfrequencies = frequencies.tsv\n"
         "dep_paths = dep_paths.tsv\ntest = test.tsv\n"
      << extra_config;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("minipath-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace minipath::testing
