#include "minipath/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "minipath/error.hpp"
#include "minipath/text.hpp"

namespace minipath {

bool MiniPath::contains(TermId id) const { return std::find(nodes.begin(), nodes.end(), id) != nodes.end(); }

std::optional<std::size_t> MiniPath::position_of(TermId id) const {
  auto it = std::find(nodes.begin(), nodes.end(), id);
  if (it == nodes.end()) return std::nullopt;
  return static_cast<std::size_t>(it - nodes.begin());
}

namespace {

struct Builder {
  std::vector<Term> terms;
  std::unordered_map<std::string, TermId> by_key;

  TermId intern(std::string_view surface) {
    std::string key = normalize_term(surface);
    auto [it, inserted] = by_key.try_emplace(key, static_cast<TermId>(terms.size()));
    if (inserted) terms.push_back(Term{it->second, std::string(trim(surface)), key});
    return it->second;
  }
};

}  // namespace

Taxonomy Taxonomy::from_edges(const std::vector<std::pair<std::string, std::string>>& rows) {
  return build(rows, {}, {});
}

Taxonomy Taxonomy::build(const std::vector<std::pair<std::string, std::string>>& rows,
                         const std::vector<std::size_t>& line_numbers, std::string_view source_name) {
  auto where = [&](std::size_t row) {
    return line_numbers.empty() ? fmt::format("row {}", row + 1)
                                : fmt::format("{}:{}", source_name, line_numbers[row]);
  };
  const std::string prefix = source_name.empty() ? "" : fmt::format("{}: ", source_name);
  Builder b;
  Taxonomy t;
  std::set<std::pair<TermId, TermId>> seen;
  std::vector<std::optional<TermId>> parent;

  for (std::size_t row = 0; row < rows.size(); ++row) {
    const auto& [ps, cs] = rows[row];
    if (normalize_term(ps).empty() || normalize_term(cs).empty()) {
      throw TaxonomyError(TaxonomyErrorKind::kFormat, fmt::format("{}: empty term", where(row)));
    }
    TermId p = b.intern(ps);
    TermId c = b.intern(cs);
    parent.resize(b.terms.size());
    if (!seen.emplace(p, c).second) {
      throw TaxonomyError(TaxonomyErrorKind::kDuplicateEdge,
                          fmt::format("{}: duplicate edge '{}' -> '{}'", where(row), ps, cs));
    }
    if (p == c) {
      t.warnings_.push_back(fmt::format("{}: dropped self-loop on '{}'", where(row), ps));
      continue;
    }
    if (parent[c]) {
      t.warnings_.push_back(fmt::format("{}: dropped second parent '{}' of '{}' (kept '{}')", where(row), ps, cs,
                                        b.terms[*parent[c]].surface));
      continue;
    }
    parent[c] = p;
    t.edges_.push_back(Edge{p, c});
  }
  for (const auto& w : t.warnings_) spdlog::warn("taxonomy: {}", w);

  const std::size_t n = b.terms.size();
  if (n == 0) throw TaxonomyError(TaxonomyErrorKind::kFormat, prefix + "taxonomy has no terms");
  parent.resize(n);

  std::vector<TermId> roots;
  for (TermId i = 0; i < n; ++i) {
    if (!parent[i]) roots.push_back(i);
  }
  if (roots.empty()) throw TaxonomyError(TaxonomyErrorKind::kCycle, prefix + "cycle detected: no term is without a parent");
  if (roots.size() > 1) {
    std::string names;
    for (std::size_t i = 0; i < roots.size() && i < 5; ++i) {
      names += (i ? ", '" : "'") + b.terms[roots[i]].surface + "'";
    }
    throw TaxonomyError(TaxonomyErrorKind::kMultipleRoots,
                        prefix + fmt::format("{} roots found ({}{})", roots.size(), names, roots.size() > 5 ? ", ..." : ""));
  }

  t.terms_ = std::move(b.terms);
  t.by_key_ = std::move(b.by_key);
  t.parent_ = std::move(parent);
  t.root_ = roots.front();
  t.children_.assign(n, {});
  for (const Edge& e : t.edges_) t.children_[e.parent].push_back(e.child);

  // Breadth-first from the root; anything unreached hangs off a cycle.
  t.depth_.assign(n, 0);
  std::vector<TermId> queue{t.root_};
  t.depth_[t.root_] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    TermId u = queue[head];
    t.height_ = std::max(t.height_, t.depth_[u]);
    for (TermId c : t.children_[u]) {
      t.depth_[c] = t.depth_[u] + 1;
      queue.push_back(c);
    }
  }
  if (queue.size() != n) {
    for (TermId i = 0; i < n; ++i) {
      if (t.depth_[i] == 0) {
        throw TaxonomyError(TaxonomyErrorKind::kCycle,
                            prefix + fmt::format("cycle detected through '{}' ({} terms unreachable from root '{}')",
                                        t.terms_[i].surface, n - queue.size(), t.terms_[t.root_].surface));
      }
    }
  }
  return t;
}

Taxonomy Taxonomy::load(std::istream& in, std::string_view source_name) {
  std::vector<std::pair<std::string, std::string>> rows;
  std::vector<std::size_t> lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = chomp(line);
    if (trim(view).empty() || trim(view).front() == '#') continue;
    auto fields = split(view, '\t');
    if (fields.size() != 2 || trim(fields[0]).empty() || trim(fields[1]).empty()) {
      throw TaxonomyError(TaxonomyErrorKind::kFormat,
                          fmt::format("{}:{}: expected 'parent<TAB>child'", source_name, line_no));
    }
    rows.emplace_back(std::string(fields[0]), std::string(fields[1]));
    lines.push_back(line_no);
  }
  return build(rows, lines, source_name);
}

Taxonomy Taxonomy::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open taxonomy file '{}'", path));
  return load(in, path);
}

void Taxonomy::check_id(TermId id) const {
  if (id >= terms_.size()) throw std::out_of_range(fmt::format("unknown term id {}", id));
}

const Term& Taxonomy::term(TermId id) const {
  check_id(id);
  return terms_[id];
}

std::optional<TermId> Taxonomy::find(std::string_view surface) const {
  auto it = by_key_.find(normalize_term(surface));
  if (it == by_key_.end()) return std::nullopt;
  return it->second;
}

std::optional<TermId> Taxonomy::parent(TermId id) const {
  check_id(id);
  return parent_[id];
}

const std::vector<TermId>& Taxonomy::children(TermId id) const {
  check_id(id);
  return children_[id];
}

std::vector<TermId> Taxonomy::ancestors(TermId id) const {
  check_id(id);
  std::vector<TermId> chain;
  for (auto p = parent_[id]; p; p = parent_[*p]) chain.push_back(*p);
  std::reverse(chain.begin(), chain.end());
  return chain;
}

std::size_t Taxonomy::depth(TermId id) const {
  check_id(id);
  return depth_[id];
}

TermId Taxonomy::lca(TermId a, TermId b) const {
  check_id(a);
  check_id(b);
  while (depth_[a] > depth_[b]) a = *parent_[a];
  while (depth_[b] > depth_[a]) b = *parent_[b];
  while (a != b) {
    a = *parent_[a];
    b = *parent_[b];
  }
  return a;
}

bool Taxonomy::is_edge(TermId p, TermId c) const {
  return p < terms_.size() && c < terms_.size() && parent_[c] && *parent_[c] == p;
}

void Taxonomy::write_edges(std::ostream& out) const {
  for (const Edge& e : edges_) out << terms_[e.parent].surface << '\t' << terms_[e.child].surface << '\n';
}

std::vector<MiniPath> enumerate_minipaths(const Taxonomy& t, std::size_t length) {
  std::vector<MiniPath> paths;
  if (length == 0) throw std::invalid_argument("mini-path length must be positive");
  if (length > t.height()) return paths;

  std::vector<TermId> chain;
  chain.reserve(length);
  auto extend = [&](auto&& self, TermId node) -> void {
    chain.push_back(node);
    if (chain.size() == length) {
      paths.push_back(MiniPath{chain});
    } else {
      for (TermId c : t.children(node)) self(self, c);
    }
    chain.pop_back();
  };
  for (TermId start = 0; start < t.size(); ++start) extend(extend, start);
  std::sort(paths.begin(), paths.end());
  return paths;
}

std::vector<std::string> load_vocabulary_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open vocabulary file '{}'", path));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view v = trim(chomp(line));
    if (v.empty() || v.front() == '#') continue;
    out.emplace_back(v);
  }
  return out;
}

}  // namespace minipath
