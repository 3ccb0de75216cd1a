#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace minipath {

using TermId = std::uint32_t;

struct Term {
  TermId id = 0;
  std::string surface;  // as first seen in the input
  std::string key;      // normalized form used for lookups
};

struct Edge {
  TermId parent = 0;
  TermId child = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

// Ordered chain of term ids, each consecutive pair a parent->child edge.
struct MiniPath {
  std::vector<TermId> nodes;

  std::size_t length() const noexcept { return nodes.size(); }
  bool contains(TermId id) const;
  // 0-based position of id on the path, if present.
  std::optional<std::size_t> position_of(TermId id) const;

  friend bool operator==(const MiniPath&, const MiniPath&) = default;
  friend auto operator<=>(const MiniPath&, const MiniPath&) = default;
};

// Immutable rooted tree of terms. Ids are dense and assigned in first-seen
// order; depth of the root is 1.
class Taxonomy {
 public:
  // Lines "parent<TAB>child"; blank lines and lines starting with '#' are
  // ignored. A row giving a child a second parent, or a self-loop, is dropped
  // with a warning (first parent wins). Duplicate rows, cycles and multiple
  // roots are errors.
  static Taxonomy load(std::istream& in, std::string_view source_name = "<stream>");
  static Taxonomy load_file(const std::string& path);
  static Taxonomy from_edges(const std::vector<std::pair<std::string, std::string>>& rows);

  std::size_t size() const noexcept { return terms_.size(); }
  TermId root() const noexcept { return root_; }
  const std::vector<Term>& terms() const noexcept { return terms_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Term& term(TermId id) const;
  std::optional<TermId> find(std::string_view surface) const;

  std::optional<TermId> parent(TermId id) const;
  const std::vector<TermId>& children(TermId id) const;
  // Ancestor chain root-first, excluding id itself.
  std::vector<TermId> ancestors(TermId id) const;
  std::size_t depth(TermId id) const;
  // Number of levels, i.e. the maximum depth.
  std::size_t height() const noexcept { return height_; }
  TermId lca(TermId a, TermId b) const;
  bool is_edge(TermId parent, TermId child) const;

  // Rows dropped while loading (second parents, self-loops), for reporting.
  const std::vector<std::string>& load_warnings() const noexcept { return warnings_; }

  // Writes the kept edges as "parent<TAB>child" using original surfaces.
  void write_edges(std::ostream& out) const;

 private:
  static Taxonomy build(const std::vector<std::pair<std::string, std::string>>& rows,
                        const std::vector<std::size_t>& line_numbers, std::string_view source_name);
  void check_id(TermId id) const;

  std::vector<Term> terms_;
  std::vector<Edge> edges_;
  std::vector<std::optional<TermId>> parent_;
  std::vector<std::vector<TermId>> children_;
  std::vector<std::size_t> depth_;
  std::unordered_map<std::string, TermId> by_key_;
  std::vector<std::string> warnings_;
  TermId root_ = 0;
  std::size_t height_ = 0;
};

// Every descending chain of exactly `length` terms, sorted by node sequence.
// Empty when length exceeds the taxonomy height.
std::vector<MiniPath> enumerate_minipaths(const Taxonomy& t, std::size_t length);

// Reads a companion vocabulary (one surface per line, '#' comments).
std::vector<std::string> load_vocabulary_file(const std::string& path);

}  // namespace minipath
