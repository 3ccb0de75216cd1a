#include "minipath/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "minipath/error.hpp"
#include "minipath/text.hpp"

namespace minipath {

OovPolicy parse_oov_policy(std::string_view name) {
  if (name == "zero") return OovPolicy::kZero;
  if (name == "mean") return OovPolicy::kMean;
  throw InputError(fmt::format("unknown OOV policy '{}' (expected 'zero' or 'mean')", name));
}

std::string_view to_string(OovPolicy p) { return p == OovPolicy::kZero ? "zero" : "mean"; }

EmbeddingTable::EmbeddingTable(std::size_t dim, OovPolicy policy)
    : dim_(dim), policy_(policy), zero_(dim, 0.0), mean_(dim, 0.0) {}

void EmbeddingTable::insert(std::string_view term, std::vector<double> vec) {
  if (vec.size() != dim_) {
    throw ShapeError(fmt::format("embedding for '{}' has dimension {}, expected {}", term, vec.size(), dim_));
  }
  for (double v : vec) {
    if (!std::isfinite(v)) throw InputError(fmt::format("embedding for '{}' has a non-finite entry", term));
  }
  vectors_[normalize_term(term)] = std::move(vec);
  refresh_mean();
}

void EmbeddingTable::refresh_mean() {
  mean_.assign(dim_, 0.0);
  if (vectors_.empty()) return;
  // Sum in key order so the mean does not depend on hash iteration order.
  std::vector<const std::string*> keys;
  keys.reserve(vectors_.size());
  for (const auto& kv : vectors_) keys.push_back(&kv.first);
  std::sort(keys.begin(), keys.end(), [](const std::string* a, const std::string* b) { return *a < *b; });
  for (const std::string* k : keys) {
    const auto& v = vectors_.at(*k);
    for (std::size_t i = 0; i < dim_; ++i) mean_[i] += v[i];
  }
  for (double& m : mean_) m /= static_cast<double>(vectors_.size());
}

bool EmbeddingTable::contains(std::string_view term) const { return vectors_.count(normalize_term(term)) != 0; }

std::span<const double> EmbeddingTable::lookup(std::string_view term) const {
  auto it = vectors_.find(normalize_term(term));
  if (it != vectors_.end()) return it->second;
  return policy_ == OovPolicy::kZero ? std::span<const double>(zero_) : std::span<const double>(mean_);
}

EmbeddingTable EmbeddingTable::load(std::istream& in, std::string_view source_name, OovPolicy policy) {
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  std::string line;
  std::size_t line_no = 0, dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = chomp(line);
    if (trim(v).empty()) continue;
    const std::size_t tab = v.find('\t');
    if (tab == std::string_view::npos) {
      throw InputError(fmt::format("{}:{}: expected 'term<TAB>v1 v2 ...'", source_name, line_no));
    }
    std::vector<double> vec;
    for (std::string_view field : split(trim(v.substr(tab + 1)), ' ')) {
      if (field.empty()) continue;
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), x);
      if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(x)) {
        throw InputError(fmt::format("{}:{}: non-numeric field '{}'", source_name, line_no, field));
      }
      vec.push_back(x);
    }
    if (vec.empty()) throw InputError(fmt::format("{}:{}: empty vector", source_name, line_no));
    if (dim == 0) dim = vec.size();
    if (vec.size() != dim) {
      throw ShapeError(
          fmt::format("{}:{}: dimension {} differs from earlier dimension {}", source_name, line_no, vec.size(), dim));
    }
    rows.emplace_back(std::string(v.substr(0, tab)), std::move(vec));
  }
  if (rows.empty()) throw InputError(fmt::format("{}: no embeddings", source_name));

  EmbeddingTable table(dim, policy);
  for (auto& [term, vec] : rows) {
    const std::string key = normalize_term(term);
    if (table.vectors_.count(key)) spdlog::warn("{}: duplicate embedding for '{}', keeping the last", source_name, term);
    table.vectors_[key] = std::move(vec);
  }
  table.refresh_mean();
  return table;
}

EmbeddingTable EmbeddingTable::load_file(const std::string& path, OovPolicy policy) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open embedding file '{}'", path));
  return load(in, path, policy);
}

}  // namespace minipath
