#include "minipath/lexsyn.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include <fmt/format.h>

#include "minipath/error.hpp"
#include "minipath/text.hpp"

namespace minipath {

std::size_t lcs_length(std::string_view x, std::string_view y) {
  if (x.empty() || y.empty()) return 0;
  // Rolling row of the suffix-match table.
  std::vector<std::size_t> prev(y.size() + 1, 0), cur(y.size() + 1, 0);
  std::size_t best = 0;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    for (std::size_t j = 1; j <= y.size(); ++j) {
      cur[j] = x[i - 1] == y[j - 1] ? prev[j - 1] + 1 : 0;
      best = std::max(best, cur[j]);
    }
    std::swap(prev, cur);
  }
  return best;
}

LexFlags lex_flags(std::string_view x, std::string_view y, std::size_t k) {
  LexFlags f;
  f.ends_with = y.ends_with(x);
  f.contains = y.find(x) != std::string_view::npos;
  f.suffix_match = k > 0 && x.size() >= k && y.size() >= k && x.substr(x.size() - k) == y.substr(y.size() - k);
  return f;
}

double length_diff(std::string_view x, std::string_view y) {
  const std::size_t longest = std::max(x.size(), y.size());
  if (longest == 0) return 0.0;
  const std::size_t diff = x.size() > y.size() ? x.size() - y.size() : y.size() - x.size();
  return static_cast<double>(diff) / static_cast<double>(longest);
}

void PairFrequencyTable::add(std::string_view x, std::string_view y, double count) {
  if (!(count >= 0.0) || !std::isfinite(count)) throw InputError("pair frequency must be a finite non-negative number");
  std::string kx = normalize_term(x), ky = normalize_term(y);
  double& c = counts_[{kx, ky}];
  c += count;
  double& m = max_out_[kx];
  m = std::max(m, c);
  if (c > 0.0) hyponyms_[kx].insert(ky);
}

double PairFrequencyTable::count(std::string_view x, std::string_view y) const {
  auto it = counts_.find({normalize_term(x), normalize_term(y)});
  return it == counts_.end() ? 0.0 : it->second;
}

double PairFrequencyTable::max_out(std::string_view x) const {
  auto it = max_out_.find(normalize_term(x));
  return it == max_out_.end() ? 0.0 : it->second;
}

double PairFrequencyTable::normalized(std::string_view x, std::string_view y) const {
  const double m = max_out(x);
  return m > 0.0 ? count(x, y) / m : 0.0;
}

std::size_t PairFrequencyTable::hyponym_count(std::string_view x) const {
  auto it = hyponyms_.find(normalize_term(x));
  return it == hyponyms_.end() ? 0 : it->second.size();
}

PairFrequencyTable PairFrequencyTable::load(std::istream& in, std::string_view source_name) {
  PairFrequencyTable tbl;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = chomp(line);
    if (trim(v).empty() || trim(v).front() == '#') continue;
    auto fields = split(v, '\t');
    if (fields.size() != 3) {
      throw InputError(fmt::format("{}:{}: expected 'x<TAB>y<TAB>count'", source_name, line_no));
    }
    std::string_view num = trim(fields[2]);
    double count = 0.0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), count);
    if (ec != std::errc() || ptr != num.data() + num.size() || !std::isfinite(count) || count < 0.0) {
      throw InputError(fmt::format("{}:{}: invalid count '{}'", source_name, line_no, num));
    }
    tbl.add(fields[0], fields[1], count);
  }
  return tbl;
}

PairFrequencyTable PairFrequencyTable::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open frequency file '{}'", path));
  return load(in, path);
}

FreqFeatures freq_features(const PairFrequencyTable& tbl, std::string_view x, std::string_view y) {
  FreqFeatures f;
  f.freq_diff = tbl.normalized(x, y) - tbl.normalized(y, x);
  f.generality_diff = std::log1p(static_cast<double>(tbl.hyponym_count(x))) -
                      std::log1p(static_cast<double>(tbl.hyponym_count(y)));
  return f;
}

std::vector<double> LexSynVector::to_vector() const {
  return {ends_with ? 1.0 : 0.0, contains ? 1.0 : 0.0, suffix_match ? 1.0 : 0.0, lcs_norm,
          length_diff,           freq_diff,            generality_diff};
}

LexSynVector lexsyn_pair(std::string_view x, std::string_view y, const PairFrequencyTable& tbl, std::size_t k) {
  const std::string nx = normalize_term(x), ny = normalize_term(y);
  LexSynVector s;
  LexFlags flags = lex_flags(nx, ny, k);
  s.ends_with = flags.ends_with;
  s.contains = flags.contains;
  s.suffix_match = flags.suffix_match;
  s.lcs_len = lcs_length(nx, ny);
  const std::size_t longest = std::max(nx.size(), ny.size());
  s.lcs_norm = longest ? static_cast<double>(s.lcs_len) / static_cast<double>(longest) : 0.0;
  s.length_diff = length_diff(nx, ny);
  FreqFeatures freq = freq_features(tbl, nx, ny);
  s.freq_diff = freq.freq_diff;
  s.generality_diff = freq.generality_diff;
  return s;
}

std::vector<double> lexsyn_bundle(std::string_view query, const std::vector<std::string>& path_terms,
                                  const PairFrequencyTable& tbl, std::size_t k) {
  std::vector<double> out;
  out.reserve(path_terms.size() * LexSynVector::kDim);
  for (const auto& anchor : path_terms) {
    auto block = lexsyn_pair(anchor, query, tbl, k).to_vector();
    out.insert(out.end(), block.begin(), block.end());
  }
  return out;
}

}  // namespace minipath
