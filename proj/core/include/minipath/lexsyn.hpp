#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace minipath {

// Length of the longest common contiguous substring, counted in bytes.
std::size_t lcs_length(std::string_view x, std::string_view y);

struct LexFlags {
  bool ends_with = false;     // y ends with x
  bool contains = false;      // y contains x
  bool suffix_match = false;  // the k-length suffixes of x and y agree
};

LexFlags lex_flags(std::string_view x, std::string_view y, std::size_t k);

// |len(x) - len(y)| / max(len(x), len(y)); 0 when both are empty.
double length_diff(std::string_view x, std::string_view y);

// Noisy hypernym-pair counts, rows "hypernym<TAB>hyponym<TAB>count". Keys are
// normalized terms.
class PairFrequencyTable {
 public:
  static PairFrequencyTable load(std::istream& in, std::string_view source_name = "<stream>");
  static PairFrequencyTable load_file(const std::string& path);

  void add(std::string_view x, std::string_view y, double count);

  double count(std::string_view x, std::string_view y) const;
  // max over z of count(x, z); 0 for an unseen x.
  double max_out(std::string_view x) const;
  // count(x, y) / max_out(x), with 0/0 taken as 0.
  double normalized(std::string_view x, std::string_view y) const;
  std::size_t hyponym_count(std::string_view x) const;
  std::size_t size() const noexcept { return counts_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, double> counts_;
  std::unordered_map<std::string, double> max_out_;
  std::unordered_map<std::string, std::set<std::string>> hyponyms_;
};

struct FreqFeatures {
  double freq_diff = 0.0;        // nf(x, y) - nf(y, x)
  double generality_diff = 0.0;  // log(1 + h(x)) - log(1 + h(y))
};

FreqFeatures freq_features(const PairFrequencyTable& tbl, std::string_view x, std::string_view y);

struct LexSynVector {
  static constexpr std::size_t kDim = 7;

  bool ends_with = false;
  bool contains = false;
  bool suffix_match = false;
  std::size_t lcs_len = 0;  // raw, for audit
  double lcs_norm = 0.0;    // lcs_len / max(|x|, |y|), the value fed to the model
  double length_diff = 0.0;
  double freq_diff = 0.0;
  double generality_diff = 0.0;

  std::vector<double> to_vector() const;
};

// Features s(x, y); surfaces are normalized before comparison.
LexSynVector lexsyn_pair(std::string_view x, std::string_view y, const PairFrequencyTable& tbl, std::size_t k = 3);

// Concatenation of the per-anchor blocks over the path, dimension 7 * L. Each
// block is lexsyn_pair(x = anchor, y = query): the anchor is the candidate
// hypernym, so "y ends with x" fires for head-word hyponyms.
std::vector<double> lexsyn_bundle(std::string_view query, const std::vector<std::string>& path_terms,
                                  const PairFrequencyTable& tbl, std::size_t k = 3);

}  // namespace minipath
