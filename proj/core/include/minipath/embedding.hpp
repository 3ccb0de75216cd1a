#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace minipath {

enum class OovPolicy { kZero, kMean };

OovPolicy parse_oov_policy(std::string_view name);
std::string_view to_string(OovPolicy p);

// Frozen pretrained term vectors keyed by normalized surface.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t dim, OovPolicy policy = OovPolicy::kZero);

  // Lines "term<TAB>v1 v2 ... vD". Duplicate terms: last wins, with a warning.
  static EmbeddingTable load(std::istream& in, std::string_view source_name = "<stream>",
                             OovPolicy policy = OovPolicy::kZero);
  static EmbeddingTable load_file(const std::string& path, OovPolicy policy = OovPolicy::kZero);

  void insert(std::string_view term, std::vector<double> vec);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return vectors_.size(); }
  bool contains(std::string_view term) const;
  OovPolicy oov_policy() const noexcept { return policy_; }
  void set_oov_policy(OovPolicy p) noexcept { policy_ = p; }

  // Stored vector, or the OOV vector (zeros, or the mean of all entries).
  std::span<const double> lookup(std::string_view term) const;

 private:
  void refresh_mean();

  std::size_t dim_ = 0;
  OovPolicy policy_ = OovPolicy::kZero;
  std::unordered_map<std::string, std::vector<double>> vectors_;
  std::vector<double> zero_;
  std::vector<double> mean_;
};

}  // namespace minipath
