#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "minipath/autodiff.hpp"
#include "minipath/random.hpp"

namespace minipath {

enum class EdgeDirection : std::uint8_t { kLeft = 0, kRight = 1 };

struct DepEdge {
  std::uint32_t lemma = 0;
  std::uint32_t pos = 0;
  std::uint32_t dep = 0;
  EdgeDirection direction = EdgeDirection::kLeft;
  friend bool operator==(const DepEdge&, const DepEdge&) = default;
};

using DepPath = std::vector<DepEdge>;

// String-to-index map; index 0 is reserved for unknown symbols.
class Vocabulary {
 public:
  static constexpr std::uint32_t kUnknown = 0;

  // Builds from the given symbols, sorted, duplicates removed.
  explicit Vocabulary(std::vector<std::string> symbols = {});
  std::uint32_t index(std::string_view symbol) const;
  std::size_t size() const noexcept { return symbols_.size() + 1; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Dependency paths between (query, anchor) surface pairs.
class DepPathStore {
 public:
  static constexpr std::size_t kDefaultMaxLength = 10;

  DepPathStore() = default;

  // Lines "query<TAB>anchor<TAB>edge;edge;..." with edge "lemma|pos|dep|dir"
  // and dir one of '<' or '>'. Paths longer than max_length keep their
  // first max_length edges.
  static DepPathStore load(std::istream& in, std::string_view source_name = "<stream>",
                           std::size_t max_length = kDefaultMaxLength);
  static DepPathStore load_file(const std::string& path, std::size_t max_length = kDefaultMaxLength);

  // nullptr when the pair never co-occurred.
  const std::vector<DepPath>* find(std::string_view query, std::string_view anchor) const;

  const Vocabulary& lemmas() const noexcept { return lemmas_; }
  const Vocabulary& pos_tags() const noexcept { return pos_; }
  const Vocabulary& dep_labels() const noexcept { return deps_; }
  std::size_t pair_count() const noexcept { return paths_.size(); }
  std::size_t truncated() const noexcept { return truncated_; }

 private:
  Vocabulary lemmas_, pos_, deps_;
  std::map<std::pair<std::string, std::string>, std::vector<DepPath>> paths_;
  std::size_t truncated_ = 0;
};

struct ContextDims {
  std::size_t lemma_vocab = 1;
  std::size_t pos_vocab = 1;
  std::size_t dep_vocab = 1;
  std::size_t lemma_dim = 50;
  std::size_t pos_dim = 4;
  std::size_t dep_dim = 5;
  std::size_t dir_dim = 1;
  std::size_t hidden = 200;
  std::size_t attention = 200;
  std::size_t path_length = 3;

  std::size_t edge_dim() const noexcept { return lemma_dim + pos_dim + dep_dim + dir_dim; }
  friend bool operator==(const ContextDims&, const ContextDims&) = default;
};

struct ContextEncoderParams {
  ContextEncoderParams() = default;
  explicit ContextEncoderParams(const ContextDims& dims);

  void init(Rng& rng);
  std::vector<ad::Param*> params();

  ContextDims dims;
  ad::Param lemma_emb, pos_emb, dep_emb, dir_emb;
  // Gate rows are ordered input, forget, cell, output.
  ad::Param lstm_input, lstm_recurrent, lstm_bias;
  ad::Param attn_w, attn_u;
  // Learned stand-in for a pair without dependency paths, one row per anchor
  // position.
  ad::Param no_path;
};

// Last hidden state of the gated recurrent encoder over the edge sequence.
ad::Var encode_path(ad::Tape& tape, ContextEncoderParams& params, std::span<const DepEdge> path);

struct AttentionPool {
  ad::Var pooled;
  ad::Var weights;
};

AttentionPool attend_pool(ad::Tape& tape, ContextEncoderParams& params, std::span<const ad::Var> encodings);

// d(q, p) for one anchor at 0-based path position `position`.
ad::Var context_block(ad::Tape& tape, ContextEncoderParams& params, const DepPathStore& store,
                      std::string_view query, std::string_view anchor, std::size_t position);

using BlockTransform = std::function<ad::Var(ad::Var)>;

// h_c = [d(q, p_1) ; ... ; d(q, p_L)], dimension L * hidden. `transform`, if
// set, is applied to each block before concatenation (dropout hook).
ad::Var context_bundle(ad::Tape& tape, ContextEncoderParams& params, const DepPathStore& store,
                       std::string_view query, const std::vector<std::string>& path_terms,
                       const BlockTransform& transform = nullptr);

}  // namespace minipath
