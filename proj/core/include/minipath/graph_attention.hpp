#pragma once

#include <string_view>
#include <unordered_map>
#include <vector>

#include "minipath/autodiff.hpp"
#include "minipath/embedding.hpp"
#include "minipath/random.hpp"
#include "minipath/taxonomy.hpp"

namespace minipath {

enum class EgoRole : std::size_t { kSelf = 0, kParent = 1, kChild = 2 };
inline constexpr std::size_t kEgoRoles = 3;

struct EgoMember {
  TermId id = 0;
  EgoRole role = EgoRole::kSelf;
};

// Self first, then the parent (if any), then children in insertion order.
std::vector<EgoMember> ego_network(const Taxonomy& t, TermId node);

// One attention layer over a node's 1-hop ego network. Each member u is
// projected as z_u = W x_u + pos[role(u)]; its logit is
// leaky_relu(a_self . z_self + a_nbr . z_u) and the output is the softmax
// weighted sum of the z_u.
struct GatParams {
  GatParams() = default;
  GatParams(std::size_t input_dim, std::size_t output_dim);

  void init(Rng& rng);
  std::vector<ad::Param*> params();

  ad::Param projection;     // output_dim x input_dim
  ad::Param attn_self;      // output_dim
  ad::Param attn_neighbor;  // output_dim
  ad::Param position;       // kEgoRoles x output_dim
  double leaky_slope = 0.2;
};

struct Propagation {
  ad::Var embedding;
  ad::Var weights;  // attention over ego_network(), same order
};

Propagation propagate(ad::Tape& tape, GatParams& params, const Taxonomy& t, const EmbeddingTable& table,
                      TermId node);

// Propagated vectors for every term under frozen parameters.
std::vector<std::vector<double>> propagate_all(GatParams& params, const Taxonomy& t, const EmbeddingTable& table);

// Memo of propagated anchors within one tape.
using PropagationMemo = std::unordered_map<TermId, ad::Var>;

// h_d = [w(q) ; w(p_1) ; ... ; w(p_L)], query vector straight from the table
// and anchors propagated. Dimension D + L * D'.
ad::Var distributed_bundle(ad::Tape& tape, GatParams& params, const Taxonomy& t, const EmbeddingTable& table,
                           std::string_view query, const MiniPath& path, PropagationMemo* memo = nullptr);

}  // namespace minipath
