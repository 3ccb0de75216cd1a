#include "minipath/graph_attention.hpp"

#include <cmath>

namespace minipath {

std::vector<EgoMember> ego_network(const Taxonomy& t, TermId node) {
  std::vector<EgoMember> ego{{node, EgoRole::kSelf}};
  if (auto p = t.parent(node)) ego.push_back({*p, EgoRole::kParent});
  for (TermId c : t.children(node)) ego.push_back({c, EgoRole::kChild});
  return ego;
}

GatParams::GatParams(std::size_t input_dim, std::size_t output_dim)
    : projection("gat.projection", output_dim, input_dim, ad::ParamKind::kWeight),
      attn_self("gat.attn_self", output_dim, 1, ad::ParamKind::kWeight),
      attn_neighbor("gat.attn_neighbor", output_dim, 1, ad::ParamKind::kWeight),
      position("gat.position", kEgoRoles, output_dim, ad::ParamKind::kEmbedding) {}

void GatParams::init(Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(projection.rows + projection.cols));
  for (double& w : projection.value) w = uniform_real(rng, -bound, bound);
  const double abound = std::sqrt(6.0 / static_cast<double>(attn_self.rows + 1));
  for (double& w : attn_self.value) w = uniform_real(rng, -abound, abound);
  for (double& w : attn_neighbor.value) w = uniform_real(rng, -abound, abound);
  for (double& w : position.value) w = uniform_real(rng, -0.1, 0.1);
}

std::vector<ad::Param*> GatParams::params() { return {&projection, &attn_self, &attn_neighbor, &position}; }

Propagation propagate(ad::Tape& tape, GatParams& params, const Taxonomy& t, const EmbeddingTable& table,
                      TermId node) {
  const auto ego = ego_network(t, node);
  ad::Var w = tape.param(params.projection);
  ad::Var pos = tape.param(params.position);
  ad::Var a_self = tape.param(params.attn_self);
  ad::Var a_nbr = tape.param(params.attn_neighbor);

  std::vector<ad::Var> projected;
  projected.reserve(ego.size());
  for (const EgoMember& m : ego) {
    ad::Var x = tape.constant(table.lookup(t.term(m.id).key));
    projected.push_back(tape.add(tape.matvec(w, x), tape.row(pos, static_cast<std::size_t>(m.role))));
  }
  ad::Var self_score = tape.dot(a_self, projected.front());
  std::vector<ad::Var> logits;
  logits.reserve(ego.size());
  for (ad::Var z : projected) {
    logits.push_back(tape.leaky_relu(tape.add(self_score, tape.dot(a_nbr, z)), params.leaky_slope));
  }
  ad::Var weights = tape.softmax(tape.concat(logits));
  std::vector<ad::Var> terms;
  terms.reserve(ego.size());
  for (std::size_t i = 0; i < ego.size(); ++i) terms.push_back(tape.mul_scalar(tape.pick(weights, i), projected[i]));
  ad::Var out = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) out = tape.add(out, terms[i]);
  return {out, weights};
}

std::vector<std::vector<double>> propagate_all(GatParams& params, const Taxonomy& t, const EmbeddingTable& table) {
  std::vector<std::vector<double>> out;
  out.reserve(t.size());
  for (TermId id = 0; id < t.size(); ++id) {
    ad::Tape tape;
    auto v = tape.value(propagate(tape, params, t, table, id).embedding);
    out.emplace_back(v.begin(), v.end());
  }
  return out;
}

ad::Var distributed_bundle(ad::Tape& tape, GatParams& params, const Taxonomy& t, const EmbeddingTable& table,
                           std::string_view query, const MiniPath& path, PropagationMemo* memo) {
  std::vector<ad::Var> blocks;
  blocks.reserve(path.length() + 1);
  blocks.push_back(tape.constant(table.lookup(query)));
  for (TermId anchor : path.nodes) {
    if (memo) {
      auto it = memo->find(anchor);
      if (it == memo->end()) it = memo->emplace(anchor, propagate(tape, params, t, table, anchor).embedding).first;
      blocks.push_back(it->second);
    } else {
      blocks.push_back(propagate(tape, params, t, table, anchor).embedding);
    }
  }
  return tape.concat(blocks);
}

}  // namespace minipath
