#include "minipath/context.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "minipath/error.hpp"
#include "minipath/text.hpp"

namespace minipath {

Vocabulary::Vocabulary(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  std::sort(symbols_.begin(), symbols_.end());
  symbols_.erase(std::unique(symbols_.begin(), symbols_.end()), symbols_.end());
  for (std::size_t i = 0; i < symbols_.size(); ++i) index_.emplace(symbols_[i], static_cast<std::uint32_t>(i + 1));
}

std::uint32_t Vocabulary::index(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  return it == index_.end() ? kUnknown : it->second;
}

namespace {

struct RawEdge {
  std::string lemma, pos, dep;
  EdgeDirection dir;
};

}  // namespace

DepPathStore DepPathStore::load(std::istream& in, std::string_view source_name, std::size_t max_length) {
  if (max_length == 0) throw InputError("maximum dependency-path length must be positive");
  std::vector<std::tuple<std::string, std::string, std::vector<RawEdge>>> rows;
  std::vector<std::string> lemmas, tags, labels;
  std::string line;
  std::size_t line_no = 0;
  DepPathStore store;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = chomp(line);
    if (trim(v).empty() || trim(v).front() == '#') continue;
    auto fields = split(v, '\t');
    if (fields.size() != 3 || trim(fields[0]).empty() || trim(fields[1]).empty()) {
      throw InputError(fmt::format("{}:{}: expected 'query<TAB>anchor<TAB>edges'", source_name, line_no));
    }
    std::vector<RawEdge> edges;
    for (std::string_view e : split(trim(fields[2]), ';')) {
      if (trim(e).empty()) continue;
      auto parts = split(e, '|');
      if (parts.size() != 4 || (parts[3] != "<" && parts[3] != ">")) {
        throw InputError(fmt::format("{}:{}: malformed edge '{}' (expected lemma|pos|dep|< or >)", source_name,
                                     line_no, e));
      }
      edges.push_back({normalize_term(parts[0]), std::string(parts[1]), std::string(parts[2]),
                       parts[3] == "<" ? EdgeDirection::kLeft : EdgeDirection::kRight});
    }
    if (edges.empty()) throw InputError(fmt::format("{}:{}: empty dependency path", source_name, line_no));
    if (edges.size() > max_length) {
      spdlog::warn("{}:{}: dependency path of {} edges truncated to {}", source_name, line_no, edges.size(),
                   max_length);
      edges.resize(max_length);
      ++store.truncated_;
    }
    for (const auto& e : edges) {
      lemmas.push_back(e.lemma);
      tags.push_back(e.pos);
      labels.push_back(e.dep);
    }
    rows.emplace_back(normalize_term(fields[0]), normalize_term(fields[1]), std::move(edges));
  }
  store.lemmas_ = Vocabulary(std::move(lemmas));
  store.pos_ = Vocabulary(std::move(tags));
  store.deps_ = Vocabulary(std::move(labels));
  for (auto& [q, a, edges] : rows) {
    DepPath path;
    for (const auto& e : edges) {
      path.push_back({store.lemmas_.index(e.lemma), store.pos_.index(e.pos), store.deps_.index(e.dep), e.dir});
    }
    store.paths_[{q, a}].push_back(std::move(path));
  }
  return store;
}

DepPathStore DepPathStore::load_file(const std::string& path, std::size_t max_length) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open dependency-path file '{}'", path));
  return load(in, path, max_length);
}

const std::vector<DepPath>* DepPathStore::find(std::string_view query, std::string_view anchor) const {
  auto it = paths_.find({normalize_term(query), normalize_term(anchor)});
  return it == paths_.end() ? nullptr : &it->second;
}

ContextEncoderParams::ContextEncoderParams(const ContextDims& d)
    : dims(d),
      lemma_emb("context.lemma_emb", d.lemma_vocab, d.lemma_dim, ad::ParamKind::kEmbedding),
      pos_emb("context.pos_emb", d.pos_vocab, d.pos_dim, ad::ParamKind::kEmbedding),
      dep_emb("context.dep_emb", d.dep_vocab, d.dep_dim, ad::ParamKind::kEmbedding),
      dir_emb("context.dir_emb", 2, d.dir_dim, ad::ParamKind::kEmbedding),
      lstm_input("context.lstm_input", 4 * d.hidden, d.edge_dim(), ad::ParamKind::kWeight),
      lstm_recurrent("context.lstm_recurrent", 4 * d.hidden, d.hidden, ad::ParamKind::kWeight),
      lstm_bias("context.lstm_bias", 4 * d.hidden, 1, ad::ParamKind::kBias),
      attn_w("context.attn_w", d.attention, d.hidden, ad::ParamKind::kWeight),
      attn_u("context.attn_u", d.attention, 1, ad::ParamKind::kWeight),
      no_path("context.no_path", d.path_length, d.hidden, ad::ParamKind::kEmbedding) {}

void ContextEncoderParams::init(Rng& rng) {
  for (ad::Param* p : {&lemma_emb, &pos_emb, &dep_emb, &dir_emb, &no_path}) {
    for (double& w : p->value) w = uniform_real(rng, -0.1, 0.1);
  }
  const double lstm_bound = 1.0 / std::sqrt(static_cast<double>(dims.hidden));
  for (ad::Param* p : {&lstm_input, &lstm_recurrent}) {
    for (double& w : p->value) w = uniform_real(rng, -lstm_bound, lstm_bound);
  }
  std::fill(lstm_bias.value.begin(), lstm_bias.value.end(), 0.0);
  const double attn_bound = std::sqrt(6.0 / static_cast<double>(attn_w.rows + attn_w.cols));
  for (double& w : attn_w.value) w = uniform_real(rng, -attn_bound, attn_bound);
  const double u_bound = std::sqrt(6.0 / static_cast<double>(attn_u.rows + 1));
  for (double& w : attn_u.value) w = uniform_real(rng, -u_bound, u_bound);
}

std::vector<ad::Param*> ContextEncoderParams::params() {
  return {&lemma_emb, &pos_emb, &dep_emb, &dir_emb, &lstm_input, &lstm_recurrent, &lstm_bias, &attn_w, &attn_u,
          &no_path};
}

ad::Var encode_path(ad::Tape& tape, ContextEncoderParams& params, std::span<const DepEdge> path) {
  if (path.empty()) throw InputError("cannot encode an empty dependency path");
  const std::size_t h = params.dims.hidden;
  ad::Var lemma = tape.param(params.lemma_emb);
  ad::Var pos = tape.param(params.pos_emb);
  ad::Var dep = tape.param(params.dep_emb);
  ad::Var dir = tape.param(params.dir_emb);
  ad::Var wx = tape.param(params.lstm_input);
  ad::Var wh = tape.param(params.lstm_recurrent);
  ad::Var b = tape.param(params.lstm_bias);

  ad::Var hidden = tape.constant(std::vector<double>(h, 0.0));
  ad::Var cell = tape.constant(std::vector<double>(h, 0.0));
  for (const DepEdge& e : path) {
    const ad::Var parts[] = {tape.row(lemma, e.lemma), tape.row(pos, e.pos), tape.row(dep, e.dep),
                             tape.row(dir, static_cast<std::size_t>(e.direction))};
    ad::Var x = tape.concat(parts);
    ad::Var gates = tape.add(tape.add(tape.matvec(wx, x), tape.matvec(wh, hidden)), b);
    ad::Var in_gate = tape.sigmoid(tape.slice(gates, 0, h));
    ad::Var forget_gate = tape.sigmoid(tape.slice(gates, h, h));
    ad::Var candidate = tape.tanh(tape.slice(gates, 2 * h, h));
    ad::Var out_gate = tape.sigmoid(tape.slice(gates, 3 * h, h));
    cell = tape.add(tape.mul(forget_gate, cell), tape.mul(in_gate, candidate));
    hidden = tape.mul(out_gate, tape.tanh(cell));
  }
  return hidden;
}

AttentionPool attend_pool(ad::Tape& tape, ContextEncoderParams& params, std::span<const ad::Var> encodings) {
  if (encodings.empty()) throw InputError("attention pooling needs at least one encoding");
  ad::Var w = tape.param(params.attn_w);
  ad::Var u = tape.param(params.attn_u);
  std::vector<ad::Var> scores;
  scores.reserve(encodings.size());
  for (ad::Var enc : encodings) scores.push_back(tape.dot(u, tape.tanh(tape.matvec(w, enc))));
  ad::Var weights = tape.softmax(tape.concat(scores));
  ad::Var pooled = tape.mul_scalar(tape.pick(weights, 0), encodings[0]);
  for (std::size_t i = 1; i < encodings.size(); ++i) {
    pooled = tape.add(pooled, tape.mul_scalar(tape.pick(weights, i), encodings[i]));
  }
  return {pooled, weights};
}

ad::Var context_block(ad::Tape& tape, ContextEncoderParams& params, const DepPathStore& store,
                      std::string_view query, std::string_view anchor, std::size_t position) {
  const std::vector<DepPath>* paths = store.find(query, anchor);
  if (!paths) return tape.row(tape.param(params.no_path), position);
  std::vector<ad::Var> encodings;
  encodings.reserve(paths->size());
  for (const DepPath& p : *paths) encodings.push_back(encode_path(tape, params, p));
  return attend_pool(tape, params, encodings).pooled;
}

ad::Var context_bundle(ad::Tape& tape, ContextEncoderParams& params, const DepPathStore& store,
                       std::string_view query, const std::vector<std::string>& path_terms,
                       const BlockTransform& transform) {
  if (path_terms.size() != params.dims.path_length) {
    throw ShapeError(fmt::format("context view expects {} anchors, got {}", params.dims.path_length, path_terms.size()));
  }
  std::vector<ad::Var> blocks;
  blocks.reserve(path_terms.size());
  for (std::size_t l = 0; l < path_terms.size(); ++l) {
    ad::Var block = context_block(tape, params, store, query, path_terms[l], l);
    blocks.push_back(transform ? transform(block) : block);
  }
  return tape.concat(blocks);
}

}  // namespace minipath
