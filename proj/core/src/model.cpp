#include "minipath/model.hpp"

#include <cmath>

#include <fmt/format.h>

#include "minipath/error.hpp"
#include "minipath/text.hpp"

namespace minipath {

std::map<std::string, std::string> to_fields(const ModelDims& d) {
  auto s = [](std::size_t v) { return std::to_string(v); };
  return {
      {"path_length", s(d.path_length)},
      {"embedding_dim", s(d.embedding_dim)},
      {"propagated_dim", s(d.propagated_dim)},
      {"classifier_hidden", s(d.classifier_hidden)},
      {"lemma_vocab", s(d.context.lemma_vocab)},
      {"pos_vocab", s(d.context.pos_vocab)},
      {"dep_vocab", s(d.context.dep_vocab)},
      {"lemma_dim", s(d.context.lemma_dim)},
      {"pos_dim", s(d.context.pos_dim)},
      {"dep_dim", s(d.context.dep_dim)},
      {"dir_dim", s(d.context.dir_dim)},
      {"lstm_hidden", s(d.context.hidden)},
      {"attention_dim", s(d.context.attention)},
  };
}

ModelDims dims_from_fields(const std::map<std::string, std::string>& fields) {
  auto get = [&](const char* key) -> std::size_t {
    auto it = fields.find(key);
    if (it == fields.end()) throw InputError(fmt::format("missing model dimension '{}'", key));
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument(it->second);
      return static_cast<std::size_t>(v);
    } catch (const std::logic_error&) {
      throw InputError(fmt::format("invalid model dimension {}='{}'", key, it->second));
    }
  };
  ModelDims d;
  d.path_length = get("path_length");
  d.embedding_dim = get("embedding_dim");
  d.propagated_dim = get("propagated_dim");
  d.classifier_hidden = get("classifier_hidden");
  d.context.lemma_vocab = get("lemma_vocab");
  d.context.pos_vocab = get("pos_vocab");
  d.context.dep_vocab = get("dep_vocab");
  d.context.lemma_dim = get("lemma_dim");
  d.context.pos_dim = get("pos_dim");
  d.context.dep_dim = get("dep_dim");
  d.context.dir_dim = get("dir_dim");
  d.context.hidden = get("lstm_hidden");
  d.context.attention = get("attention_dim");
  d.context.path_length = d.path_length;
  return d;
}

std::string describe_mismatch(const ModelDims& expected, const ModelDims& actual) {
  const auto a = to_fields(expected), b = to_fields(actual);
  std::string out;
  for (const auto& [key, value] : a) {
    const auto& other = b.at(key);
    if (value != other) out += fmt::format("{}{}: expected {}, found {}", out.empty() ? "" : "; ", key, value, other);
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw InputError("learning rate must be >= 0");
  if (epochs == 0) throw InputError("epochs must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InputError("dropout must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw InputError("weight decay must be >= 0");
  if (!(lambda >= 0.0) || !(mu >= 0.0)) throw InputError("lambda and mu must be >= 0");
  if (batch_size == 0) throw InputError("batch size must be positive");
}

ViewClassifier::ViewClassifier(std::string name, std::size_t input, std::size_t hidden, std::size_t classes)
    : w1(name + ".w1", hidden, input, ad::ParamKind::kWeight),
      b1(name + ".b1", hidden, 1, ad::ParamKind::kBias),
      w2(name + ".w2", classes, hidden, ad::ParamKind::kWeight),
      b2(name + ".b2", classes, 1, ad::ParamKind::kBias) {}

void ViewClassifier::init(Rng& rng) {
  for (ad::Param* w : {&w1, &w2}) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w->rows + w->cols));
    for (double& v : w->value) v = uniform_real(rng, -bound, bound);
  }
  std::fill(b1.value.begin(), b1.value.end(), 0.0);
  std::fill(b2.value.begin(), b2.value.end(), 0.0);
}

std::vector<ad::Param*> ViewClassifier::params() { return {&w1, &b1, &w2, &b2}; }

ad::Var ViewClassifier::logits(ad::Tape& tape, ad::Var features, const BlockTransform& hidden_dropout) {
  ad::Var hidden = tape.relu(tape.add(tape.matvec(tape.param(w1), features), tape.param(b1)));
  if (hidden_dropout) hidden = hidden_dropout(hidden);
  return tape.add(tape.matvec(tape.param(w2), hidden), tape.param(b2));
}

CoTrainModel::CoTrainModel(const ModelDims& dims, std::uint64_t init_seed)
    : gat(dims.embedding_dim, dims.propagated_dim),
      context([&] {
        ContextDims c = dims.context;
        c.path_length = dims.path_length;
        return c;
      }()),
      distributed_view("view_distributed", dims.distributed_input(), dims.classifier_hidden, dims.classes()),
      context_view("view_context", dims.context_input(), dims.classifier_hidden, dims.classes()),
      lexsyn_view("view_lexsyn", dims.lexsyn_input(), dims.classifier_hidden, dims.classes()),
      rng(derive_seed(init_seed, "train")),
      dims_(dims) {
  if (dims.path_length == 0) throw InputError("mini-path length must be positive");
  dims_.context.path_length = dims.path_length;
  Rng init(derive_seed(init_seed, "init"));
  gat.init(init);
  context.init(init);
  distributed_view.init(init);
  context_view.init(init);
  lexsyn_view.init(init);
}

std::vector<ad::Param*> CoTrainModel::params() {
  std::vector<ad::Param*> out;
  for (auto* group : {&distributed_view, &context_view, &lexsyn_view}) {
    for (ad::Param* p : group->params()) out.push_back(p);
  }
  for (ad::Param* p : context.params()) out.push_back(p);
  for (ad::Param* p : gat.params()) out.push_back(p);
  return out;
}

std::vector<const ad::Param*> CoTrainModel::params() const {
  auto mutable_params = const_cast<CoTrainModel*>(this)->params();
  return {mutable_params.begin(), mutable_params.end()};
}

void CoTrainModel::zero_grad() {
  for (ad::Param* p : params()) p->zero_grad();
}

bool CoTrainModel::all_finite() const {
  for (const ad::Param* p : params()) {
    for (double v : p->value) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

ModelDims infer_dims(const FeatureSources& sources, std::size_t path_length, std::size_t propagated_dim,
                     const ContextDims& context_settings, std::size_t classifier_hidden) {
  ModelDims d;
  d.path_length = path_length;
  d.embedding_dim = sources.embeddings.dim();
  d.propagated_dim = propagated_dim == 0 ? d.embedding_dim : propagated_dim;
  d.classifier_hidden = classifier_hidden;
  d.context = context_settings;
  d.context.lemma_vocab = sources.dep_paths.lemmas().size();
  d.context.pos_vocab = sources.dep_paths.pos_tags().size();
  d.context.dep_vocab = sources.dep_paths.dep_labels().size();
  d.context.path_length = path_length;
  return d;
}

ForwardPass::ForwardPass(CoTrainModel& model, const FeatureSources& sources, Mode mode, Rng* dropout_rng,
                         const std::vector<std::vector<double>>* propagated)
    : model_(model), sources_(sources), mode_(mode), rng_(dropout_rng), propagated_(propagated) {}

ad::Var ForwardPass::dropout(ad::Var v) {
  const double rate = model_.config.dropout;
  if (mode_ != Mode::kTrain || rng_ == nullptr || rate <= 0.0) return v;
  std::vector<double> mask(tape_.size(v));
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : mask) m = uniform_unit(*rng_) < rate ? 0.0 : keep_scale;
  return tape_.dropout(v, std::move(mask));
}

FeatureBundle ForwardPass::features(std::string_view query, const MiniPath& path) {
  const ModelDims& dims = model_.dims();
  if (path.length() != dims.path_length) {
    throw ShapeError(fmt::format("model expects mini-paths of length {}, got {}", dims.path_length, path.length()));
  }
  const Taxonomy& t = sources_.taxonomy;
  if (sources_.embeddings.dim() != dims.embedding_dim) {
    throw ShapeError(fmt::format("embedding dimension {} does not match the model's {}", sources_.embeddings.dim(),
                                 dims.embedding_dim));
  }
  const std::string qkey = normalize_term(query);

  if (propagated_) {
    for (TermId anchor : path.nodes) {
      if (!anchors_.count(anchor)) anchors_.emplace(anchor, tape_.constant(propagated_->at(anchor)));
    }
  }
  ad::Var h_d = distributed_bundle(tape_, model_.gat, t, sources_.embeddings, qkey, path, &anchors_);

  std::vector<ad::Var> blocks;
  std::vector<std::string> anchor_terms;
  for (std::size_t l = 0; l < path.length(); ++l) {
    const TermId anchor = path.nodes[l];
    const std::string& akey = t.term(anchor).key;
    anchor_terms.push_back(akey);
    // The no-path fallback depends on the position, pooled paths do not.
    const bool has_paths = sources_.dep_paths.find(qkey, akey) != nullptr;
    const TermId slot = has_paths ? anchor : static_cast<TermId>(t.size() + l);
    auto key = std::make_pair(qkey, slot);
    auto it = context_blocks_.find(key);
    if (it == context_blocks_.end()) {
      it = context_blocks_.emplace(key, context_block(tape_, model_.context, sources_.dep_paths, qkey, akey, l)).first;
    }
    blocks.push_back(dropout(it->second));
  }
  ad::Var h_c = tape_.concat(blocks);
  ad::Var h_s = tape_.constant(lexsyn_bundle(qkey, anchor_terms, sources_.frequencies, sources_.suffix_k));
  return {h_d, h_c, h_s};
}

ViewLogits ForwardPass::views(const FeatureBundle& bundle) {
  const ModelDims& dims = model_.dims();
  auto check = [](std::size_t got, std::size_t want, const char* view) {
    if (got != want) throw ShapeError(fmt::format("{} features have dimension {}, expected {}", view, got, want));
  };
  check(tape_.size(bundle.distributed), dims.distributed_input(), "distributed");
  check(tape_.size(bundle.context), dims.context_input(), "context");
  check(tape_.size(bundle.lexsyn), dims.lexsyn_input(), "lexico-syntactic");
  BlockTransform drop = [this](ad::Var v) { return dropout(v); };
  return {model_.distributed_view.logits(tape_, bundle.distributed, drop),
          model_.context_view.logits(tape_, bundle.context, drop),
          model_.lexsyn_view.logits(tape_, bundle.lexsyn, drop)};
}

ad::Var aggregate(ad::Tape& tape, const ViewLogits& y) {
  const std::size_t n = tape.size(y.distributed);
  if (tape.size(y.context) != n || tape.size(y.lexsyn) != n) throw ShapeError("aggregate: logit sizes differ");
  return tape.softmax(tape.scale(tape.add(tape.add(y.distributed, y.context), y.lexsyn), 1.0 / 3.0));
}

LossVars co_training_loss(ad::Tape& tape, std::span<const LabeledLogits> batch, double lambda, double mu) {
  if (batch.empty()) throw InputError("loss of an empty batch");
  std::vector<ad::Var> l1_terms, l2_terms, l3_terms;
  for (const LabeledLogits& item : batch) {
    const ViewLogits& y = item.logits;
    const std::size_t classes = tape.size(y.distributed);
    if (item.label < 1 || item.label > classes) {
      throw InputError(fmt::format("label {} outside 1..{}", item.label, classes));
    }
    const std::size_t target = item.label - 1;
    ad::Var mean = tape.scale(tape.add(tape.add(y.distributed, y.context), y.lexsyn), 1.0 / 3.0);
    l1_terms.push_back(tape.pick(tape.log_softmax(mean), target));
    for (ad::Var v : {y.distributed, y.context, y.lexsyn}) l2_terms.push_back(tape.pick(tape.log_softmax(v), target));
    ad::Var pd = tape.softmax(y.distributed), pc = tape.softmax(y.context), ps = tape.softmax(y.lexsyn);
    l3_terms.push_back(tape.sq_norm(tape.sub(pd, pc)));
    l3_terms.push_back(tape.sq_norm(tape.sub(pd, ps)));
    l3_terms.push_back(tape.sq_norm(tape.sub(pc, ps)));
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  LossVars out;
  out.aggregated = tape.scale(tape.add_n(l1_terms), -inv_n);
  out.per_view = tape.scale(tape.add_n(l2_terms), -inv_n);
  out.consistency = tape.scale(tape.add_n(l3_terms), inv_n);
  const ad::Var parts[] = {out.aggregated, tape.scale(out.per_view, lambda), tape.scale(out.consistency, mu)};
  out.total = tape.add_n(parts);
  return out;
}

LossValues values_of(const ad::Tape& tape, const LossVars& vars) {
  return {tape.scalar(vars.total), tape.scalar(vars.aggregated), tape.scalar(vars.per_view),
          tape.scalar(vars.consistency)};
}

LossValues compute_batch_gradients(CoTrainModel& model, const FeatureSources& sources,
                                   std::span<const TrainingInstance> batch, const TrainConfig& cfg, Mode mode,
                                   Rng* dropout_rng) {
  model.zero_grad();
  ForwardPass pass(model, sources, mode, dropout_rng);
  std::vector<LabeledLogits> items;
  items.reserve(batch.size());
  for (const TrainingInstance& inst : batch) {
    items.push_back({pass.views(sources.taxonomy.term(inst.query).key, inst.path), inst.label});
  }
  LossVars loss = co_training_loss(pass.tape(), items, cfg.lambda, cfg.mu);
  pass.tape().backward(loss.total);
  return values_of(pass.tape(), loss);
}

void adam_step(CoTrainModel& model, const TrainConfig& cfg) {
  auto params = model.params();
  OptimizerState& st = model.optimizer;
  if (st.first_moment.size() != params.size()) {
    st.first_moment.clear();
    st.second_moment.clear();
    for (ad::Param* p : params) {
      st.first_moment.emplace_back(p->size(), 0.0);
      st.second_moment.emplace_back(p->size(), 0.0);
    }
  }
  ++st.step;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
  const double lr = cfg.learning_rate;
  for (std::size_t k = 0; k < params.size(); ++k) {
    ad::Param& p = *params[k];
    auto& m = st.first_moment[k];
    auto& v = st.second_moment[k];
    const bool decay = p.kind == ad::ParamKind::kWeight && cfg.weight_decay > 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = p.grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      if (decay) p.value[i] *= 1.0 - lr * cfg.weight_decay;
      p.value[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.adam_epsilon);
    }
  }
}

namespace {
bool finite(const LossValues& v) {
  return std::isfinite(v.total) && std::isfinite(v.aggregated) && std::isfinite(v.per_view) &&
         std::isfinite(v.consistency);
}
}  // namespace

std::vector<EpochLoss> train(CoTrainModel& model, const FeatureSources& sources,
                             const std::vector<TrainingInstance>& instances, const TrainConfig& cfg,
                             const EpochCallback& on_epoch) {
  cfg.validate();
  if (instances.empty()) throw InputError("training needs at least one instance");
  model.config = cfg;
  std::vector<std::size_t> order(instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<EpochLoss> trace;
  std::vector<TrainingInstance> batch;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order, model.rng);
    LossValues sum;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(instances[order[i]]);
      LossValues loss = compute_batch_gradients(model, sources, batch, cfg, Mode::kTrain, &model.rng);
      if (!finite(loss)) {
        throw TrainingError(fmt::format(
            "non-finite loss at epoch {}, batch starting at {}: total={} l1={} l2={} l3={}", epoch, start,
            loss.total, loss.aggregated, loss.per_view, loss.consistency));
      }
      adam_step(model, cfg);
      if (!model.all_finite()) {
        throw TrainingError(fmt::format("non-finite parameter after the update at epoch {}, batch starting at {}",
                                        epoch, start));
      }
      const double w = static_cast<double>(end - start);
      sum.total += w * loss.total;
      sum.aggregated += w * loss.aggregated;
      sum.per_view += w * loss.per_view;
      sum.consistency += w * loss.consistency;
    }
    const double n = static_cast<double>(order.size());
    EpochLoss e{epoch, {sum.total / n, sum.aggregated / n, sum.per_view / n, sum.consistency / n}};
    trace.push_back(e);
    if (on_epoch) on_epoch(e);
  }
  return trace;
}

std::vector<double> predict(CoTrainModel& model, const FeatureSources& sources, std::string_view query,
                            const MiniPath& path) {
  ForwardPass pass(model, sources, Mode::kEval);
  ad::Var probs = aggregate(pass.tape(), pass.views(query, path));
  auto v = pass.tape().value(probs);
  return {v.begin(), v.end()};
}

}  // namespace minipath
