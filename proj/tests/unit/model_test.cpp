#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "minipath/error.hpp"
#include "minipath/model.hpp"
#include "support/fixtures.hpp"

using namespace minipath;
using minipath::testing::MicroData;
using minipath::testing::micro_data;
using minipath::testing::micro_dims;
using minipath::testing::micro_instances;

namespace {

std::vector<double> values(const ad::Tape& tape, ad::Var v) {
  auto s = tape.value(v);
  return {s.begin(), s.end()};
}

ViewLogits constant_logits(ad::Tape& tape, const std::vector<double>& d, const std::vector<double>& c,
                           const std::vector<double>& s) {
  return {tape.constant(d), tape.constant(c), tape.constant(s)};
}

std::vector<std::vector<double>> snapshot(CoTrainModel& m) {
  std::vector<std::vector<double>> out;
  for (ad::Param* p : m.params()) out.push_back(p->value);
  return out;
}

}  // namespace

TEST(Model, DimsArithmetic) {
  ModelDims d;
  d.path_length = 3;
  d.embedding_dim = 4;
  d.propagated_dim = 4;
  EXPECT_EQ(d.classes(), 4u);
  EXPECT_EQ(d.distributed_input(), 16u);
  EXPECT_EQ(d.lexsyn_input(), 21u);
  EXPECT_EQ(d.context_input(), 600u);
  EXPECT_EQ(dims_from_fields(to_fields(d)), d);
  ModelDims e = d;
  e.context.hidden = 7;
  EXPECT_NE(describe_mismatch(d, e).find("hidden"), std::string::npos);
  EXPECT_EQ(describe_mismatch(d, d), "");
}

TEST(Model, ParamsCoverEveryComponent) {
  MicroData data = micro_data();
  CoTrainModel m(micro_dims(data), 1);
  std::vector<std::string> names;
  for (ad::Param* p : m.params()) names.push_back(p->name);
  for (const char* expected : {"view_distributed.w1", "view_context.b2", "view_lexsyn.w2", "context.lstm_recurrent",
                               "context.attn_u", "gat.projection", "gat.position"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), expected), names.end()) << expected;
  }
  std::sort(names.begin(), names.end());
  EXPECT_EQ(std::adjacent_find(names.begin(), names.end()), names.end());
}

TEST(Model, ZeroWeightsGiveZeroLogits) {
  MicroData data = micro_data();
  FeatureSources src = data.sources();
  CoTrainModel m(micro_dims(data), 1);
  for (ViewClassifier* v : {&m.distributed_view, &m.context_view, &m.lexsyn_view}) {
    for (ad::Param* p : v->params()) std::fill(p->value.begin(), p->value.end(), 0.0);
  }
  ForwardPass pass(m, src, Mode::kEval);
  auto inst = micro_instances(data.taxonomy);
  ViewLogits y = pass.views("gamma", inst[0].path);
  for (ad::Var v : {y.distributed, y.context, y.lexsyn}) {
    auto z = values(pass.tape(), v);
    EXPECT_EQ(z.size(), 3u);
    for (double x : z) EXPECT_EQ(x, 0.0);
  }
}

TEST(Model, FourClassesForPathsOfThree) {
  Taxonomy t = Taxonomy::from_edges({{"r", "a"}, {"a", "b"}, {"b", "c"}});
  EmbeddingTable emb(4);
  DepPathStore deps;
  PairFrequencyTable freq;
  FeatureSources src{t, emb, deps, freq};
  ContextDims c;
  c.hidden = 6;
  c.attention = 5;
  ModelDims d = infer_dims(src, 3, 0, c, 8);
  EXPECT_EQ(d.propagated_dim, 4u);
  CoTrainModel m(d, 3);
  ForwardPass pass(m, src, Mode::kEval);
  auto y = pass.views("x", MiniPath{{0, 1, 2}});
  EXPECT_EQ(pass.tape().size(y.distributed), 4u);
  EXPECT_THROW(pass.views("x", MiniPath{{0, 1}}), ShapeError);
}

TEST(Model, EvaluationIsDeterministic) {
  MicroData data = micro_data();
  FeatureSources src = data.sources();
  CoTrainModel m(micro_dims(data), 5);
  m.config.dropout = 0.4;
  auto inst = micro_instances(data.taxonomy);
  EXPECT_EQ(predict(m, src, "gamma", inst[0].path), predict(m, src, "gamma", inst[0].path));
}

TEST(Model, TrainModeDropoutChangesOutputs) {
  MicroData data = micro_data();
  FeatureSources src = data.sources();
  CoTrainModel m(micro_dims(data), 5);
  m.config.dropout = 0.5;
  auto inst = micro_instances(data.taxonomy);
  Rng rng(1);
  ForwardPass a(m, src, Mode::kTrain, &rng);
  ForwardPass b(m, src, Mode::kTrain, &rng);
  EXPECT_NE(values(a.tape(), a.views("gamma", inst[0].path).lexsyn),
            values(b.tape(), b.views("gamma", inst[0].path).lexsyn));
}

TEST(Aggregate, Properties) {
  ad::Tape t;
  std::vector<double> z{0.3, -1.2, 2.0, 0.1};
  auto same = values(t, aggregate(t, constant_logits(t, z, z, z)));
  auto direct = values(t, t.softmax(t.constant(z)));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(same[i], direct[i], 1e-15);

  std::vector<double> zero(4, 0.0);
  for (double p : values(t, aggregate(t, constant_logits(t, zero, zero, zero)))) EXPECT_DOUBLE_EQ(p, 0.25);

  std::vector<double> a{1, 2, 3, 4}, b{-1, 0, 5, 2}, c{0.5, 0.5, -3, 1};
  auto base = values(t, aggregate(t, constant_logits(t, a, b, c)));
  auto shift = [](std::vector<double> v) {
    for (double& x : v) x += 7.25;
    return v;
  };
  auto shifted = values(t, aggregate(t, constant_logits(t, shift(a), shift(b), shift(c))));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(base[i], shifted[i], 1e-12);
  EXPECT_NEAR(std::accumulate(base.begin(), base.end(), 0.0), 1.0, 1e-12);

  EXPECT_THROW(aggregate(t, constant_logits(t, a, b, {1, 2})), ShapeError);
}

TEST(Loss, Identities) {
  Rng rng(4);
  ad::Tape t;
  std::vector<LabeledLogits> batch;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> d(4), c(4), s(4);
    for (auto* v : {&d, &c, &s}) {
      for (double& x : *v) x = uniform_real(rng, -3, 3);
    }
    batch.push_back({constant_logits(t, d, c, s), 1 + uniform_index(rng, 4)});
  }
  LossValues zero = values_of(t, co_training_loss(t, batch, 0.0, 0.0));
  EXPECT_EQ(zero.total, zero.aggregated);
  LossValues full = values_of(t, co_training_loss(t, batch, 0.1, 0.1));
  EXPECT_NEAR(full.total, full.aggregated + 0.1 * full.per_view + 0.1 * full.consistency, 1e-14);
  EXPECT_GT(full.consistency, 0.0);

  std::vector<LabeledLogits> equal;
  std::vector<double> z{0.2, -0.4, 1.0, 0.0};
  equal.push_back({constant_logits(t, z, z, z), 2});
  EXPECT_EQ(values_of(t, co_training_loss(t, equal, 0.1, 0.1)).consistency, 0.0);

  std::vector<LabeledLogits> uniform{{constant_logits(t, {0, 0, 0, 0}, {1, 1, 1, 1}, {-2, -2, -2, -2}), 3}};
  LossValues u = values_of(t, co_training_loss(t, uniform, 0.1, 0.1));
  EXPECT_NEAR(u.aggregated, std::log(4.0), 1e-15);
  EXPECT_NEAR(std::log(4.0), 1.3863, 1e-4);
}

TEST(Loss, HandComputedSingleInstance) {
  ad::Tape t;
  std::vector<double> d{1, 0}, c{0, 1}, s{0, 0};
  std::vector<LabeledLogits> one{{constant_logits(t, d, c, s), 1}};
  LossValues v = values_of(t, co_training_loss(t, one, 0.5, 2.0));
  const double e = std::exp(1.0);
  const double p1 = e / (1 + e);  // softmax(1, 0)[0]
  // Mean logits are (1/3, 1/3), so the aggregate is uniform.
  EXPECT_NEAR(v.aggregated, std::log(2.0), 1e-14);
  const double l2 = -std::log(p1) - std::log(1 - p1) - std::log(0.5);
  EXPECT_NEAR(v.per_view, l2, 1e-14);
  // Pairwise squared distances: (d,c) 2(2p1-1)^2, (d,s) and (c,s) 2(p1-0.5)^2 each.
  const double l3 = 2 * std::pow(2 * p1 - 1, 2) + 4 * std::pow(p1 - 0.5, 2);
  EXPECT_NEAR(v.consistency, l3, 1e-14);
  EXPECT_NEAR(v.total, std::log(2.0) + 0.5 * l2 + 2.0 * l3, 1e-14);
}

TEST(Loss, BatchPermutationInvariantAndLabelChecked) {
  Rng rng(5);
  std::vector<std::array<std::vector<double>, 3>> raw;
  std::vector<std::size_t> labels;
  for (int i = 0; i < 6; ++i) {
    std::array<std::vector<double>, 3> r;
    for (auto& v : r) {
      v.resize(3);
      for (double& x : v) x = uniform_real(rng, -2, 2);
    }
    raw.push_back(r);
    labels.push_back(1 + uniform_index(rng, 3));
  }
  auto loss_of = [&](const std::vector<std::size_t>& order) {
    ad::Tape t;
    std::vector<LabeledLogits> batch;
    for (std::size_t i : order) batch.push_back({constant_logits(t, raw[i][0], raw[i][1], raw[i][2]), labels[i]});
    return values_of(t, co_training_loss(t, batch, 0.1, 0.1)).total;
  };
  EXPECT_NEAR(loss_of({0, 1, 2, 3, 4, 5}), loss_of({5, 3, 1, 0, 2, 4}), 1e-14);

  ad::Tape t;
  std::vector<LabeledLogits> bad{{constant_logits(t, {0, 0}, {0, 0}, {0, 0}), 3}};
  EXPECT_THROW(co_training_loss(t, bad, 0.1, 0.1), InputError);
  bad[0].label = 0;
  EXPECT_THROW(co_training_loss(t, bad, 0.1, 0.1), InputError);
}

TEST(Model, FullGradientCheck) {
  MicroData data = micro_data();
  FeatureSources src = data.sources();
  CoTrainModel m(micro_dims(data), 11);
  auto batch = micro_instances(data.taxonomy);
  TrainConfig cfg;
  auto loss = [&] { return compute_batch_gradients(m, src, batch, cfg, Mode::kEval, nullptr).total; };
  ad::GradCheckResult r = ad::check_gradients(m.params(), loss);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
  std::size_t total = 0;
  for (ad::Param* p : m.params()) total += p->size();
  EXPECT_EQ(r.checked, total);
}

TEST(Optimizer, ZeroLearningRateLeavesParametersUnchanged) {
  MicroData data = micro_data();
  FeatureSources src = data.sources();
  CoTrainModel m(micro_dims(data), 2);
  auto before = snapshot(m);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 3;
  cfg.batch_size = 2;
  train(m, src, micro_instances(data.taxonomy), cfg);
  EXPECT_EQ(snapshot(m), before);
  EXPECT_EQ(m.optimizer.step, 6u);
}

TEST(Optimizer, DecayOnlyOnWeights) {
  MicroData data = micro_data();
  CoTrainModel m(micro_dims(data), 2);
  for (ad::Param* p : m.params()) {
    std::fill(p->value.begin(), p->value.end(), 1.0);
    p->zero_grad();
  }
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.5;
  adam_step(m, cfg);
  for (ad::Param* p : m.params()) {
    const double expected = p->kind == ad::ParamKind::kWeight ? 0.95 : 1.0;
    for (double v : p->value) ASSERT_DOUBLE_EQ(v, expected) << p->name;
  }
}

TEST(Optimizer, AdamMatchesHandUpdate) {
  MicroData data = micro_data();
  CoTrainModel m(micro_dims(data), 2);
  ad::Param& b = m.lexsyn_view.b2;
  for (ad::Param* p : m.params()) p->zero_grad();
  b.value = {0.0, 0.0, 0.0};
  b.grad = {0.5, -2.0, 0.0};
  TrainConfig cfg;
  adam_step(m, cfg);
  // First bias-corrected step moves by lr * g / (|g| + eps) = lr * sign(g).
  EXPECT_NEAR(b.value[0], -1e-3, 1e-10);
  EXPECT_NEAR(b.value[1], 1e-3, 1e-10);
  EXPECT_EQ(b.value[2], 0.0);
}

TEST(Training, SameSeedSameParameters) {
  MicroData data = micro_data();
  FeatureSources src = data.sources();
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 2;
  auto run = [&] {
    CoTrainModel m(micro_dims(data), 42);
    auto trace = train(m, src, micro_instances(data.taxonomy), cfg);
    return std::make_pair(snapshot(m), trace.back().loss.total);
  };
  auto a = run(), b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  CoTrainModel other(micro_dims(data), 43);
  EXPECT_NE(snapshot(other), a.first);
}

TEST(Training, OneStepReproducibleWithoutNoise) {
  MicroData data = micro_data();
  FeatureSources src = data.sources();
  TrainConfig cfg;
  cfg.weight_decay = 0.0;
  cfg.dropout = 0.0;
  cfg.epochs = 1;
  cfg.batch_size = 3;
  CoTrainModel a(micro_dims(data), 9), b(micro_dims(data), 9);
  train(a, src, micro_instances(data.taxonomy), cfg);
  train(b, src, micro_instances(data.taxonomy), cfg);
  EXPECT_EQ(snapshot(a), snapshot(b));
}

TEST(Training, LossDecreasesOnToyData) {
  Taxonomy t = Taxonomy::from_edges({{"root", "a"}, {"root", "b"}, {"a", "c"}, {"a", "d"}, {"b", "e"},
                                     {"b", "f"}, {"c", "g"}, {"e", "h"}});
  EmbeddingTable emb(6);
  Rng rng(3);
  for (const Term& term : t.terms()) {
    std::vector<double> v(6);
    for (double& x : v) x = uniform_real(rng, -1, 1);
    emb.insert(term.key, v);
  }
  DepPathStore deps;
  PairFrequencyTable freq;
  for (const Edge& e : t.edges()) freq.add(t.term(e.parent).key, t.term(e.child).key, 2);
  FeatureSources src{t, emb, deps, freq};
  SamplerConfig sc;
  sc.path_length = 2;
  auto set = build_training_set(t, sc);
  ContextDims c;
  c.hidden = 8;
  c.attention = 8;
  CoTrainModel m(infer_dims(src, 2, 0, c, 16), 1);
  TrainConfig cfg;
  auto trace = train(m, src, set, cfg);
  ASSERT_EQ(trace.size(), 40u);
  EXPECT_LT(trace.back().loss.aggregated, trace.front().loss.aggregated);
  EXPECT_TRUE(m.all_finite());
}

TEST(Training, RejectsBadConfig) {
  MicroData data = micro_data();
  FeatureSources src = data.sources();
  CoTrainModel m(micro_dims(data), 1);
  TrainConfig cfg;
  cfg.dropout = 1.0;
  EXPECT_THROW(train(m, src, micro_instances(data.taxonomy), cfg), InputError);
  cfg = {};
  EXPECT_THROW(train(m, src, {}, cfg), InputError);
  cfg.lambda = -1;
  EXPECT_THROW(cfg.validate(), InputError);
}

TEST(Training, NonFiniteLossAborts) {
  MicroData data = micro_data();
  FeatureSources src = data.sources();
  CoTrainModel m(micro_dims(data), 1);
  m.lexsyn_view.b2.value[0] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(train(m, src, micro_instances(data.taxonomy), cfg), TrainingError);
}
