#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "minipath/autodiff.hpp"
#include "minipath/context.hpp"
#include "minipath/embedding.hpp"
#include "minipath/graph_attention.hpp"
#include "minipath/lexsyn.hpp"
#include "minipath/random.hpp"
#include "minipath/sampling.hpp"
#include "minipath/taxonomy.hpp"

namespace minipath {

struct ModelDims {
  std::size_t path_length = 3;
  std::size_t embedding_dim = 8;
  std::size_t propagated_dim = 8;
  std::size_t classifier_hidden = 50;
  ContextDims context;

  std::size_t classes() const noexcept { return path_length + 1; }
  std::size_t distributed_input() const noexcept { return embedding_dim + path_length * propagated_dim; }
  std::size_t context_input() const noexcept { return path_length * context.hidden; }
  std::size_t lexsyn_input() const noexcept { return path_length * LexSynVector::kDim; }

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// Flat "key=value" view of the dims, used by checkpoints and config echo.
std::map<std::string, std::string> to_fields(const ModelDims& dims);
ModelDims dims_from_fields(const std::map<std::string, std::string>& fields);
// Human-readable list of differing fields, empty when equal.
std::string describe_mismatch(const ModelDims& expected, const ModelDims& actual);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 40;
  double dropout = 0.4;
  double weight_decay = 5e-4;
  double lambda = 0.1;  // weight of the per-view losses
  double mu = 0.1;      // weight of the consistency loss
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  // Throws InputError on out-of-range values.
  void validate() const;
};

// One-hidden-layer perceptron producing logits: W2 relu(W1 h + b1) + b2.
struct ViewClassifier {
  ViewClassifier() = default;
  ViewClassifier(std::string name, std::size_t input, std::size_t hidden, std::size_t classes);

  void init(Rng& rng);
  std::vector<ad::Param*> params();
  ad::Var logits(ad::Tape& tape, ad::Var features, const BlockTransform& hidden_dropout = nullptr);

  ad::Param w1, b1, w2, b2;
};

struct OptimizerState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;
};

class CoTrainModel {
 public:
  CoTrainModel(const ModelDims& dims, std::uint64_t init_seed);

  CoTrainModel(const CoTrainModel&) = delete;
  CoTrainModel& operator=(const CoTrainModel&) = delete;
  CoTrainModel(CoTrainModel&&) = default;
  CoTrainModel& operator=(CoTrainModel&&) = default;

  const ModelDims& dims() const noexcept { return dims_; }
  // Every trainable tensor in a fixed order.
  std::vector<ad::Param*> params();
  std::vector<const ad::Param*> params() const;
  void zero_grad();
  bool all_finite() const;

  GatParams gat;
  ContextEncoderParams context;
  ViewClassifier distributed_view;
  ViewClassifier context_view;
  ViewClassifier lexsyn_view;
  OptimizerState optimizer;
  Rng rng;  // training stream: shuffling and dropout masks
  TrainConfig config;

 private:
  ModelDims dims_;
};

// Inputs the three views read. The taxonomy provides anchor surfaces and the
// graph for propagation.
struct FeatureSources {
  const Taxonomy& taxonomy;
  const EmbeddingTable& embeddings;
  const DepPathStore& dep_paths;
  const PairFrequencyTable& frequencies;
  std::size_t suffix_k = 3;
};

// Builds ModelDims from the data sources and feature settings.
ModelDims infer_dims(const FeatureSources& sources, std::size_t path_length, std::size_t propagated_dim,
                     const ContextDims& context_settings, std::size_t classifier_hidden);

struct FeatureBundle {
  ad::Var distributed;  // h_d
  ad::Var context;      // h_c
  ad::Var lexsyn;       // h_s
};

struct ViewLogits {
  ad::Var distributed;
  ad::Var context;
  ad::Var lexsyn;
};

enum class Mode { kTrain, kEval };

// One forward computation on its own tape. Propagated anchors and pooled
// context blocks are computed once per tape and shared across paths.
class ForwardPass {
 public:
  // In kTrain mode dropout masks are drawn from `dropout_rng` (may be null
  // for no dropout). `propagated`, if given, supplies frozen anchor vectors.
  ForwardPass(CoTrainModel& model, const FeatureSources& sources, Mode mode, Rng* dropout_rng = nullptr,
              const std::vector<std::vector<double>>* propagated = nullptr);

  ad::Tape& tape() noexcept { return tape_; }
  FeatureBundle features(std::string_view query, const MiniPath& path);
  ViewLogits views(const FeatureBundle& bundle);
  ViewLogits views(std::string_view query, const MiniPath& path) { return views(features(query, path)); }

 private:
  ad::Var dropout(ad::Var v);

  CoTrainModel& model_;
  const FeatureSources& sources_;
  Mode mode_;
  Rng* rng_;
  const std::vector<std::vector<double>>* propagated_;
  ad::Tape tape_;
  PropagationMemo anchors_;
  std::map<std::pair<std::string, TermId>, ad::Var> context_blocks_;
};

// softmax((y_d + y_c + y_s) / 3)
ad::Var aggregate(ad::Tape& tape, const ViewLogits& logits);

struct LossVars {
  ad::Var total, aggregated, per_view, consistency;
};

struct LossValues {
  double total = 0.0;
  double aggregated = 0.0;   // l1
  double per_view = 0.0;     // l2
  double consistency = 0.0;  // l3
};

struct LabeledLogits {
  ViewLogits logits;
  std::size_t label = 0;  // 1-based
};

// Batch-mean losses: l1 is the NLL of the aggregated distribution, l2 the sum
// of per-view NLLs, l3 the summed squared distances between the per-view
// probability vectors over unordered view pairs; total = l1 + lambda l2 + mu l3.
LossVars co_training_loss(ad::Tape& tape, std::span<const LabeledLogits> batch, double lambda, double mu);
LossValues values_of(const ad::Tape& tape, const LossVars& vars);

// Forward + backward for a batch of training instances; fills Param::grad.
LossValues compute_batch_gradients(CoTrainModel& model, const FeatureSources& sources,
                                   std::span<const TrainingInstance> batch, const TrainConfig& cfg, Mode mode,
                                   Rng* dropout_rng);

// AdamW step: decoupled weight decay on kWeight tensors only.
void adam_step(CoTrainModel& model, const TrainConfig& cfg);

struct EpochLoss {
  std::size_t epoch = 0;  // 1-based
  LossValues loss;        // instance-weighted mean over the epoch
};

using EpochCallback = std::function<void(const EpochLoss&)>;

// cfg.epochs passes of shuffled mini-batches. Deterministic given the model
// state (parameters and training stream). Throws TrainingError on a non-finite loss or parameter.
std::vector<EpochLoss> train(CoTrainModel& model, const FeatureSources& sources,
                             const std::vector<TrainingInstance>& instances, const TrainConfig& cfg,
                             const EpochCallback& on_epoch = nullptr);

// Aggregated class distribution for one (query, path) in evaluation mode.
std::vector<double> predict(CoTrainModel& model, const FeatureSources& sources, std::string_view query,
                            const MiniPath& path);

}  // namespace minipath
