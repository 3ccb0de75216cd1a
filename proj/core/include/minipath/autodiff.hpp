#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

// Reverse-mode differentiation over dense double-precision vectors and
// row-major matrices. A Tape records one forward computation; backward()
// accumulates gradients into the Params that were read.
namespace minipath::ad {

enum class ParamKind { kWeight, kBias, kEmbedding };

// Trainable tensor. Matrices are row-major with shape rows x cols; vectors
// have cols == 1.
struct Param {
  Param() = default;
  Param(std::string name, std::size_t rows, std::size_t cols, ParamKind kind);

  std::size_t size() const noexcept { return value.size(); }
  void zero_grad();

  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 1;
  ParamKind kind = ParamKind::kWeight;
  std::vector<double> value;
  std::vector<double> grad;
};

class Var {
 public:
  Var() = default;
  std::size_t index() const noexcept { return index_; }

 private:
  friend class Tape;
  explicit Var(std::size_t i) : index_(i) {}
  std::size_t index_ = static_cast<std::size_t>(-1);
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(std::vector<double> v);
  Var constant(std::span<const double> v) { return constant(std::vector<double>(v.begin(), v.end())); }
  Var scalar_constant(double x) { return constant(std::vector<double>{x}); }
  // Reads a parameter; repeated calls on one tape share a node.
  Var param(Param& p);

  std::span<const double> value(Var v) const;
  double scalar(Var v) const;
  std::size_t size(Var v) const { return value(v).size(); }
  // Gradient of the last backward() target with respect to v.
  std::span<const double> grad(Var v) const;

  // Matrix-vector product; w must be a matrix parameter.
  Var matvec(Var w, Var x);
  // Row i of a matrix parameter (embedding lookup).
  Var row(Var table, std::size_t i);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  // Scalar variable s times vector v.
  Var mul_scalar(Var s, Var v);
  Var add_scalar(Var a, double c);
  Var concat(std::span<const Var> parts);
  Var slice(Var a, std::size_t offset, std::size_t length);
  Var relu(Var a);
  Var leaky_relu(Var a, double slope);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var softmax(Var a);
  Var log_softmax(Var a);
  Var log(Var a);
  // Elementwise product with a fixed mask; inverted dropout passes mask
  // entries of 0 or 1 / (1 - rate).
  Var dropout(Var a, std::vector<double> mask);
  Var sum(Var a);
  Var dot(Var a, Var b);
  Var pick(Var a, std::size_t i);
  Var sq_norm(Var a);
  Var l2_norm(Var a);
  // Sum of scalar variables.
  Var add_n(std::span<const Var> scalars);

  // Seeds d(target)/d(target) = 1 and propagates to every node and Param.
  void backward(Var target);

  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    std::vector<double> value;
    std::vector<double> grad;
    Param* param = nullptr;
    bool needs_grad = false;
    std::function<void(Tape&, std::size_t)> backward;
  };

  using Backward = std::function<void(Tape&, std::size_t)>;
  Var push(std::vector<double> value, bool needs_grad, Backward backward);
  const Node& node(Var v) const;
  std::span<const double> val(std::size_t i) const;
  std::span<double> gref(std::size_t i);
  bool needs(Var v) const { return nodes_[v.index_].needs_grad; }

  std::vector<Node> nodes_;
  std::unordered_map<const Param*, std::size_t> param_nodes_;
};

// Gradient check helpers shared by tests.
struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::string worst;  // "param[index]" of the worst entry
  std::size_t checked = 0;
};

// Compares analytic gradients of loss() with central differences for every
// entry of every parameter. loss must be a pure function of parameter
// values that runs forward+backward and returns the loss value; the caller's
// loss() is responsible for zeroing and filling Param::grad. The relative
// error of an entry is |analytic - numeric| / max(|analytic|, |numeric|,
// abs_floor); the floor keeps entries at round-off level from dominating.
GradCheckResult check_gradients(const std::vector<Param*>& params, const std::function<double()>& loss,
                                double step = 1e-5, double abs_floor = 1e-6);

}  // namespace minipath::ad
