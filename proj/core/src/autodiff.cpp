#include "minipath/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "minipath/error.hpp"

namespace minipath::ad {

Param::Param(std::string n, std::size_t r, std::size_t c, ParamKind k)
    : name(std::move(n)), rows(r), cols(c), kind(k), value(r * c, 0.0), grad(r * c, 0.0) {}

void Param::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

namespace {
void require_same_size(std::size_t a, std::size_t b, const char* op) {
  if (a != b) throw ShapeError(fmt::format("{}: size mismatch {} vs {}", op, a, b));
}
}  // namespace

Var Tape::push(std::vector<double> value, bool needs_grad, Backward backward) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(nodes_.size() - 1);
}

const Tape::Node& Tape::node(Var v) const {
  if (v.index_ >= nodes_.size()) throw std::out_of_range("tape variable out of range");
  return nodes_[v.index_];
}

std::span<const double> Tape::val(std::size_t i) const {
  const Node& n = nodes_[i];
  return n.param ? std::span<const double>(n.param->value) : std::span<const double>(n.value);
}

std::span<double> Tape::gref(std::size_t i) {
  Node& n = nodes_[i];
  return n.param ? std::span<double>(n.param->grad) : std::span<double>(n.grad);
}

std::span<const double> Tape::value(Var v) const {
  node(v);
  return val(v.index_);
}

double Tape::scalar(Var v) const {
  auto s = value(v);
  if (s.size() != 1) throw ShapeError(fmt::format("expected a scalar, got size {}", s.size()));
  return s[0];
}

std::span<const double> Tape::grad(Var v) const {
  const Node& n = node(v);
  return n.param ? std::span<const double>(n.param->grad) : std::span<const double>(n.grad);
}

Var Tape::constant(std::vector<double> v) { return push(std::move(v), false, nullptr); }

Var Tape::param(Param& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var(it->second);
  Node n;
  n.param = &p;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return Var(nodes_.size() - 1);
}

Var Tape::matvec(Var w, Var x) {
  const Param* p = node(w).param;
  if (!p) throw ShapeError("matvec: left operand must be a matrix parameter");
  const std::size_t rows = p->rows, cols = p->cols;
  require_same_size(cols, size(x), "matvec");
  auto wv = val(w.index_);
  auto xv = val(x.index_);
  std::vector<double> out(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* wr = wv.data() + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += wr[j] * xv[j];
    out[i] = acc;
  }
  const std::size_t wi = w.index_, xi = x.index_;
  const bool need_x = needs(x);
  return push(std::move(out), true, [wi, xi, rows, cols, need_x](Tape& t, std::size_t self) {
    auto g = t.gref(self);
    auto wv = t.val(wi);
    auto xv = t.val(xi);
    auto gw = t.gref(wi);
    for (std::size_t i = 0; i < rows; ++i) {
      const double gi = g[i];
      if (gi == 0.0) continue;
      double* gwr = gw.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) gwr[j] += gi * xv[j];
    }
    if (need_x) {
      auto gx = t.gref(xi);
      for (std::size_t i = 0; i < rows; ++i) {
        const double gi = g[i];
        if (gi == 0.0) continue;
        const double* wr = wv.data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) gx[j] += wr[j] * gi;
      }
    }
  });
}

Var Tape::row(Var table, std::size_t i) {
  const Param* p = node(table).param;
  if (!p) throw ShapeError("row: operand must be a matrix parameter");
  if (i >= p->rows) throw ShapeError(fmt::format("row {} of '{}' with {} rows", i, p->name, p->rows));
  const std::size_t cols = p->cols, ti = table.index_;
  auto tv = val(ti);
  std::vector<double> out(tv.begin() + i * cols, tv.begin() + (i + 1) * cols);
  return push(std::move(out), true, [ti, i, cols](Tape& t, std::size_t self) {
    auto g = t.gref(self);
    auto gt = t.gref(ti);
    for (std::size_t j = 0; j < cols; ++j) gt[i * cols + j] += g[j];
  });
}

Var Tape::add(Var a, Var b) {
  require_same_size(size(a), size(b), "add");
  auto av = val(a.index_), bv = val(b.index_);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  const std::size_t ai = a.index_, bi = b.index_;
  const bool na = needs(a), nb = needs(b);
  return push(std::move(out), na || nb, [ai, bi, na, nb](Tape& t, std::size_t self) {
    auto g = t.gref(self);
    if (na) {
      auto ga = t.gref(ai);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (nb) {
      auto gb = t.gref(bi);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
}

Var Tape::sub(Var a, Var b) {
  require_same_size(size(a), size(b), "sub");
  auto av = val(a.index_), bv = val(b.index_);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  const std::size_t ai = a.index_, bi = b.index_;
  const bool na = needs(a), nb = needs(b);
  return push(std::move(out), na || nb, [ai, bi, na, nb](Tape& t, std::size_t self) {
    auto g = t.gref(self);
    if (na) {
      auto ga = t.gref(ai);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (nb) {
      auto gb = t.gref(bi);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  require_same_size(size(a), size(b), "mul");
  auto av = val(a.index_), bv = val(b.index_);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const std::size_t ai = a.index_, bi = b.index_;
  const bool na = needs(a), nb = needs(b);
  return push(std::move(out), na || nb, [ai, bi, na, nb](Tape& t, std::size_t self) {
    auto g = t.gref(self);
    auto av = t.val(ai), bv = t.val(bi);
    if (na) {
      auto ga = t.gref(ai);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (nb) {
      auto gb = t.gref(bi);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var Tape::scale(Var a, double c) {
  auto av = val(a.index_);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
  const std::size_t ai = a.index_;
  return push(std::move(out), needs(a), [ai, c](Tape& t, std::size_t self) {
    auto g = t.gref(self);
    auto ga = t.gref(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
  });
}

Var Tape::mul_scalar(Var s, Var v) {
  require_same_size(size(s), 1, "mul_scalar");
  const double sv = val(s.index_)[0];
  auto vv = val(v.index_);
  std::vector<double> out(vv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sv * vv[i];
  const std::size_t si = s.index_, vi = v.index_;
  const bool ns = needs(s), nv = needs(v);
  return push(std::move(out), ns || nv, [si, vi, ns, nv](Tape& t, std::size_t self) {
    auto g = t.gref(self);
    auto vv = t.val(vi);
    if (ns) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * vv[i];
      t.gref(si)[0] += acc;
    }
    if (nv) {
      const double sv = t.val(si)[0];
      auto gv = t.gref(vi);
      for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i] * sv;
    }
  });
}

Var Tape::add_scalar(Var a, double c) {
  auto av = val(a.index_);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + c;
  const std::size_t ai = a.index_;
  return push(std::move(out), needs(a), [ai](Tape& t, std::size_t self) {
    auto g = t.gref(self);
    auto ga = t.gref(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var Tape::concat(std::span<const Var> parts) {
  std::vector<double> out;
  std::vector<std::size_t> idx;
  bool any = false;
  for (Var p : parts) {
    auto pv = value(p);
    out.insert(out.end(), pv.begin(), pv.end());
    idx.push_back(p.index_);
    any = any || needs(p);
  }
  return push(std::move(out), any, [idx = std::move(idx)](Tape& t, std::size_t self) {
    auto g = t.gref(self);
    std::size_t off = 0;
    for (std::size_t pi : idx) {
      const std::size_t n = t.val(pi).size();
      if (t.nodes_[pi].needs_grad) {
        auto gp = t.gref(pi);
        for (std::size_t i = 0; i < n; ++i) gp[i] += g[off + i];
      }
      off += n;
    }
  });
}

Var Tape::slice(Var a, std::size_t offset, std::size_t length) {
  auto av = value(a);
  if (offset + length > av.size()) throw ShapeError("slice out of range");
  std::vector<double> out(av.begin() + offset, av.begin() + offset + length);
  const std::size_t ai = a.index_;
  return push(std::move(out), needs(a), [ai, offset](Tape& t, std::size_t self) {
    auto g = t.gref(self);
    auto ga = t.gref(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[offset + i] += g[i];
  });
}

Var Tape::relu(Var a) { return leaky_relu(a, 0.0); }

Var Tape::leaky_relu(Var a, double slope) {
  auto av = value(a);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : slope * av[i];
  const std::size_t ai = a.index_;
  return push(std::move(out), needs(a), [ai, slope](Tape& t, std::size_t self) {
    auto g = t.gref(self);
    auto av = t.val(ai);
    auto ga = t.gref(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += av[i] > 0.0 ? g[i] : slope * g[i];
  });
}

Var Tape::tanh(Var a) {
  auto av = value(a);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(av[i]);
  const std::size_t ai = a.index_;
  return push(std::move(out), needs(a), [ai](Tape& t, std::size_t self) {
    auto g = t.gref(self);
    auto y = t.val(self);
    auto ga = t.gref(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var Tape::sigmoid(Var a) {
  auto av = value(a);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = av[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-av[i])) : std::exp(av[i]) / (1.0 + std::exp(av[i]));
  }
  const std::size_t ai = a.index_;
  return push(std::move(out), needs(a), [ai](Tape& t, std::size_t self) {
    auto g = t.gref(self);
    auto y = t.val(self);
    auto ga = t.gref(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var Tape::softmax(Var a) {
  auto av = value(a);
  if (av.empty()) throw ShapeError("softmax of an empty vector");
  const double m = *std::max_element(av.begin(), av.end());
  std::vector<double> out(av.size());
  double z = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) z += out[i] = std::exp(av[i] - m);
  for (double& v : out) v /= z;
  const std::size_t ai = a.index_;
  return push(std::move(out), needs(a), [ai](Tape& t, std::size_t self) {
    auto g = t.gref(self);
    auto y = t.val(self);
    double gy = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) gy += g[i] * y[i];
    auto ga = t.gref(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += y[i] * (g[i] - gy);
  });
}

Var Tape::log_softmax(Var a) {
  auto av = value(a);
  if (av.empty()) throw ShapeError("log_softmax of an empty vector");
  const double m = *std::max_element(av.begin(), av.end());
  double z = 0.0;
  for (double v : av) z += std::exp(v - m);
  const double lse = m + std::log(z);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - lse;
  const std::size_t ai = a.index_;
  return push(std::move(out), needs(a), [ai](Tape& t, std::size_t self) {
    auto g = t.gref(self);
    auto y = t.val(self);
    double gs = 0.0;
    for (double gi : g) gs += gi;
    auto ga = t.gref(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] - std::exp(y[i]) * gs;
  });
}

Var Tape::log(Var a) {
  auto av = value(a);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(av[i]);
  const std::size_t ai = a.index_;
  return push(std::move(out), needs(a), [ai](Tape& t, std::size_t self) {
    auto g = t.gref(self);
    auto av = t.val(ai);
    auto ga = t.gref(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / av[i];
  });
}

Var Tape::dropout(Var a, std::vector<double> mask) {
  require_same_size(size(a), mask.size(), "dropout");
  auto av = value(a);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * mask[i];
  const std::size_t ai = a.index_;
  return push(std::move(out), needs(a), [ai, mask = std::move(mask)](Tape& t, std::size_t self) {
    auto g = t.gref(self);
    auto ga = t.gref(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
  });
}

Var Tape::sum(Var a) {
  auto av = value(a);
  double s = 0.0;
  for (double v : av) s += v;
  const std::size_t ai = a.index_;
  return push({s}, needs(a), [ai](Tape& t, std::size_t self) {
    const double g = t.gref(self)[0];
    for (double& ga : t.gref(ai)) ga += g;
  });
}

Var Tape::dot(Var a, Var b) {
  require_same_size(size(a), size(b), "dot");
  auto av = val(a.index_), bv = val(b.index_);
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  const std::size_t ai = a.index_, bi = b.index_;
  const bool na = needs(a), nb = needs(b);
  return push({s}, na || nb, [ai, bi, na, nb](Tape& t, std::size_t self) {
    const double g = t.gref(self)[0];
    auto av = t.val(ai), bv = t.val(bi);
    if (na) {
      auto ga = t.gref(ai);
      for (std::size_t i = 0; i < av.size(); ++i) ga[i] += g * bv[i];
    }
    if (nb) {
      auto gb = t.gref(bi);
      for (std::size_t i = 0; i < av.size(); ++i) gb[i] += g * av[i];
    }
  });
}

Var Tape::pick(Var a, std::size_t i) { return slice(a, i, 1); }

Var Tape::sq_norm(Var a) {
  auto av = value(a);
  double s = 0.0;
  for (double v : av) s += v * v;
  const std::size_t ai = a.index_;
  return push({s}, needs(a), [ai](Tape& t, std::size_t self) {
    const double g = t.gref(self)[0];
    auto av = t.val(ai);
    auto ga = t.gref(ai);
    for (std::size_t i = 0; i < av.size(); ++i) ga[i] += 2.0 * g * av[i];
  });
}

Var Tape::l2_norm(Var a) {
  auto av = value(a);
  double s = 0.0;
  for (double v : av) s += v * v;
  const double n = std::sqrt(s);
  const std::size_t ai = a.index_;
  return push({n}, needs(a), [ai](Tape& t, std::size_t self) {
    const double g = t.gref(self)[0];
    const double n = t.val(self)[0];
    if (n == 0.0) return;  // subgradient 0 at the origin
    auto av = t.val(ai);
    auto ga = t.gref(ai);
    for (std::size_t i = 0; i < av.size(); ++i) ga[i] += g * av[i] / n;
  });
}

Var Tape::add_n(std::span<const Var> scalars) {
  double s = 0.0;
  std::vector<std::size_t> idx;
  bool any = false;
  for (Var v : scalars) {
    s += scalar(v);
    idx.push_back(v.index_);
    any = any || needs(v);
  }
  return push({s}, any, [idx = std::move(idx)](Tape& t, std::size_t self) {
    const double g = t.gref(self)[0];
    for (std::size_t i : idx) {
      if (t.nodes_[i].needs_grad) t.gref(i)[0] += g;
    }
  });
}

void Tape::backward(Var target) {
  if (size(target) != 1) throw ShapeError("backward target must be a scalar");
  for (Node& n : nodes_) {
    if (!n.param && n.needs_grad) n.grad.assign(n.value.size(), 0.0);
  }
  if (!nodes_[target.index_].needs_grad) return;
  gref(target.index_)[0] += 1.0;
  for (std::size_t i = target.index_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward) n.backward(*this, i);
  }
}

GradCheckResult check_gradients(const std::vector<Param*>& params, const std::function<double()>& loss,
                                double step, double abs_floor) {
  GradCheckResult result;
  loss();
  std::vector<std::vector<double>> analytic;
  for (Param* p : params) analytic.push_back(p->grad);

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Param& p = *params[pi];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + step;
      const double up = loss();
      p.value[i] = saved - step;
      const double down = loss();
      p.value[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[pi][i];
      const double abs_err = std::abs(a - numeric);
      const double scale = std::max({std::abs(a), std::abs(numeric), abs_floor});
      const double rel = abs_err / scale;
      result.max_abs_error = std::max(result.max_abs_error, abs_err);
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst = fmt::format("{}[{}] analytic={:.10g} numeric={:.10g}", p.name, i, a, numeric);
      }
      ++result.checked;
    }
  }
  loss();
  return result;
}

}  // namespace minipath::ad
