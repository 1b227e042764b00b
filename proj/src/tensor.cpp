#include "wassos/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wassos::diff {

namespace {

std::size_t numel_of(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

[[noreturn]] void shape_error(const char* op, const std::vector<int>& a,
                              const std::vector<int>& b) {
  std::ostringstream os;
  os << op << ": shape mismatch " << shape_str(a) << " vs " << shape_str(b);
  throw std::invalid_argument(os.str());
}

void require_same_tape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.tape != b.tape) {
    throw std::invalid_argument(std::string(op) +
                                ": operands from different tapes");
  }
}

}  // namespace

// ---- Tensor accessors ------------------------------------------------------

const std::vector<int>& Tensor::shape() const { return tape->node(id).shape; }

const std::vector<double>& Tensor::value() const {
  return tape->node(id).value;
}

double Tensor::scalar_value() const {
  const auto& v = value();
  if (v.size() != 1) {
    throw std::invalid_argument("scalar_value: tensor has shape " +
                                shape_str(shape()));
  }
  return v[0];
}

std::size_t Tensor::numel() const { return value().size(); }

bool Tensor::requires_grad() const { return tape->node(id).requires_grad; }

// ---- Tape ------------------------------------------------------------------

int Tape::emit(Node node, const char* op_name) {
  if (check_finite_) {
    for (double v : node.value) {
      if (!std::isfinite(v)) {
        throw std::runtime_error(std::string(op_name) +
                                 ": produced a non-finite value");
      }
    }
  }
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::input(std::vector<int> shape, std::vector<double> values,
                   bool requires_grad, std::vector<double>* grad_sink) {
  if (numel_of(shape) != values.size()) {
    std::ostringstream os;
    os << "input: shape " << shape_str(shape) << " expects " << numel_of(shape)
       << " values, got " << values.size();
    throw std::invalid_argument(os.str());
  }
  Node n;
  n.shape = std::move(shape);
  n.value = std::move(values);
  n.requires_grad = requires_grad;
  n.grad_sink = grad_sink;
  return Tensor{this, emit(std::move(n), "input")};
}

Tensor Tape::input(std::vector<int> shape, std::span<const double> values,
                   bool requires_grad, std::vector<double>* grad_sink) {
  return input(std::move(shape),
               std::vector<double>(values.begin(), values.end()),
               requires_grad, grad_sink);
}

Tensor Tape::scalar(double v) { return input({1}, std::vector<double>{v}); }

Tensor Tape::zeros(std::vector<int> shape) {
  std::vector<double> values(numel_of(shape), 0.0);
  return input(std::move(shape), std::move(values));
}

std::vector<double>& Tape::grad_buf(int id) {
  if (grads_[id].empty()) {
    grads_[id].assign(nodes_[id].value.size(), 0.0);
  }
  return grads_[id];
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape != this) {
    throw std::invalid_argument("backward: loss from a different tape");
  }
  const Node& ln = nodes_[loss.id];
  if (ln.value.size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, has shape " +
                                shape_str(ln.shape));
  }
  if (!ln.requires_grad) {
    throw std::runtime_error(
        "backward: loss is detached from every differentiable input");
  }
  grads_.assign(nodes_.size(), {});
  grad_buf(loss.id)[0] = 1.0;
  // Reverse creation order is a topological order of the straight-line record.
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || grads_[id].empty()) continue;
    if (n.backward) n.backward(*this, id);
    if (n.grad_sink) {
      auto& sink = *n.grad_sink;
      const auto& g = grads_[id];
      for (std::size_t i = 0; i < g.size(); ++i) sink[i] += g[i];
    }
  }
}

const std::vector<double>& Tape::grad(const Tensor& t) const {
  if (grads_.size() != nodes_.size()) {
    throw std::runtime_error("grad: backward() has not run on this tape");
  }
  auto* self = const_cast<Tape*>(this);
  return self->grad_buf(t.id);
}

// ---- Op implementation helpers ----------------------------------------------

namespace {

bool any_grad(std::initializer_list<Tensor> ts) {
  for (const Tensor& t : ts) {
    if (t.requires_grad()) return true;
  }
  return false;
}

}  // namespace

// Each op builds a Node whose backward closure reads values/grads through the
// tape by node id, so closures stay valid as the node vector reallocates.

Tensor matmul(Tensor a, Tensor b) {
  require_same_tape(a, b, "matmul");
  Tape& tape = *a.tape;
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa.size() != 2 || (sb.size() != 1 && sb.size() != 2)) {
    shape_error("matmul", sa, sb);
  }
  const int m = sa[0], k = sa[1];
  const bool vec = sb.size() == 1;
  const int n = vec ? 1 : sb[1];
  if (sb[0] != k) shape_error("matmul", sa, sb);

  const auto& av = a.value();
  const auto& bv = b.value();
  Tape::Node node;
  node.shape = vec ? std::vector<int>{m} : std::vector<int>{m, n};
  node.value.assign(static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < k; ++j) {
      const double aij = av[i * k + j];
      if (aij == 0.0) continue;
      for (int c = 0; c < n; ++c) {
        node.value[i * n + c] += aij * bv[j * n + c];
      }
    }
  }
  node.parents = {a.id, b.id};
  node.requires_grad = any_grad({a, b});
  if (node.requires_grad) {
    const int aid = a.id, bid = b.id;
    node.backward = [aid, bid, m, k, n](Tape& t, int self) {
      const auto& g = t.grad_buf(self);
      const auto& av = t.node(aid).value;
      const auto& bv = t.node(bid).value;
      if (t.node(aid).requires_grad) {
        auto& ga = t.grad_buf(aid);
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < k; ++j) {
            double acc = 0.0;
            for (int c = 0; c < n; ++c) acc += g[i * n + c] * bv[j * n + c];
            ga[i * k + j] += acc;
          }
        }
      }
      if (t.node(bid).requires_grad) {
        auto& gb = t.grad_buf(bid);
        for (int j = 0; j < k; ++j) {
          for (int c = 0; c < n; ++c) {
            double acc = 0.0;
            for (int i = 0; i < m; ++i) acc += av[i * k + j] * g[i * n + c];
            gb[j * n + c] += acc;
          }
        }
      }
    };
  }
  return Tensor{&tape, tape.emit(std::move(node), "matmul")};
}

namespace {

enum class Elementwise { Add, Mul };

Tensor binary_elementwise(Tensor a, Tensor b, Elementwise kind) {
  const char* name = kind == Elementwise::Add ? "add" : "multiply";
  require_same_tape(a, b, name);
  Tape& tape = *a.tape;
  // One operand may be a single-element tensor; it broadcasts.
  const bool a_scalar = a.numel() == 1 && b.numel() != 1;
  const bool b_scalar = b.numel() == 1 && a.numel() != 1;
  if (!a_scalar && !b_scalar && a.shape() != b.shape()) {
    shape_error(name, a.shape(), b.shape());
  }
  Tensor big = a_scalar ? b : a;
  const auto& av = a.value();
  const auto& bv = b.value();
  const std::size_t n = big.numel();

  Tape::Node node;
  node.shape = big.shape();
  node.value.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a_scalar ? av[0] : av[i];
    const double y = b_scalar ? bv[0] : bv[i];
    node.value[i] = kind == Elementwise::Add ? x + y : x * y;
  }
  node.parents = {a.id, b.id};
  node.requires_grad = any_grad({a, b});
  if (node.requires_grad) {
    const int aid = a.id, bid = b.id;
    node.backward = [aid, bid, a_scalar, b_scalar, kind, n](Tape& t,
                                                            int self) {
      const auto& g = t.grad_buf(self);
      const auto& av = t.node(aid).value;
      const auto& bv = t.node(bid).value;
      if (t.node(aid).requires_grad) {
        auto& ga = t.grad_buf(aid);
        for (std::size_t i = 0; i < n; ++i) {
          const double factor =
              kind == Elementwise::Add ? 1.0 : (b_scalar ? bv[0] : bv[i]);
          ga[a_scalar ? 0 : i] += g[i] * factor;
        }
      }
      if (t.node(bid).requires_grad) {
        auto& gb = t.grad_buf(bid);
        for (std::size_t i = 0; i < n; ++i) {
          const double factor =
              kind == Elementwise::Add ? 1.0 : (a_scalar ? av[0] : av[i]);
          gb[b_scalar ? 0 : i] += g[i] * factor;
        }
      }
    };
  }
  return Tensor{&tape, tape.emit(std::move(node), name)};
}

}  // namespace

Tensor add(Tensor a, Tensor b) { return binary_elementwise(a, b, Elementwise::Add); }
Tensor add(Tensor a, double c) { return add(a, a.tape->scalar(c)); }
Tensor multiply(Tensor a, Tensor b) {
  return binary_elementwise(a, b, Elementwise::Mul);
}
Tensor multiply(Tensor a, double c) { return multiply(a, a.tape->scalar(c)); }

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) {
    throw std::invalid_argument("concat: no operands");
  }
  Tape& tape = *parts[0].tape;
  Tape::Node node;
  std::vector<int> offsets;
  int total = 0;
  bool rg = false;
  for (const Tensor& p : parts) {
    require_same_tape(parts[0], p, "concat");
    if (p.shape().size() != 1) {
      throw std::invalid_argument("concat: operands must be 1-D, got " +
                                  shape_str(p.shape()));
    }
    offsets.push_back(total);
    total += p.shape()[0];
    node.value.insert(node.value.end(), p.value().begin(), p.value().end());
    node.parents.push_back(p.id);
    rg = rg || p.requires_grad();
  }
  node.shape = {total};
  node.requires_grad = rg;
  if (rg) {
    std::vector<int> ids(node.parents);
    node.backward = [ids, offsets](Tape& t, int self) {
      const auto& g = t.grad_buf(self);
      for (std::size_t p = 0; p < ids.size(); ++p) {
        if (!t.node(ids[p]).requires_grad) continue;
        auto& gp = t.grad_buf(ids[p]);
        for (std::size_t i = 0; i < gp.size(); ++i) {
          gp[i] += g[offsets[p] + i];
        }
      }
    };
  }
  return Tensor{&tape, tape.emit(std::move(node), "concat")};
}

Tensor concat(Tensor a, Tensor b) {
  const Tensor parts[] = {a, b};
  return concat(std::span<const Tensor>(parts, 2));
}

Tensor concat(Tensor a, Tensor b, Tensor c) {
  const Tensor parts[] = {a, b, c};
  return concat(std::span<const Tensor>(parts, 3));
}

Tensor slice(Tensor t, int start, int len) {
  if (t.shape().size() != 1) {
    throw std::invalid_argument("slice: expected 1-D tensor, got " +
                                shape_str(t.shape()));
  }
  const int n = t.shape()[0];
  if (start < 0 || len < 1 || start + len > n) {
    std::ostringstream os;
    os << "slice: range [" << start << "," << start + len
       << ") out of bounds for length " << n;
    throw std::invalid_argument(os.str());
  }
  Tape& tape = *t.tape;
  Tape::Node node;
  node.shape = {len};
  node.value.assign(t.value().begin() + start, t.value().begin() + start + len);
  node.parents = {t.id};
  node.requires_grad = t.requires_grad();
  if (node.requires_grad) {
    const int tid = t.id;
    node.backward = [tid, start, len](Tape& tp, int self) {
      const auto& g = tp.grad_buf(self);
      auto& gt = tp.grad_buf(tid);
      for (int i = 0; i < len; ++i) gt[start + i] += g[i];
    };
  }
  return Tensor{&tape, tape.emit(std::move(node), "slice")};
}

Tensor slice(Tensor t, int dim, int start, int len) {
  if (t.shape().size() != 2 || (dim != 0 && dim != 1)) {
    throw std::invalid_argument("slice: expected 2-D tensor and dim 0 or 1, got " +
                                shape_str(t.shape()));
  }
  const int rows = t.shape()[0], cols = t.shape()[1];
  const int limit = dim == 0 ? rows : cols;
  if (start < 0 || len < 1 || start + len > limit) {
    std::ostringstream os;
    os << "slice: range [" << start << "," << start + len
       << ") out of bounds for dim of size " << limit;
    throw std::invalid_argument(os.str());
  }
  Tape& tape = *t.tape;
  const auto& v = t.value();
  Tape::Node node;
  if (dim == 0) {
    node.shape = {len, cols};
    node.value.assign(v.begin() + static_cast<std::size_t>(start) * cols,
                      v.begin() + static_cast<std::size_t>(start + len) * cols);
  } else {
    node.shape = {rows, len};
    node.value.reserve(static_cast<std::size_t>(rows) * len);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < len; ++c) {
        node.value.push_back(v[r * cols + start + c]);
      }
    }
  }
  node.parents = {t.id};
  node.requires_grad = t.requires_grad();
  if (node.requires_grad) {
    const int tid = t.id;
    node.backward = [tid, dim, start, len, rows, cols](Tape& tp, int self) {
      const auto& g = tp.grad_buf(self);
      auto& gt = tp.grad_buf(tid);
      if (dim == 0) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          gt[static_cast<std::size_t>(start) * cols + i] += g[i];
        }
      } else {
        for (int r = 0; r < rows; ++r) {
          for (int c = 0; c < len; ++c) {
            gt[r * cols + start + c] += g[r * len + c];
          }
        }
      }
    };
  }
  return Tensor{&tape, tape.emit(std::move(node), "slice")};
}

Tensor reshape(Tensor t, std::vector<int> shape) {
  if (numel_of(shape) != t.numel()) shape_error("reshape", t.shape(), shape);
  Tape& tape = *t.tape;
  Tape::Node node;
  node.shape = std::move(shape);
  node.value = t.value();
  node.parents = {t.id};
  node.requires_grad = t.requires_grad();
  if (node.requires_grad) {
    const int tid = t.id;
    node.backward = [tid](Tape& tp, int self) {
      const auto& g = tp.grad_buf(self);
      auto& gt = tp.grad_buf(tid);
      for (std::size_t i = 0; i < g.size(); ++i) gt[i] += g[i];
    };
  }
  return Tensor{&tape, tape.emit(std::move(node), "reshape")};
}

namespace {

// y = f(x) elementwise with derivative expressed in terms of x and y.
Tensor unary_elementwise(Tensor t, const char* name, double (*fwd)(double),
                         double (*dfd)(double x, double y)) {
  Tape& tape = *t.tape;
  Tape::Node node;
  node.shape = t.shape();
  node.value.resize(t.numel());
  const auto& v = t.value();
  for (std::size_t i = 0; i < v.size(); ++i) node.value[i] = fwd(v[i]);
  node.parents = {t.id};
  node.requires_grad = t.requires_grad();
  if (node.requires_grad) {
    const int tid = t.id;
    node.backward = [tid, dfd](Tape& tp, int self) {
      const auto& g = tp.grad_buf(self);
      const auto& x = tp.node(tid).value;
      const auto& y = tp.node(self).value;
      auto& gt = tp.grad_buf(tid);
      for (std::size_t i = 0; i < g.size(); ++i) {
        gt[i] += g[i] * dfd(x[i], y[i]);
      }
    };
  }
  return Tensor{&tape, tape.emit(std::move(node), name)};
}

}  // namespace

Tensor tanh(Tensor t) {
  return unary_elementwise(
      t, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(Tensor t) {
  return unary_elementwise(
      t, "sigmoid",
      [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(Tensor t) {
  return unary_elementwise(
      t, "exp", [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Tensor log(Tensor t) {
  for (double v : t.value()) {
    if (!(v > 0.0)) {
      throw std::invalid_argument("log: input must be positive, got " +
                                  std::to_string(v));
    }
  }
  return unary_elementwise(
      t, "log", [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

namespace {

// Stable log-sum-exp plus the softmax vector of a 1-D input.
void softmax_forward(const std::vector<double>& x, std::vector<double>& soft,
                     double* lse_out) {
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  double z = 0.0;
  soft.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    soft[i] = std::exp(x[i] - mx);
    z += soft[i];
  }
  for (double& s : soft) s /= z;
  if (lse_out) *lse_out = mx + std::log(z);
}

void require_1d(const Tensor& t, const char* op) {
  if (t.shape().size() != 1) {
    throw std::invalid_argument(std::string(op) + ": expected 1-D tensor, got " +
                                shape_str(t.shape()));
  }
}

}  // namespace

Tensor softmax(Tensor t) {
  require_1d(t, "softmax");
  Tape& tape = *t.tape;
  Tape::Node node;
  node.shape = t.shape();
  softmax_forward(t.value(), node.value, nullptr);
  node.parents = {t.id};
  node.requires_grad = t.requires_grad();
  if (node.requires_grad) {
    const int tid = t.id;
    node.backward = [tid](Tape& tp, int self) {
      const auto& g = tp.grad_buf(self);
      const auto& y = tp.node(self).value;
      auto& gt = tp.grad_buf(tid);
      double dot = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
      for (std::size_t i = 0; i < g.size(); ++i) {
        gt[i] += y[i] * (g[i] - dot);
      }
    };
  }
  return Tensor{&tape, tape.emit(std::move(node), "softmax")};
}

Tensor log_softmax(Tensor t) {
  require_1d(t, "log_softmax");
  Tape& tape = *t.tape;
  Tape::Node node;
  node.shape = t.shape();
  std::vector<double> soft;
  double lse = 0.0;
  softmax_forward(t.value(), soft, &lse);
  node.value.resize(t.numel());
  const auto& x = t.value();
  for (std::size_t i = 0; i < x.size(); ++i) node.value[i] = x[i] - lse;
  node.parents = {t.id};
  node.requires_grad = t.requires_grad();
  if (node.requires_grad) {
    const int tid = t.id;
    node.backward = [tid, soft](Tape& tp, int self) {
      const auto& g = tp.grad_buf(self);
      auto& gt = tp.grad_buf(tid);
      double total = 0.0;
      for (double gi : g) total += gi;
      for (std::size_t i = 0; i < g.size(); ++i) {
        gt[i] += g[i] - soft[i] * total;
      }
    };
  }
  return Tensor{&tape, tape.emit(std::move(node), "log_softmax")};
}

Tensor embedding_lookup(Tensor table, int row) {
  if (table.shape().size() != 2) {
    throw std::invalid_argument("embedding_lookup: expected 2-D table, got " +
                                shape_str(table.shape()));
  }
  const int rows = table.shape()[0], cols = table.shape()[1];
  if (row < 0 || row >= rows) {
    std::ostringstream os;
    os << "embedding_lookup: row " << row << " out of range [0," << rows << ")";
    throw std::invalid_argument(os.str());
  }
  Tape& tape = *table.tape;
  Tape::Node node;
  node.shape = {cols};
  node.value.assign(table.value().begin() + static_cast<std::size_t>(row) * cols,
                    table.value().begin() + static_cast<std::size_t>(row + 1) * cols);
  node.parents = {table.id};
  node.requires_grad = table.requires_grad();
  if (node.requires_grad) {
    const int tid = table.id;
    node.backward = [tid, row, cols](Tape& tp, int self) {
      const auto& g = tp.grad_buf(self);
      auto& gt = tp.grad_buf(tid);
      for (int c = 0; c < cols; ++c) {
        gt[static_cast<std::size_t>(row) * cols + c] += g[c];
      }
    };
  }
  return Tensor{&tape, tape.emit(std::move(node), "embedding_lookup")};
}

Tensor cross_entropy(Tensor logits, std::span<const double> target) {
  require_1d(logits, "cross_entropy");
  if (static_cast<std::size_t>(logits.shape()[0]) != target.size()) {
    shape_error("cross_entropy", logits.shape(),
                {static_cast<int>(target.size())});
  }
  Tape& tape = *logits.tape;
  std::vector<double> soft;
  double lse = 0.0;
  softmax_forward(logits.value(), soft, &lse);
  const auto& x = logits.value();
  double loss = 0.0;
  double target_mass = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    loss -= target[i] * (x[i] - lse);
    target_mass += target[i];
  }
  Tape::Node node;
  node.shape = {1};
  node.value = {loss};
  node.parents = {logits.id};
  node.requires_grad = logits.requires_grad();
  if (node.requires_grad) {
    const int lid = logits.id;
    std::vector<double> t_copy(target.begin(), target.end());
    node.backward = [lid, soft, t_copy, target_mass](Tape& tp, int self) {
      const double g = tp.grad_buf(self)[0];
      auto& gl = tp.grad_buf(lid);
      for (std::size_t i = 0; i < gl.size(); ++i) {
        gl[i] += g * (target_mass * soft[i] - t_copy[i]);
      }
    };
  }
  return Tensor{&tape, tape.emit(std::move(node), "cross_entropy")};
}

Tensor nll_of_index(Tensor logits, int index) {
  require_1d(logits, "nll_of_index");
  const int n = logits.shape()[0];
  if (index < 0 || index >= n) {
    std::ostringstream os;
    os << "nll_of_index: index " << index << " out of range [0," << n << ")";
    throw std::invalid_argument(os.str());
  }
  Tape& tape = *logits.tape;
  std::vector<double> soft;
  double lse = 0.0;
  softmax_forward(logits.value(), soft, &lse);
  Tape::Node node;
  node.shape = {1};
  node.value = {lse - logits.value()[index]};
  node.parents = {logits.id};
  node.requires_grad = logits.requires_grad();
  if (node.requires_grad) {
    const int lid = logits.id;
    node.backward = [lid, soft, index](Tape& tp, int self) {
      const double g = tp.grad_buf(self)[0];
      auto& gl = tp.grad_buf(lid);
      for (std::size_t i = 0; i < gl.size(); ++i) {
        gl[i] += g * (soft[i] - (static_cast<int>(i) == index ? 1.0 : 0.0));
      }
    };
  }
  return Tensor{&tape, tape.emit(std::move(node), "nll_of_index")};
}

namespace {

Tensor reduce(Tensor t, const char* name, bool take_mean) {
  Tape& tape = *t.tape;
  const auto& v = t.value();
  double total = 0.0;
  for (double x : v) total += x;
  const double scale = take_mean ? 1.0 / static_cast<double>(v.size()) : 1.0;
  Tape::Node node;
  node.shape = {1};
  node.value = {total * scale};
  node.parents = {t.id};
  node.requires_grad = t.requires_grad();
  if (node.requires_grad) {
    const int tid = t.id;
    node.backward = [tid, scale](Tape& tp, int self) {
      const double g = tp.grad_buf(self)[0] * scale;
      auto& gt = tp.grad_buf(tid);
      for (double& gi : gt) gi += g;
    };
  }
  return Tensor{&tape, tape.emit(std::move(node), name)};
}

}  // namespace

Tensor sum(Tensor t) { return reduce(t, "sum", false); }
Tensor mean(Tensor t) { return reduce(t, "mean", true); }

Tensor detach(Tensor t) {
  return t.tape->input(t.shape(), t.value(), /*requires_grad=*/false);
}

}  // namespace wassos::diff
