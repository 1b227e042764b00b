#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace wassos::diff {

class Tape;

// Handle into a Tape. Cheap to copy; the tape owns all storage.
struct Tensor {
  Tape* tape = nullptr;
  int id = -1;

  const std::vector<int>& shape() const;
  const std::vector<double>& value() const;
  double scalar_value() const;
  std::size_t numel() const;
  bool requires_grad() const;
};

// Straight-line computation record. Nodes are appended in execution order,
// so reverse iteration is a valid topological order for backpropagation.
// A tape is confined to one thread; distinct tapes may run concurrently.
class Tape {
 public:
  explicit Tape(bool check_finite = true) : check_finite_(check_finite) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf node. When grad_sink is non-null, backward() accumulates this
  // leaf's gradient into it (used to bind persistent model parameters).
  Tensor input(std::vector<int> shape, std::vector<double> values,
               bool requires_grad = false,
               std::vector<double>* grad_sink = nullptr);
  Tensor input(std::vector<int> shape, std::span<const double> values,
               bool requires_grad = false,
               std::vector<double>* grad_sink = nullptr);
  Tensor scalar(double v);
  Tensor zeros(std::vector<int> shape);

  // Reverse pass from a scalar loss. Gradients for every node on a path to
  // the loss are accumulated; leaves with sinks receive their gradient via
  // operator +=. Leaves not on any path keep zero gradients.
  void backward(const Tensor& loss);

  // Gradient of the last backward() target with respect to t.
  const std::vector<double>& grad(const Tensor& t) const;

  std::size_t size() const { return nodes_.size(); }
  bool check_finite() const { return check_finite_; }

  // -- Surface for defining operations. Model code should stay on the free
  // functions below; this exists so op implementations can record nodes.
  struct Node {
    std::vector<int> shape;
    std::vector<double> value;
    std::vector<int> parents;
    // Accumulates parent gradients given this node's gradient. Null for
    // leaves and for nodes no differentiable input flows into.
    std::function<void(Tape&, int self)> backward;
    bool requires_grad = false;
    std::vector<double>* grad_sink = nullptr;
  };

  int emit(Node node, const char* op_name);
  std::vector<double>& grad_buf(int id);
  Node& node(int id) { return nodes_[id]; }
  const Node& node(int id) const { return nodes_[id]; }

 private:
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  bool check_finite_;
};

// ---- Forward operations -------------------------------------------------
// All operations throw std::invalid_argument on shape mismatch (the message
// names both shapes) and record themselves when any input requires grad.

// (m,k)x(k,n) -> (m,n); (m,k)x(k) -> (m).
Tensor matmul(Tensor a, Tensor b);

// Elementwise; one operand may be a scalar (single-element) tensor.
Tensor add(Tensor a, Tensor b);
Tensor add(Tensor a, double c);
Tensor multiply(Tensor a, Tensor b);
Tensor multiply(Tensor a, double c);

// 1-D concatenation.
Tensor concat(std::span<const Tensor> parts);
Tensor concat(Tensor a, Tensor b);
Tensor concat(Tensor a, Tensor b, Tensor c);

// slice(t, start, len) on 1-D tensors; slice(t, dim, start, len) on 2-D.
Tensor slice(Tensor t, int start, int len);
Tensor slice(Tensor t, int dim, int start, int len);

Tensor reshape(Tensor t, std::vector<int> shape);

Tensor tanh(Tensor t);
Tensor sigmoid(Tensor t);
Tensor exp(Tensor t);
Tensor log(Tensor t);

// 1-D, numerically stable.
Tensor softmax(Tensor t);
Tensor log_softmax(Tensor t);

// Row of a (V,E) table as a (E) vector; gradient scatters into that row.
Tensor embedding_lookup(Tensor table, int row);

// -sum_j target[j] * log_softmax(logits)[j], scalar output.
Tensor cross_entropy(Tensor logits, std::span<const double> target);

// -log_softmax(logits)[index], scalar output.
Tensor nll_of_index(Tensor logits, int index);

Tensor sum(Tensor t);
Tensor mean(Tensor t);

// Copies values into a fresh non-differentiable leaf, blocking gradients.
Tensor detach(Tensor t);

}  // namespace wassos::diff
