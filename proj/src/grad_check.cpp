#include "wassos/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wassos::diff {

namespace {

double eval_loss(const LossBuilder& f,
                 const std::vector<std::vector<int>>& shapes,
                 const std::vector<std::vector<double>>& values) {
  Tape tape;
  std::vector<Tensor> leaves;
  leaves.reserve(values.size());
  for (std::size_t b = 0; b < values.size(); ++b) {
    leaves.push_back(tape.input(shapes[b], values[b], /*requires_grad=*/true));
  }
  return f(tape, leaves).scalar_value();
}

}  // namespace

double grad_check(const LossBuilder& f,
                  const std::vector<std::vector<int>>& shapes,
                  const std::vector<std::vector<double>>& values,
                  double epsilon) {
  if (shapes.size() != values.size()) {
    throw std::invalid_argument("grad_check: shapes/values count mismatch");
  }

  // Analytic pass.
  std::vector<std::vector<double>> grads;
  {
    Tape tape;
    std::vector<Tensor> leaves;
    for (std::size_t b = 0; b < values.size(); ++b) {
      leaves.push_back(
          tape.input(shapes[b], values[b], /*requires_grad=*/true));
    }
    Tensor loss = f(tape, leaves);
    tape.backward(loss);
    for (const Tensor& leaf : leaves) grads.push_back(tape.grad(leaf));
  }

  double worst = 0.0;
  std::vector<std::vector<double>> probe = values;
  for (std::size_t b = 0; b < probe.size(); ++b) {
    for (std::size_t i = 0; i < probe[b].size(); ++i) {
      const double keep = probe[b][i];
      probe[b][i] = keep + epsilon;
      const double hi = eval_loss(f, shapes, probe);
      probe[b][i] = keep - epsilon;
      const double lo = eval_loss(f, shapes, probe);
      probe[b][i] = keep;

      const double fd = (hi - lo) / (2.0 * epsilon);
      const double g = grads[b][i];
      const double denom = std::max({std::fabs(g), std::fabs(fd), 1e-3});
      worst = std::max(worst, std::fabs(g - fd) / denom);
    }
  }
  return worst;
}

}  // namespace wassos::diff
