#pragma once

#include <functional>
#include <vector>

#include "wassos/tensor.hpp"

namespace wassos::diff {

// Builds a scalar loss on the given tape from differentiable leaves that hold
// the supplied parameter blocks. Called many times with perturbed copies.
using LossBuilder =
    std::function<Tensor(Tape&, const std::vector<Tensor>& params)>;

// Compares backward() against central finite differences over every
// coordinate of every parameter block; returns the worst relative error
// |g - fd| / max(|g|, |fd|, 1e-3). A well-behaved op lands at or below 1e-4
// with the default epsilon.
double grad_check(const LossBuilder& f,
                  const std::vector<std::vector<int>>& shapes,
                  const std::vector<std::vector<double>>& values,
                  double epsilon = 1e-5);

}  // namespace wassos::diff
