#pragma once

#include <cstdint>
#include <vector>

#include "wassos/config.hpp"
#include "wassos/params.hpp"

namespace wassos::opt {

// Adam moments for one parameter group, indexed parallel to the registry
// (arrays for the other group stay empty).
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;
};

AdamState make_adam_state(const model::ModelParams& params, model::Group group);

// One bias-corrected Adam update from the gradients accumulated in
// params.grad for the given group.
void adam_step(model::ModelParams& params, model::Group group,
               AdamState& state, const RunConfig& config);

}  // namespace wassos::opt
