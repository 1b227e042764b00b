#include "wassos/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace wassos::opt {

AdamState make_adam_state(const model::ModelParams& params,
                          model::Group group) {
  AdamState state;
  const auto& all = params.all();
  state.m.resize(all.size());
  state.v.resize(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].group == group) {
      state.m[i].assign(all[i].numel(), 0.0);
      state.v[i].assign(all[i].numel(), 0.0);
    }
  }
  return state;
}

void adam_step(model::ModelParams& params, model::Group group,
               AdamState& state, const RunConfig& config) {
  auto& all = params.all();
  if (state.m.size() != all.size()) {
    throw std::invalid_argument("adam_step: state does not match registry");
  }
  state.t += 1;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double correct1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double correct2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < all.size(); ++i) {
    model::Param& p = all[i];
    if (p.group != group) continue;
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      state.m[i][k] = b1 * state.m[i][k] + (1.0 - b1) * g;
      state.v[i][k] = b2 * state.v[i][k] + (1.0 - b2) * g * g;
      const double mhat = state.m[i][k] / correct1;
      const double vhat = state.v[i][k] / correct2;
      p.value[k] -=
          config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_epsilon);
    }
  }
}

}  // namespace wassos::opt
