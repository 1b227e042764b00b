#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wassos/neural_model.hpp"
#include "wassos/optimizer.hpp"
#include "wassos/params.hpp"

namespace wassos::train {

struct EpochStats {
  int epoch = 0;            // 1-based global epoch number
  double mean_total = 0.0;  // per-cluster mean of the weighted total
  bool has_validation = false;
  double val_elbo = 0.0;  // zero-noise negated ELBO mean over the eval split
};

struct TrainOutcome {
  std::vector<EpochStats> history;  // one entry per epoch this call ran
  std::uint64_t step = 0;           // cumulative main-phase updates
  std::uint64_t adversary_updates = 0;
};

// Alternating adversary/main updates over seed-shuffled training clusters,
// gradients averaged per batch, KL scale warmed up linearly over the first
// tenth of all main steps when configured. `step` is the resume cursor:
// checkpoints land on epoch boundaries only, so step / steps_per_epoch is
// the next epoch to run. A checkpoint goes to checkpoint_path (when
// nonempty) every config.checkpoint_every epochs and at the end. One loss
// line per epoch is printed to log; the validation figure appears when
// eval_set is nonempty. Deterministic in config.seed. Throws DataError on
// an empty training set and std::runtime_error on a non-finite loss, naming
// the component.
TrainOutcome run_training(model::ModelParams& params,
                          opt::AdamState& adam_main,
                          opt::AdamState& adam_adversary, std::uint64_t step,
                          const std::vector<model::PreparedCluster>& train_set,
                          const std::vector<model::PreparedCluster>& eval_set,
                          const std::string& checkpoint_path,
                          std::ostream& log);

}  // namespace wassos::train
