#include "wassos/training.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "wassos/checkpoint.hpp"
#include "wassos/errors.hpp"
#include "wassos/rng.hpp"
#include "wassos/tensor.hpp"

namespace wassos::train {

namespace {

void scale_grads(model::ModelParams& params, model::Group group, double s) {
  for (auto& p : params.all()) {
    if (p.group != group) continue;
    for (double& g : p.grad) g *= s;
  }
}

void require_finite(const model::LossBreakdown& bd, std::uint64_t step,
                    const std::string& cluster_id) {
  const std::pair<const char*, double> parts[] = {
      {"elbo", bd.elbo_negated},   {"sem_mul", bd.l_sem_mul},
      {"syn_mul", bd.l_syn_mul},   {"sem_adv", bd.l_sem_adv},
      {"syn_adv", bd.l_syn_adv},   {"rec_adv", bd.l_rec_adv},
      {"wass", bd.l_wass},         {"total", bd.total}};
  for (const auto& [name, value] : parts) {
    if (!std::isfinite(value)) {
      throw std::runtime_error("training: non-finite " + std::string(name) +
                               " at step " + std::to_string(step) +
                               " on cluster " + cluster_id);
    }
  }
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed,
                                     std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  CounterRng rng(seed, epoch, 0, RngPurpose::Shuffle);
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = rng.next_below(i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

double validation_elbo(const std::vector<model::PreparedCluster>& eval_set,
                       model::ModelParams& params) {
  model::LossContext ctx;
  ctx.noise.seed = params.config().seed;
  ctx.noise.zero = true;
  ctx.kl_scale = 1.0;
  double sum = 0.0;
  for (const auto& cluster : eval_set) {
    sum += model::total_loss(cluster, params, ctx).elbo_negated;
  }
  return sum / static_cast<double>(eval_set.size());
}

}  // namespace

TrainOutcome run_training(model::ModelParams& params,
                          opt::AdamState& adam_main,
                          opt::AdamState& adam_adversary, std::uint64_t step,
                          const std::vector<model::PreparedCluster>& train_set,
                          const std::vector<model::PreparedCluster>& eval_set,
                          const std::string& checkpoint_path,
                          std::ostream& log) {
  const RunConfig& cfg = params.config();
  if (train_set.empty()) throw DataError("training: no training clusters");

  const std::uint64_t n = train_set.size();
  const std::uint64_t batch = static_cast<std::uint64_t>(cfg.batch);
  const std::uint64_t steps_per_epoch = (n + batch - 1) / batch;
  const std::uint64_t total_steps =
      steps_per_epoch * static_cast<std::uint64_t>(cfg.epochs);
  const std::uint64_t warmup_steps = cfg.kl_warmup ? (total_steps + 9) / 10 : 0;
  auto kl_scale = [&](std::uint64_t s) {
    if (warmup_steps == 0) return 1.0;
    return std::min(1.0, static_cast<double>(s + 1) /
                             static_cast<double>(warmup_steps));
  };

  TrainOutcome outcome;
  const std::uint64_t start_epoch = step / steps_per_epoch;

  for (std::uint64_t e = start_epoch;
       e < static_cast<std::uint64_t>(cfg.epochs); ++e) {
    const std::vector<std::size_t> order = epoch_order(n, cfg.seed, e);
    double epoch_sum = 0.0;
    std::uint64_t epoch_count = 0;

    for (std::uint64_t lo = 0; lo < n; lo += batch) {
      const std::uint64_t hi = std::min(n, lo + batch);
      const double inv = 1.0 / static_cast<double>(hi - lo);

      if (cfg.disentangle) {
        params.zero_grads(model::Group::Adversary);
        for (std::uint64_t b = lo; b < hi; ++b) {
          const auto& cluster = train_set[order[b]];
          model::LossContext ctx;
          ctx.noise.seed = cfg.seed;
          ctx.noise.step = step * batch + (b - lo);
          ctx.kl_scale = kl_scale(step);
          try {
            diff::Tape tape;
            model::ParamBinder bind(tape, params, model::Phase::Adversary);
            diff::Tensor loss = model::adversary_loss_t(bind, cluster, ctx);
            tape.backward(loss);
          } catch (const DataError&) {
            throw;
          } catch (const std::runtime_error& err) {
            throw std::runtime_error("training: step " + std::to_string(step) +
                                     " cluster " + cluster.cluster_id + ": " +
                                     err.what());
          }
        }
        scale_grads(params, model::Group::Adversary, inv);
        opt::adam_step(params, model::Group::Adversary, adam_adversary, cfg);
        ++params.adversary_updates;
      }

      params.zero_grads(model::Group::Main);
      for (std::uint64_t b = lo; b < hi; ++b) {
        const auto& cluster = train_set[order[b]];
        model::LossContext ctx;
        ctx.noise.seed = cfg.seed;
        ctx.noise.step = step * batch + (b - lo);
        ctx.kl_scale = kl_scale(step);
        model::LossBreakdown bd;
        try {
          diff::Tape tape;
          model::ParamBinder bind(tape, params, model::Phase::Main);
          diff::Tensor loss = model::total_loss_t(bind, cluster, ctx, &bd);
          tape.backward(loss);
        } catch (const DataError&) {
          throw;
        } catch (const std::runtime_error& err) {
          throw std::runtime_error("training: step " + std::to_string(step) +
                                   " cluster " + cluster.cluster_id + ": " +
                                   err.what());
        }
        require_finite(bd, step, cluster.cluster_id);
        epoch_sum += bd.total;
        ++epoch_count;
      }
      scale_grads(params, model::Group::Main, inv);
      opt::adam_step(params, model::Group::Main, adam_main, cfg);
      ++step;
    }

    EpochStats stats;
    stats.epoch = static_cast<int>(e) + 1;
    stats.mean_total = epoch_sum / static_cast<double>(epoch_count);
    if (!eval_set.empty()) {
      stats.has_validation = true;
      stats.val_elbo = validation_elbo(eval_set, params);
    }
    outcome.history.push_back(stats);

    std::ostringstream line;
    line << "epoch " << stats.epoch << "/" << cfg.epochs << " total "
         << std::fixed << std::setprecision(6) << stats.mean_total;
    if (stats.has_validation) line << " val_elbo " << stats.val_elbo;
    log << line.str() << "\n" << std::flush;

    const bool last = e + 1 == static_cast<std::uint64_t>(cfg.epochs);
    if (!checkpoint_path.empty() && !last && cfg.checkpoint_every > 0 &&
        (e + 1) % static_cast<std::uint64_t>(cfg.checkpoint_every) == 0) {
      ckpt::save_checkpoint(checkpoint_path, params, adam_main,
                            adam_adversary, step, params.adversary_updates);
    }
  }

  if (!checkpoint_path.empty()) {
    ckpt::save_checkpoint(checkpoint_path, params, adam_main, adam_adversary,
                          step, params.adversary_updates);
  }

  outcome.step = step;
  outcome.adversary_updates = params.adversary_updates;
  return outcome;
}

}  // namespace wassos::train
