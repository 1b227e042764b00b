#include "wassos/summarizer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "wassos/errors.hpp"

namespace wassos::summarizer {

using diff::Tape;
using diff::Tensor;
using model::EncodedDoc;
using model::ModelParams;
using model::ParamBinder;
using model::Phase;
using model::PreparedCluster;

namespace {

struct ClusterInference {
  std::vector<EncodedDoc> encs;
  model::SummaryTensors summary;
};

// Encode every document at the posterior mean and build the summary-side
// tensors on the caller's tape.
ClusterInference infer(ParamBinder& bind, const PreparedCluster& cluster,
                       Strategy strategy) {
  if (cluster.docs.empty()) {
    throw std::invalid_argument("summarizer: empty cluster");
  }
  ClusterInference out;
  std::vector<Tensor> z_full;
  for (const auto& doc : cluster.docs) {
    EncodedDoc enc = model::encode_t(bind, doc.token_ids);
    if (bind.params().config().disentangle) {
      z_full.push_back(diff::concat(enc.mu_sem, enc.mu_syn));
    } else {
      z_full.push_back(enc.mu_sem);
    }
    out.encs.push_back(std::move(enc));
  }
  out.summary = model::summary_tensors(bind, out.encs, z_full, strategy);
  return out;
}

}  // namespace

SummaryDistributions summary_distributions(const PreparedCluster& cluster,
                                           ModelParams& params,
                                           Strategy strategy) {
  Tape tape;
  ParamBinder bind(tape, params, Phase::Main, /*frozen=*/true);
  const ClusterInference inf = infer(bind, cluster, strategy);

  SummaryDistributions out;
  out.strategy = strategy;
  out.v_sem_s = {inf.summary.mu_sem_s.value(), inf.summary.logstd_sem_s.value()};
  if (params.config().disentangle) {
    out.v_syn_s = {inf.summary.mu_syn_s.value(),
                   inf.summary.logstd_syn_s.value()};
  }
  out.doc_weights_w = inf.summary.w.value();
  out.doc_weights_lambda = inf.summary.lambda.value();
  return out;
}

namespace {

struct Beam {
  std::vector<int> tokens;
  Tensor state;
  double logprob_sum = 0.0;
  bool finished = false;
};

double normalized_score(const Beam& b) {
  return b.logprob_sum / static_cast<double>(b.tokens.size());
}

// One greedy/beam rollout; width 1 is exactly the greedy path.
Beam beam_rollout(ParamBinder& bind, Tensor z, Tensor memory,
                  const Tensor* attn_bias, int width, int max_len) {
  Beam start;
  start.state = model::decoder_init_state(bind, z);
  std::vector<Beam> live = {start};
  std::vector<Beam> done;

  for (int step = 0; step < max_len && !live.empty(); ++step) {
    struct Candidate {
      std::size_t beam;
      int token;
      double sum;
      Tensor state;
    };
    std::vector<Candidate> cands;
    for (std::size_t b = 0; b < live.size(); ++b) {
      const int prev =
          live[b].tokens.empty() ? corpus::Vocabulary::kBos : live[b].tokens.back();
      auto [logits, next] =
          model::decoder_step_t(bind, prev, live[b].state, z, memory,
                                attn_bias);
      const std::vector<double> lp = diff::log_softmax(logits).value();
      for (int tok = 0; tok < static_cast<int>(lp.size()); ++tok) {
        if (tok == corpus::Vocabulary::kPad || tok == corpus::Vocabulary::kUnk ||
            tok == corpus::Vocabulary::kBos) {
          continue;
        }
        if (tok == corpus::Vocabulary::kEos && live[b].tokens.empty()) {
          continue;  // keeps every summary non-empty
        }
        cands.push_back({b, tok, live[b].logprob_sum + lp[tok], next});
      }
    }
    const std::size_t keep = std::min<std::size_t>(width, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.sum != b.sum) return a.sum > b.sum;
                        if (a.beam != b.beam) return a.beam < b.beam;
                        return a.token < b.token;
                      });
    std::vector<Beam> next_live;
    for (std::size_t c = 0; c < keep; ++c) {
      const Candidate& cand = cands[c];
      Beam nb = live[cand.beam];
      nb.state = cand.state;
      nb.logprob_sum = cand.sum;
      if (cand.token == corpus::Vocabulary::kEos) {
        nb.finished = true;  // EOS log-probability counts, token does not
        done.push_back(std::move(nb));
      } else {
        nb.tokens.push_back(cand.token);
        next_live.push_back(std::move(nb));
      }
    }
    live = std::move(next_live);
  }
  for (Beam& b : live) {
    b.finished = true;
    done.push_back(std::move(b));
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < done.size(); ++i) {
    if (normalized_score(done[i]) > normalized_score(done[best])) best = i;
  }
  return done[best];
}

}  // namespace

SummaryOutput generate_summary(const PreparedCluster& cluster,
                               ModelParams& params,
                               const corpus::Vocabulary& vocab,
                               Strategy strategy, int beam_width,
                               int max_len) {
  if (beam_width < 1) {
    throw ConfigError("beam width must be at least 1, got " +
                      std::to_string(beam_width));
  }
  if (max_len < 1) {
    throw ConfigError("max length must be at least 1, got " +
                      std::to_string(max_len));
  }

  Tape tape;
  ParamBinder bind(tape, params, Phase::Main, /*frozen=*/true);
  const ClusterInference inf = infer(bind, cluster, strategy);
  const RunConfig& cfg = params.config();

  // z_s at the posterior mean, syntactic half first.
  const Tensor z_s =
      cfg.disentangle
          ? diff::concat(inf.summary.mu_syn_s, inf.summary.mu_sem_s)
          : inf.summary.mu_sem_s;

  // Attention memory: every document's per-token states, weighted by a
  // log w_i prior on the attention logits (uniform w leaves the softmax
  // untouched, matching the reconstruction-time attention distribution).
  std::vector<Tensor> blocks;
  std::vector<double> bias_values;
  int rows = 0;
  const std::vector<double> w = inf.summary.w.value();
  for (std::size_t i = 0; i < inf.encs.size(); ++i) {
    const int m = inf.encs[i].states.shape()[0];
    blocks.push_back(
        diff::reshape(inf.encs[i].states, {m * cfg.hidden_dim}));
    bias_values.insert(bias_values.end(), static_cast<std::size_t>(m),
                       std::log(w[i]));
    rows += m;
  }
  const Tensor memory = diff::reshape(
      diff::concat(std::span<const Tensor>(blocks)), {rows, cfg.hidden_dim});
  const Tensor attn_bias = tape.input({rows}, bias_values);

  Beam best = beam_rollout(bind, z_s, memory, &attn_bias, beam_width, max_len);
  if (beam_width > 1) {
    const Beam greedy = beam_rollout(bind, z_s, memory, &attn_bias, 1, max_len);
    if (normalized_score(greedy) > normalized_score(best)) best = greedy;
  }

  SummaryOutput out;
  out.strategy = strategy;
  out.z_s = z_s.value();
  out.beam_score = normalized_score(best);
  for (const int id : best.tokens) out.tokens.push_back(vocab.token_at(id));
  for (std::size_t i = 0; i < out.tokens.size(); ++i) {
    if (i) out.text += ' ';
    out.text += out.tokens[i];
  }
  return out;
}

namespace {

std::size_t medoid_core(
    std::size_t n,
    const std::function<double(std::size_t, std::size_t)>& pair_cost) {
  std::size_t best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double cost = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) cost += pair_cost(i, j);
    }
    if (cost < best_cost) {
      best = i;
      best_cost = cost;
    }
  }
  return best;
}

void check_medoid_inputs(const std::vector<gauss::DiagonalGaussian>& sem,
                         const std::vector<gauss::DiagonalGaussian>& syn) {
  if (sem.empty()) {
    throw std::invalid_argument("medoid: empty cluster");
  }
  if (!syn.empty() && syn.size() != sem.size()) {
    throw std::invalid_argument(
        "medoid: semantic and syntactic lists differ in length");
  }
}

}  // namespace

std::size_t medoid_wass_dists(const std::vector<gauss::DiagonalGaussian>& sem,
                              const std::vector<gauss::DiagonalGaussian>& syn) {
  check_medoid_inputs(sem, syn);
  return medoid_core(sem.size(), [&](std::size_t i, std::size_t j) {
    double d = gauss::w2_squared_diag(sem[i], sem[j]);
    if (!syn.empty()) d += gauss::w2_squared_diag(syn[i], syn[j]);
    return d;
  });
}

std::size_t medoid_eucl_dists(const std::vector<gauss::DiagonalGaussian>& sem,
                              const std::vector<gauss::DiagonalGaussian>& syn) {
  check_medoid_inputs(sem, syn);
  return medoid_core(sem.size(), [&](std::size_t i, std::size_t j) {
    double d = 0.0;
    for (std::size_t k = 0; k < sem[i].mean.size(); ++k) {
      const double gap = sem[i].mean[k] - sem[j].mean[k];
      d += gap * gap;
    }
    if (!syn.empty()) {
      for (std::size_t k = 0; k < syn[i].mean.size(); ++k) {
        const double gap = syn[i].mean[k] - syn[j].mean[k];
        d += gap * gap;
      }
    }
    return d;
  });
}

namespace {

void encode_cluster(const PreparedCluster& cluster, ModelParams& params,
                    std::vector<gauss::DiagonalGaussian>& sem,
                    std::vector<gauss::DiagonalGaussian>& syn) {
  if (cluster.docs.empty()) {
    throw std::invalid_argument("medoid: empty cluster");
  }
  for (const auto& doc : cluster.docs) {
    const model::EncodedDocument enc = model::encode(doc.token_ids, params);
    sem.push_back(enc.v_sem);
    if (params.config().disentangle) syn.push_back(enc.v_syn);
  }
}

}  // namespace

std::size_t medoid_wass(const PreparedCluster& cluster, ModelParams& params) {
  std::vector<gauss::DiagonalGaussian> sem, syn;
  encode_cluster(cluster, params, sem, syn);
  return medoid_wass_dists(sem, syn);
}

std::size_t medoid_eucl(const PreparedCluster& cluster, ModelParams& params) {
  std::vector<gauss::DiagonalGaussian> sem, syn;
  encode_cluster(cluster, params, sem, syn);
  return medoid_eucl_dists(sem, syn);
}

}  // namespace wassos::summarizer
