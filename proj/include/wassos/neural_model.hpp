#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wassos/config.hpp"
#include "wassos/gauss_ot.hpp"
#include "wassos/params.hpp"
#include "wassos/rng.hpp"
#include "wassos/tensor.hpp"
#include "wassos/text_corpus.hpp"

namespace wassos::model {

// A document translated into model inputs: token indices (UNK-mapped),
// bag-of-words target, tag indices from the built-in inventory.
struct PreparedDoc {
  std::vector<int> token_ids;
  corpus::BowTarget bow;
  std::vector<int> tag_ids;
};

struct PreparedCluster {
  std::string cluster_id;
  std::vector<PreparedDoc> docs;
};

PreparedDoc prepare_doc(const corpus::Document& doc,
                        const corpus::Vocabulary& vocab);
PreparedCluster prepare_cluster(const corpus::DocumentCluster& cluster,
                                const corpus::Vocabulary& vocab);

// Deterministic per-(step, document, purpose) noise. zero=true yields the
// posterior mean everywhere (inference policy).
struct NoiseSource {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  bool zero = false;

  std::vector<double> normal(RngPurpose purpose, std::uint64_t item,
                             std::size_t n) const;
};

struct LossContext {
  NoiseSource noise;
  double kl_scale = 1.0;  // KL warm-up multiplier in [0, 1]
};

struct LossBreakdown {
  double elbo_negated = 0.0;
  double l_sem_mul = 0.0;
  double l_syn_mul = 0.0;
  double l_sem_adv = 0.0;
  double l_syn_adv = 0.0;
  double l_rec_adv = 0.0;
  double l_wass = 0.0;
  double total = 0.0;
};

// ---- Tensor-route building blocks (shared by training and inference) ------

// One GRU cell update for the parameter family `prefix` (e.g. "enc", "dec").
diff::Tensor gru_step(ParamBinder& bind, const std::string& prefix,
                      diff::Tensor x, diff::Tensor state);

// Per-document encoder outputs. With disentangle off, the single latent
// occupies mu_sem/logstd_sem at dimension D_sem + D_syn and the syn pair is
// unset (id -1).
struct EncodedDoc {
  diff::Tensor h;       // {H} final encoder state
  diff::Tensor states;  // {M, H} per-token encoder states
  diff::Tensor mu_sem, logstd_sem;
  diff::Tensor mu_syn, logstd_syn;
};

EncodedDoc encode_t(ParamBinder& bind, const std::vector<int>& token_ids);

// Plain-value encoding for inference and the medoid baselines. With
// disentangle off, v_sem holds the single latent and v_syn is empty.
struct EncodedDocument {
  std::vector<double> hidden;
  std::vector<std::vector<double>> states;
  gauss::DiagonalGaussian v_sem;
  gauss::DiagonalGaussian v_syn;
};

EncodedDocument encode(const std::vector<int>& token_ids, ModelParams& params);

// Single transformer decoder layer: multi-head attention of query z over
// memory rows, then a tanh feed-forward, residuals around both.
// attn_bias, when given, is a per-row additive term on every head's
// attention logits ({M}); softmax renormalizes, so a constant bias is a
// no-op and log-weights act as a prior over memory rows.
diff::Tensor transformer_layer(ParamBinder& bind, diff::Tensor z,
                               diff::Tensor memory,
                               const diff::Tensor* attn_bias = nullptr);

// One decoder step. z is the concatenated latent, syntactic half first; the
// transformer output (or z itself when the layer is toggled off) is
// concatenated with the embedded previous token to form the GRU input.
std::pair<diff::Tensor, diff::Tensor> decoder_step_t(
    ParamBinder& bind, int prev_token, diff::Tensor state, diff::Tensor z,
    diff::Tensor memory, const diff::Tensor* attn_bias = nullptr);

diff::Tensor decoder_init_state(ParamBinder& bind, diff::Tensor z);

// Mean-over-tokens teacher-forced NLL of BOS + tokens + EOS.
diff::Tensor reconstruction_nll_t(ParamBinder& bind,
                                  const std::vector<int>& token_ids,
                                  diff::Tensor z, diff::Tensor memory);

// KL(N(mu, diag exp(logstd)^2) || N(0, I)) built from ops.
diff::Tensor kl_to_std_normal_t(diff::Tensor mu, diff::Tensor logstd);

// (l_sem_mul, l_syn_mul): BoW cross-entropy from z_sem, summed tag-sequence
// NLL from z_syn.
std::pair<diff::Tensor, diff::Tensor> multitask_losses_t(
    ParamBinder& bind, diff::Tensor z_sem, diff::Tensor z_syn,
    const corpus::BowTarget& bow, const std::vector<int>& tag_ids);

// Main phase: signed adversary log-likelihoods (frozen heads, live z's).
// Adversary phase: adversary-head NLLs on detached z's.
std::pair<diff::Tensor, diff::Tensor> adversarial_losses_t(
    ParamBinder& bind, diff::Tensor z_sem, diff::Tensor z_syn,
    const corpus::BowTarget& bow, const std::vector<int>& tag_ids);

// Summed NLL of the tokens under the single-latent reconstruction head.
diff::Tensor single_latent_rec_nll_t(ParamBinder& bind,
                                     const std::vector<int>& token_ids,
                                     diff::Tensor z_t);

// Signed log-likelihood form (the quantity added to the main loss).
diff::Tensor adversarial_reconstruction_loss_t(ParamBinder& bind,
                                               const std::vector<int>& tokens,
                                               diff::Tensor z_t);

// Summary-side tensors shared by the Wasserstein loss and generation.
struct SummaryTensors {
  diff::Tensor h_s;                       // {H}
  diff::Tensor w;                         // {n} document weights
  diff::Tensor lambda;                    // {n} barycenter weights
  diff::Tensor mu_sem_s, logstd_sem_s;    // summary semantic distribution
  diff::Tensor mu_syn_s, logstd_syn_s;    // summary syntactic distribution
};

SummaryTensors summary_tensors(ParamBinder& bind,
                               const std::vector<EncodedDoc>& docs,
                               const std::vector<diff::Tensor>& z_full,
                               Strategy strategy);

// Full objective on one cluster; fills the unweighted component values and
// returns the coefficient-weighted total as a tensor. Main phase.
diff::Tensor total_loss_t(ParamBinder& bind, const PreparedCluster& cluster,
                          const LossContext& ctx, LossBreakdown* breakdown);

LossBreakdown total_loss(const PreparedCluster& cluster, ModelParams& params,
                         const LossContext& ctx);

// Adversary-phase objective: sum of adversary-head NLLs on detached latents.
diff::Tensor adversary_loss_t(ParamBinder& bind,
                              const PreparedCluster& cluster,
                              const LossContext& ctx);

double adversary_loss(const PreparedCluster& cluster, ModelParams& params,
                      const LossContext& ctx);

}  // namespace wassos::model
