#include "wassos/neural_model.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "wassos/errors.hpp"

namespace wassos::model {

using diff::Tape;
using diff::Tensor;

PreparedDoc prepare_doc(const corpus::Document& doc,
                        const corpus::Vocabulary& vocab) {
  PreparedDoc out;
  out.token_ids.reserve(doc.tokens.size());
  for (const auto& tok : doc.tokens) {
    out.token_ids.push_back(vocab.index_of(tok));
  }
  out.bow = corpus::bow_target(doc.tokens, vocab);
  for (const auto& tag : corpus::tag_sequence(doc)) {
    out.tag_ids.push_back(corpus::tag_index(tag));
  }
  return out;
}

PreparedCluster prepare_cluster(const corpus::DocumentCluster& cluster,
                                const corpus::Vocabulary& vocab) {
  if (cluster.documents.empty()) {
    throw DataError("cluster \"" + cluster.cluster_id + "\" has no documents");
  }
  PreparedCluster out;
  out.cluster_id = cluster.cluster_id;
  for (const auto& doc : cluster.documents) {
    out.docs.push_back(prepare_doc(doc, vocab));
  }
  return out;
}

std::vector<double> NoiseSource::normal(RngPurpose purpose, std::uint64_t item,
                                        std::size_t n) const {
  std::vector<double> out(n, 0.0);
  if (zero) return out;
  CounterRng rng(seed, step, item, purpose);
  for (double& x : out) x = rng.next_normal();
  return out;
}

// ---- Building blocks --------------------------------------------------------

Tensor gru_step(ParamBinder& bind, const std::string& prefix, Tensor x,
                Tensor state) {
  using namespace diff;
  const Tensor zg = sigmoid(add(add(matmul(bind(prefix + "_Wz"), x),
                                    matmul(bind(prefix + "_Uz"), state)),
                                bind(prefix + "_bz")));
  const Tensor rg = sigmoid(add(add(matmul(bind(prefix + "_Wr"), x),
                                    matmul(bind(prefix + "_Ur"), state)),
                                bind(prefix + "_br")));
  const Tensor cand = tanh(
      add(add(matmul(bind(prefix + "_Wh"), x),
              matmul(bind(prefix + "_Uh"), multiply(rg, state))),
          bind(prefix + "_bh")));
  // (1 - z) * state + z * cand
  return add(multiply(state, add(multiply(zg, -1.0), 1.0)),
             multiply(cand, zg));
}

namespace {

// Affine pair of Eq.-1 form: mu = L h + b_L, log std = G h + b_G.
std::pair<Tensor, Tensor> affine_head(ParamBinder& bind,
                                      const std::string& prefix, Tensor h) {
  using namespace diff;
  return {add(matmul(bind(prefix + "_L"), h), bind(prefix + "_bL")),
          add(matmul(bind(prefix + "_G"), h), bind(prefix + "_bG"))};
}

// One-hidden-layer scalar scorer (weight networks f_w and f_lambda).
Tensor scorer(ParamBinder& bind, const std::string& prefix, Tensor x) {
  using namespace diff;
  const Tensor hidden =
      tanh(add(matmul(bind(prefix + "_W1"), x), bind(prefix + "_b1")));
  return add(matmul(bind(prefix + "_W2"), hidden), bind(prefix + "_b2"));
}

// Two-layer BoW head producing vocabulary logits from a latent.
Tensor bow_logits(ParamBinder& bind, const std::string& prefix, Tensor z) {
  using namespace diff;
  return add(matmul(bind(prefix + "_W"), z), bind(prefix + "_b"));
}

// Teacher-forced tag-sequence NLL (summed) under a dedicated GRU decoder
// whose initial state comes from z. The embedding table's extra final row is
// the start symbol.
Tensor tag_decode_nll(ParamBinder& bind, const std::string& prefix, Tensor z,
                      const std::vector<int>& tag_ids) {
  using namespace diff;
  const int start_row = static_cast<int>(bind.params().tag_count());
  Tensor state = tanh(
      add(matmul(bind(prefix + "_init_W"), z), bind(prefix + "_init_b")));
  Tensor total = bind.tape().scalar(0.0);
  int prev = start_row;
  for (const int target : tag_ids) {
    const Tensor x = embedding_lookup(bind(prefix + "_emb"), prev);
    state = gru_step(bind, prefix, x, state);
    const Tensor logits =
        add(matmul(bind(prefix + "_out_W"), state), bind(prefix + "_out_b"));
    total = add(total, nll_of_index(logits, target));
    prev = target;
  }
  return total;
}

}  // namespace

EncodedDoc encode_t(ParamBinder& bind, const std::vector<int>& token_ids) {
  using namespace diff;
  if (token_ids.empty()) {
    throw std::invalid_argument("encode: empty document");
  }
  const RunConfig& cfg = bind.params().config();
  Tape& tape = bind.tape();

  Tensor state = tape.zeros({cfg.hidden_dim});
  std::vector<Tensor> states;
  states.reserve(token_ids.size());
  for (const int id : token_ids) {
    const Tensor x = embedding_lookup(bind("embed"), id);
    state = gru_step(bind, "enc", x, state);
    states.push_back(state);
  }

  EncodedDoc out;
  out.h = state;
  out.states = reshape(concat(std::span<const Tensor>(states)),
                       {static_cast<int>(token_ids.size()), cfg.hidden_dim});
  if (cfg.disentangle) {
    std::tie(out.mu_sem, out.logstd_sem) = affine_head(bind, "sem", out.h);
    std::tie(out.mu_syn, out.logstd_syn) = affine_head(bind, "syn", out.h);
  } else {
    std::tie(out.mu_sem, out.logstd_sem) = affine_head(bind, "lat", out.h);
  }
  return out;
}

EncodedDocument encode(const std::vector<int>& token_ids,
                       ModelParams& params) {
  Tape tape;
  ParamBinder bind(tape, params, Phase::Main, /*frozen=*/true);
  const EncodedDoc enc = encode_t(bind, token_ids);

  EncodedDocument out;
  out.hidden = enc.h.value();
  const int hidden = params.config().hidden_dim;
  const auto& flat = enc.states.value();
  for (std::size_t t = 0; t < token_ids.size(); ++t) {
    out.states.emplace_back(flat.begin() + t * hidden,
                            flat.begin() + (t + 1) * hidden);
  }
  out.v_sem = {enc.mu_sem.value(), enc.logstd_sem.value()};
  if (params.config().disentangle) {
    out.v_syn = {enc.mu_syn.value(), enc.logstd_syn.value()};
  }
  return out;
}

Tensor transformer_layer(ParamBinder& bind, Tensor z, Tensor memory,
                         const Tensor* attn_bias) {
  using namespace diff;
  const RunConfig& cfg = bind.params().config();
  const int dz = cfg.latent_dim();
  const int heads = cfg.heads;
  const int dh = dz / heads;
  const int rows = memory.shape()[0];

  const Tensor q = matmul(bind("attn_Wq"), z);            // {Dz}
  const Tensor k = matmul(memory, bind("attn_WkT"));      // {M, Dz}
  const Tensor v = matmul(memory, bind("attn_WvT"));      // {M, Dz}

  std::vector<Tensor> contexts;
  contexts.reserve(heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int hidx = 0; hidx < heads; ++hidx) {
    const Tensor qh = slice(q, hidx * dh, dh);
    const Tensor kh = slice(k, 1, hidx * dh, dh);  // {M, dh}
    const Tensor vh = slice(v, 1, hidx * dh, dh);
    Tensor logits = multiply(matmul(kh, qh), scale);  // {M}
    if (attn_bias) logits = add(logits, *attn_bias);
    const Tensor alpha = softmax(logits);
    contexts.push_back(
        reshape(matmul(reshape(alpha, {1, rows}), vh), {dh}));
  }
  const Tensor ctx = concat(std::span<const Tensor>(contexts));
  const Tensor attended =
      add(z, add(matmul(bind("attn_Wo"), ctx), bind("attn_bo")));
  const Tensor ff = add(
      matmul(bind("ff_W2"),
             tanh(add(matmul(bind("ff_W1"), attended), bind("ff_b1")))),
      bind("ff_b2"));
  return add(attended, ff);
}

Tensor decoder_init_state(ParamBinder& bind, Tensor z) {
  using namespace diff;
  return tanh(add(matmul(bind("dec_init_W"), z), bind("dec_init_b")));
}

std::pair<Tensor, Tensor> decoder_step_t(ParamBinder& bind, int prev_token,
                                         Tensor state, Tensor z, Tensor memory,
                                         const Tensor* attn_bias) {
  using namespace diff;
  const RunConfig& cfg = bind.params().config();
  if (static_cast<int>(z.numel()) != cfg.latent_dim()) {
    throw std::invalid_argument(
        "decoder_step: latent has dimension " + std::to_string(z.numel()) +
        ", configured D_sem + D_syn = " + std::to_string(cfg.latent_dim()));
  }
  const Tensor x = embedding_lookup(bind("embed"), prev_token);
  const Tensor side =
      cfg.transformer ? transformer_layer(bind, z, memory, attn_bias) : z;
  const Tensor next = gru_step(bind, "dec", concat(x, side), state);
  const Tensor logits = add(matmul(bind("out_W"), next), bind("out_b"));
  return {logits, next};
}

Tensor reconstruction_nll_t(ParamBinder& bind,
                            const std::vector<int>& token_ids, Tensor z,
                            Tensor memory) {
  using namespace diff;
  Tensor state = decoder_init_state(bind, z);
  Tensor total = bind.tape().scalar(0.0);
  int prev = corpus::Vocabulary::kBos;
  std::vector<int> targets = token_ids;
  targets.push_back(corpus::Vocabulary::kEos);
  for (const int target : targets) {
    auto [logits, next] = decoder_step_t(bind, prev, state, z, memory);
    total = add(total, nll_of_index(logits, target));
    state = next;
    prev = target;
  }
  return multiply(total, 1.0 / static_cast<double>(targets.size()));
}

Tensor kl_to_std_normal_t(Tensor mu, Tensor logstd) {
  using namespace diff;
  const Tensor var = exp(multiply(logstd, 2.0));
  const Tensor inner =
      add(add(multiply(mu, mu), var), add(multiply(logstd, -2.0), -1.0));
  return multiply(sum(inner), 0.5);
}

std::pair<Tensor, Tensor> multitask_losses_t(ParamBinder& bind, Tensor z_sem,
                                             Tensor z_syn,
                                             const corpus::BowTarget& bow,
                                             const std::vector<int>& tag_ids) {
  using namespace diff;
  const Tensor sem =
      cross_entropy(bow_logits(bind, "mt_bow", z_sem), bow.distribution);
  const Tensor syn = tag_decode_nll(bind, "mt_tag", z_syn, tag_ids);
  return {sem, syn};
}

std::pair<Tensor, Tensor> adversarial_losses_t(ParamBinder& bind,
                                               Tensor z_sem, Tensor z_syn,
                                               const corpus::BowTarget& bow,
                                               const std::vector<int>& tags) {
  using namespace diff;
  const bool adversary = bind.phase() == Phase::Adversary;
  if (adversary) {
    z_sem = detach(z_sem);
    z_syn = detach(z_syn);
  } else if (bind.params().adversary_updates == 0 &&
             !bind.params().warned_untrained_adversary) {
    bind.params().warned_untrained_adversary = true;
    std::fprintf(stderr,
                 "note: main-phase adversarial loss computed before any "
                 "adversary update (heads are still random)\n");
  }
  const Tensor bow_nll =
      cross_entropy(bow_logits(bind, "adv_bow", z_syn), bow.distribution);
  const Tensor tag_nll = tag_decode_nll(bind, "adv_tag", z_sem, tags);
  if (adversary) return {bow_nll, tag_nll};
  // Signed as the adversary's log-likelihood, which the main model minimizes.
  return {multiply(bow_nll, -1.0), multiply(tag_nll, -1.0)};
}

Tensor single_latent_rec_nll_t(ParamBinder& bind,
                               const std::vector<int>& token_ids,
                               Tensor z_t) {
  using namespace diff;
  Tensor state =
      tanh(add(matmul(bind("rec_init_W"), z_t), bind("rec_init_b")));
  Tensor total = bind.tape().scalar(0.0);
  int prev = corpus::Vocabulary::kBos;
  for (const int target : token_ids) {
    const Tensor x = embedding_lookup(bind("rec_emb"), prev);
    state = gru_step(bind, "rec", x, state);
    const Tensor logits =
        add(matmul(bind("rec_out_W"), state), bind("rec_out_b"));
    total = add(total, nll_of_index(logits, target));
    prev = target;
  }
  return total;
}

Tensor adversarial_reconstruction_loss_t(ParamBinder& bind,
                                         const std::vector<int>& tokens,
                                         Tensor z_t) {
  return multiply(single_latent_rec_nll_t(bind, tokens, z_t), -1.0);
}

SummaryTensors summary_tensors(ParamBinder& bind,
                               const std::vector<EncodedDoc>& docs,
                               const std::vector<Tensor>& z_full,
                               Strategy strategy) {
  using namespace diff;
  if (docs.empty()) {
    throw std::invalid_argument("summary_tensors: empty cluster");
  }
  const RunConfig& cfg = bind.params().config();
  const int n = static_cast<int>(docs.size());

  std::vector<Tensor> w_scores, l_scores, hs;
  for (int i = 0; i < n; ++i) {
    w_scores.push_back(scorer(bind, "fw", docs[i].h));
    l_scores.push_back(scorer(bind, "fl", z_full[i]));
    hs.push_back(docs[i].h);
  }

  SummaryTensors out;
  out.w = softmax(concat(std::span<const Tensor>(w_scores)));
  out.lambda = softmax(concat(std::span<const Tensor>(l_scores)));
  const Tensor stacked =
      reshape(concat(std::span<const Tensor>(hs)), {n, cfg.hidden_dim});
  out.h_s = reshape(matmul(reshape(out.w, {1, n}), stacked), {cfg.hidden_dim});

  if (cfg.disentangle) {
    std::tie(out.mu_sem_s, out.logstd_sem_s) =
        affine_head(bind, "sum_sem", out.h_s);
    if (strategy == Strategy::TCenter) {
      std::tie(out.mu_syn_s, out.logstd_syn_s) =
          affine_head(bind, "sum_syn", out.h_s);
    } else {
      // O-center reuses the document syntactic projection on h_s.
      std::tie(out.mu_syn_s, out.logstd_syn_s) =
          affine_head(bind, "syn", out.h_s);
    }
  } else {
    std::tie(out.mu_sem_s, out.logstd_sem_s) =
        affine_head(bind, "sum_lat", out.h_s);
  }
  return out;
}

namespace {

// Squared 2-Wasserstein distance between diagonal Gaussians on the tape.
Tensor w2_t(Tensor mu_a, Tensor logstd_a, Tensor mu_b, Tensor logstd_b) {
  using namespace diff;
  const Tensor dm = add(mu_a, multiply(mu_b, -1.0));
  const Tensor ds = add(exp(logstd_a), multiply(exp(logstd_b), -1.0));
  return add(sum(multiply(dm, dm)), sum(multiply(ds, ds)));
}

Tensor sample_t(Tape& tape, Tensor mu, Tensor logstd,
                const std::vector<double>& noise) {
  using namespace diff;
  const Tensor eps =
      tape.input({static_cast<int>(noise.size())}, noise);
  return add(mu, multiply(exp(logstd), eps));
}

}  // namespace

Tensor total_loss_t(ParamBinder& bind, const PreparedCluster& cluster,
                    const LossContext& ctx, LossBreakdown* breakdown) {
  using namespace diff;
  if (cluster.docs.empty()) {
    throw std::invalid_argument("total_loss: empty cluster");
  }
  const RunConfig& cfg = bind.params().config();
  Tape& tape = bind.tape();
  const int n = static_cast<int>(cluster.docs.size());

  Tensor elbo = tape.scalar(0.0);
  Tensor sem_mul = tape.scalar(0.0);
  Tensor syn_mul = tape.scalar(0.0);
  Tensor sem_adv = tape.scalar(0.0);
  Tensor syn_adv = tape.scalar(0.0);
  Tensor rec_adv = tape.scalar(0.0);

  std::vector<EncodedDoc> encoded;
  std::vector<Tensor> z_full;  // f_lambda inputs, semantic half first
  encoded.reserve(n);
  z_full.reserve(n);

  for (int i = 0; i < n; ++i) {
    const PreparedDoc& doc = cluster.docs[i];
    EncodedDoc enc = encode_t(bind, doc.token_ids);

    if (cfg.disentangle) {
      const Tensor z_sem =
          sample_t(tape, enc.mu_sem, enc.logstd_sem,
                   ctx.noise.normal(RngPurpose::NoiseSem, i, cfg.sem_dim));
      const Tensor z_syn =
          sample_t(tape, enc.mu_syn, enc.logstd_syn,
                   ctx.noise.normal(RngPurpose::NoiseSyn, i, cfg.syn_dim));
      const Tensor kl = add(kl_to_std_normal_t(enc.mu_sem, enc.logstd_sem),
                            kl_to_std_normal_t(enc.mu_syn, enc.logstd_syn));
      // Decoder latent layout: syntactic half first, then semantic.
      const Tensor z_dec = concat(z_syn, z_sem);
      const Tensor nll =
          reconstruction_nll_t(bind, doc.token_ids, z_dec, enc.states);
      elbo = add(elbo, add(multiply(kl, ctx.kl_scale), nll));

      // Auxiliary heads read the posterior means; only the decoder and the
      // KL consume the sampled latents.
      auto [ls, lt] = multitask_losses_t(bind, enc.mu_sem, enc.mu_syn,
                                         doc.bow, doc.tag_ids);
      sem_mul = add(sem_mul, ls);
      syn_mul = add(syn_mul, lt);

      auto [as, at] = adversarial_losses_t(bind, enc.mu_sem, enc.mu_syn,
                                           doc.bow, doc.tag_ids);
      sem_adv = add(sem_adv, as);
      syn_adv = add(syn_adv, at);

      const Tensor syn_only = concat(enc.mu_syn, tape.zeros({cfg.sem_dim}));
      const Tensor sem_only = concat(tape.zeros({cfg.syn_dim}), enc.mu_sem);
      rec_adv = add(
          rec_adv,
          add(adversarial_reconstruction_loss_t(bind, doc.token_ids, syn_only),
              adversarial_reconstruction_loss_t(bind, doc.token_ids,
                                                sem_only)));

      z_full.push_back(concat(z_sem, z_syn));
    } else {
      const Tensor z = sample_t(
          tape, enc.mu_sem, enc.logstd_sem,
          ctx.noise.normal(RngPurpose::NoiseLatent, i, cfg.latent_dim()));
      const Tensor kl = kl_to_std_normal_t(enc.mu_sem, enc.logstd_sem);
      const Tensor nll =
          reconstruction_nll_t(bind, doc.token_ids, z, enc.states);
      elbo = add(elbo, add(multiply(kl, ctx.kl_scale), nll));
      z_full.push_back(z);
    }
    encoded.push_back(std::move(enc));
  }

  const SummaryTensors sum_t =
      summary_tensors(bind, encoded, z_full, cfg.strategy);
  Tensor wass = tape.scalar(0.0);
  for (int i = 0; i < n; ++i) {
    Tensor dist = w2_t(encoded[i].mu_sem, encoded[i].logstd_sem,
                       sum_t.mu_sem_s, sum_t.logstd_sem_s);
    if (cfg.disentangle && cfg.strategy == Strategy::TCenter) {
      dist = add(dist, w2_t(encoded[i].mu_syn, encoded[i].logstd_syn,
                            sum_t.mu_syn_s, sum_t.logstd_syn_s));
    }
    wass = add(wass, multiply(dist, slice(sum_t.lambda, i, 1)));
  }

  const Tensor total =
      add(add(add(multiply(elbo, cfg.coef_elbo),
                  add(multiply(sem_mul, cfg.coef_sem_mul),
                      multiply(syn_mul, cfg.coef_syn_mul))),
              add(multiply(sem_adv, cfg.coef_sem_adv),
                  add(multiply(syn_adv, cfg.coef_syn_adv),
                      multiply(rec_adv, cfg.coef_rec_adv)))),
          multiply(wass, cfg.coef_wass));

  if (breakdown) {
    breakdown->elbo_negated = elbo.scalar_value();
    breakdown->l_sem_mul = sem_mul.scalar_value();
    breakdown->l_syn_mul = syn_mul.scalar_value();
    breakdown->l_sem_adv = sem_adv.scalar_value();
    breakdown->l_syn_adv = syn_adv.scalar_value();
    breakdown->l_rec_adv = rec_adv.scalar_value();
    breakdown->l_wass = wass.scalar_value();
    breakdown->total = total.scalar_value();
  }
  return total;
}

LossBreakdown total_loss(const PreparedCluster& cluster, ModelParams& params,
                         const LossContext& ctx) {
  Tape tape;
  ParamBinder bind(tape, params, Phase::Main, /*frozen=*/true);
  LossBreakdown breakdown;
  total_loss_t(bind, cluster, ctx, &breakdown);
  return breakdown;
}

Tensor adversary_loss_t(ParamBinder& bind, const PreparedCluster& cluster,
                        const LossContext&) {
  using namespace diff;
  const RunConfig& cfg = bind.params().config();
  Tape& tape = bind.tape();
  Tensor total = tape.scalar(0.0);
  if (!cfg.disentangle) return total;  // no adversaries in this ablation
  for (int i = 0; i < static_cast<int>(cluster.docs.size()); ++i) {
    const PreparedDoc& doc = cluster.docs[i];
    const EncodedDoc enc = encode_t(bind, doc.token_ids);
    auto [bow_nll, tag_nll] =
        adversarial_losses_t(bind, enc.mu_sem, enc.mu_syn, doc.bow,
                             doc.tag_ids);
    const Tensor zd_sem = detach(enc.mu_sem);
    const Tensor zd_syn = detach(enc.mu_syn);
    const Tensor syn_only = concat(zd_syn, tape.zeros({cfg.sem_dim}));
    const Tensor sem_only = concat(tape.zeros({cfg.syn_dim}), zd_sem);
    const Tensor rec_nll =
        add(single_latent_rec_nll_t(bind, doc.token_ids, syn_only),
            single_latent_rec_nll_t(bind, doc.token_ids, sem_only));
    total = add(total, add(add(bow_nll, tag_nll), rec_nll));
  }
  return total;
}

double adversary_loss(const PreparedCluster& cluster, ModelParams& params,
                      const LossContext& ctx) {
  Tape tape;
  ParamBinder bind(tape, params, Phase::Adversary, /*frozen=*/true);
  return adversary_loss_t(bind, cluster, ctx).scalar_value();
}

}  // namespace wassos::model
