#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "wassos/errors.hpp"
#include "wassos/rng.hpp"
#include "wassos/summarizer.hpp"

using namespace wassos;
using namespace wassos::summarizer;
using doctest::Approx;

namespace {

RunConfig toy_config() {
  RunConfig c;
  c.embed_dim = 3;
  c.hidden_dim = 4;
  c.sem_dim = 2;
  c.syn_dim = 2;
  c.heads = 2;
  c.seed = 11;
  return c;
}

corpus::DocumentCluster toy_cluster() {
  corpus::DocumentCluster c;
  c.cluster_id = "c0";
  for (const char* text :
       {"the cat is happy", "the dog is happy today", "happy cat happy dog"}) {
    corpus::Document d;
    d.text = text;
    d.tokens = corpus::tokenize(d.text);
    c.documents.push_back(d);
  }
  return c;
}

corpus::Vocabulary toy_vocab() {
  return corpus::Vocabulary::build({toy_cluster()}, 1);
}

std::size_t tag_count() { return corpus::tag_inventory().size(); }

void zero_all(model::ModelParams& params) {
  for (model::Param& p : params.all()) p.value.assign(p.value.size(), 0.0);
}

gauss::DiagonalGaussian random_dist(CounterRng& rng, std::size_t dim) {
  gauss::DiagonalGaussian g;
  for (std::size_t j = 0; j < dim; ++j) {
    g.mean.push_back(rng.next_uniform(-2.0, 2.0));
    g.log_std.push_back(rng.next_uniform(-1.0, 1.0));
  }
  return g;
}

// Exhaustive reference with the explicit tie rule, kept separate from the
// library loop.
std::size_t brute_medoid(const std::vector<gauss::DiagonalGaussian>& sem,
                         const std::vector<gauss::DiagonalGaussian>& syn,
                         bool euclidean) {
  std::vector<double> cost(sem.size(), 0.0);
  for (std::size_t i = 0; i < sem.size(); ++i) {
    for (std::size_t j = 0; j < sem.size(); ++j) {
      if (i == j) continue;
      if (euclidean) {
        for (std::size_t k = 0; k < sem[i].mean.size(); ++k) {
          const double d = sem[i].mean[k] - sem[j].mean[k];
          cost[i] += d * d;
        }
        if (!syn.empty()) {
          for (std::size_t k = 0; k < syn[i].mean.size(); ++k) {
            const double d = syn[i].mean[k] - syn[j].mean[k];
            cost[i] += d * d;
          }
        }
      } else {
        cost[i] += gauss::w2_squared_diag(sem[i], sem[j]);
        if (!syn.empty()) cost[i] += gauss::w2_squared_diag(syn[i], syn[j]);
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < cost.size(); ++i) {
    if (cost[i] < cost[best]) best = i;
  }
  return best;
}

}  // namespace

TEST_CASE("single document gets weight one and h_s = h") {
  const auto vocab = toy_vocab();
  corpus::DocumentCluster one = toy_cluster();
  one.documents.resize(1);
  const auto cluster = model::prepare_cluster(one, vocab);
  model::ModelParams params(toy_config(), vocab.size(), tag_count());

  const SummaryDistributions s =
      summary_distributions(cluster, params, Strategy::TCenter);
  REQUIRE(s.doc_weights_w.size() == 1);
  CHECK(s.doc_weights_w[0] == 1.0);
  CHECK(s.doc_weights_lambda[0] == 1.0);

  // O-center: document syntactic head on h_s = h reproduces the document's
  // own syntactic distribution.
  const SummaryDistributions so =
      summary_distributions(cluster, params, Strategy::OCenter);
  const model::EncodedDocument enc = model::encode(cluster.docs[0].token_ids, params);
  CHECK(so.v_syn_s.mean == enc.v_syn.mean);
  CHECK(so.v_syn_s.log_std == enc.v_syn.log_std);
  CHECK(so.strategy == Strategy::OCenter);
}

TEST_CASE("identical documents share weight uniformly") {
  const auto vocab = toy_vocab();
  corpus::DocumentCluster same;
  same.cluster_id = "s";
  corpus::Document d;
  d.text = "the cat is happy";
  d.tokens = corpus::tokenize(d.text);
  same.documents = {d, d, d};
  const auto cluster = model::prepare_cluster(same, vocab);
  model::ModelParams params(toy_config(), vocab.size(), tag_count());

  const SummaryDistributions s =
      summary_distributions(cluster, params, Strategy::TCenter);
  for (double w : s.doc_weights_w) CHECK(w == s.doc_weights_w[0]);
  for (double l : s.doc_weights_lambda) CHECK(l == s.doc_weights_lambda[0]);
  const double w_mass =
      std::accumulate(s.doc_weights_w.begin(), s.doc_weights_w.end(), 0.0);
  const double l_mass = std::accumulate(s.doc_weights_lambda.begin(),
                                        s.doc_weights_lambda.end(), 0.0);
  CHECK(w_mass == Approx(1.0).epsilon(1e-9));
  CHECK(l_mass == Approx(1.0).epsilon(1e-9));
}

TEST_CASE("beam search basics: shape, determinism, monotone width") {
  const auto vocab = toy_vocab();
  const auto cluster = model::prepare_cluster(toy_cluster(), vocab);
  model::ModelParams params(toy_config(), vocab.size(), tag_count());

  const SummaryOutput g1 =
      generate_summary(cluster, params, vocab, Strategy::TCenter, 1, 8);
  const SummaryOutput g5 =
      generate_summary(cluster, params, vocab, Strategy::TCenter, 5, 8);

  for (const SummaryOutput* g : {&g1, &g5}) {
    CHECK(g->tokens.size() >= 1);
    CHECK(g->tokens.size() <= 8);
    CHECK(g->z_s.size() == 4);
    std::string joined;
    for (std::size_t i = 0; i < g->tokens.size(); ++i) {
      if (i) joined += ' ';
      joined += g->tokens[i];
    }
    CHECK(g->text == joined);
    for (const auto& tok : g->tokens) {
      CHECK(vocab.index_of(tok) >= corpus::Vocabulary::kReservedCount);
    }
  }
  CHECK(g5.beam_score >= g1.beam_score - 1e-12);

  const SummaryOutput again =
      generate_summary(cluster, params, vocab, Strategy::TCenter, 5, 8);
  CHECK(again.tokens == g5.tokens);
  CHECK(again.beam_score == g5.beam_score);
  CHECK(again.z_s == g5.z_s);

  CHECK_THROWS_AS(
      generate_summary(cluster, params, vocab, Strategy::TCenter, 0, 8),
      ConfigError);
  CHECK_THROWS_AS(
      generate_summary(cluster, params, vocab, Strategy::TCenter, 1, 0),
      ConfigError);
}

TEST_CASE("width-1 beam equals an independent greedy rollout") {
  const auto vocab = toy_vocab();
  const auto cluster = model::prepare_cluster(toy_cluster(), vocab);
  model::ModelParams params(toy_config(), vocab.size(), tag_count());
  const int max_len = 8;

  const SummaryOutput beam =
      generate_summary(cluster, params, vocab, Strategy::TCenter, 1, max_len);

  // Rebuild z_s and the weighted memory from plain values, then greedily
  // argmax step by step.
  const SummaryDistributions s =
      summary_distributions(cluster, params, Strategy::TCenter);
  std::vector<double> z_vals = s.v_syn_s.mean;
  z_vals.insert(z_vals.end(), s.v_sem_s.mean.begin(), s.v_sem_s.mean.end());
  CHECK(beam.z_s == z_vals);

  std::vector<double> mem_vals;
  int rows = 0;
  for (std::size_t i = 0; i < cluster.docs.size(); ++i) {
    const model::EncodedDocument enc =
        model::encode(cluster.docs[i].token_ids, params);
    for (const auto& row : enc.states) {
      for (double x : row) mem_vals.push_back(x * s.doc_weights_w[i]);
      ++rows;
    }
  }

  diff::Tape tape;
  model::ParamBinder bind(tape, params, model::Phase::Main, true);
  const diff::Tensor z = tape.input({4}, z_vals);
  const diff::Tensor memory = tape.input({rows, 4}, mem_vals);
  diff::Tensor state = model::decoder_init_state(bind, z);

  std::vector<std::string> greedy;
  int prev = corpus::Vocabulary::kBos;
  for (int step = 0; step < max_len; ++step) {
    auto [logits, next] = model::decoder_step_t(bind, prev, state, z, memory);
    state = next;
    const std::vector<double> lp = diff::log_softmax(logits).value();
    int best = -1;
    for (int tok = 0; tok < static_cast<int>(lp.size()); ++tok) {
      if (tok == corpus::Vocabulary::kPad || tok == corpus::Vocabulary::kUnk ||
          tok == corpus::Vocabulary::kBos) {
        continue;
      }
      if (tok == corpus::Vocabulary::kEos && step == 0) continue;
      if (best < 0 || lp[tok] > lp[best]) best = tok;
    }
    if (best == corpus::Vocabulary::kEos) break;
    greedy.push_back(vocab.token_at(best));
    prev = best;
  }
  CHECK(beam.tokens == greedy);
}

TEST_CASE("rigged decoder repeats the dominant token to max_len") {
  const auto vocab = toy_vocab();
  const auto cluster = model::prepare_cluster(toy_cluster(), vocab);
  model::ModelParams params(toy_config(), vocab.size(), tag_count());
  zero_all(params);
  params.at("out_b").value[5] = 10.0;

  const SummaryOutput out =
      generate_summary(cluster, params, vocab, Strategy::TCenter, 3, 6);
  REQUIRE(out.tokens.size() == 6);
  for (const auto& tok : out.tokens) CHECK(tok == vocab.token_at(5));
  // Per-step log-probability of the +10 logit among ten logits.
  const double expect = -std::log1p(9.0 * std::exp(-10.0));
  CHECK(out.beam_score == Approx(expect).epsilon(1e-12));
}

TEST_CASE("EOS cannot be the first step") {
  const auto vocab = toy_vocab();
  const auto cluster = model::prepare_cluster(toy_cluster(), vocab);
  model::ModelParams params(toy_config(), vocab.size(), tag_count());
  zero_all(params);
  params.at("out_b").value[corpus::Vocabulary::kEos] = 10.0;

  const SummaryOutput out =
      generate_summary(cluster, params, vocab, Strategy::TCenter, 2, 6);
  REQUIRE(out.tokens.size() == 1);
  // All real tokens tie at logit 0; the lowest index wins, then EOS ends it.
  CHECK(out.tokens[0] == vocab.token_at(corpus::Vocabulary::kReservedCount));
}

TEST_CASE("permuting documents leaves the summary unchanged") {
  const auto vocab = toy_vocab();
  const corpus::DocumentCluster base = toy_cluster();
  model::ModelParams params(toy_config(), vocab.size(), tag_count());

  const auto cluster = model::prepare_cluster(base, vocab);
  const SummaryOutput ref =
      generate_summary(cluster, params, vocab, Strategy::TCenter, 3, 8);

  const std::vector<std::vector<std::size_t>> perms = {
      {1, 0, 2}, {2, 1, 0}, {1, 2, 0}, {2, 0, 1}};
  for (const auto& perm : perms) {
    corpus::DocumentCluster shuffled = base;
    for (std::size_t k = 0; k < perm.size(); ++k) {
      shuffled.documents[k] = base.documents[perm[k]];
    }
    const auto pc = model::prepare_cluster(shuffled, vocab);
    const SummaryOutput got =
        generate_summary(pc, params, vocab, Strategy::TCenter, 3, 8);
    CHECK(got.tokens == ref.tokens);

    // Medoid indices follow the permutation.
    const std::size_t m = summarizer::medoid_wass(cluster, params);
    const std::size_t mp = summarizer::medoid_wass(pc, params);
    CHECK(perm[mp] == m);
  }
}

TEST_CASE("medoid distribution cores match brute force") {
  CounterRng rng(31, 0, 0, RngPurpose::Test);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.next_below(10);
    const std::size_t dim = 1 + rng.next_below(4);
    const bool with_syn = rng.next_below(2) == 0;
    std::vector<gauss::DiagonalGaussian> sem, syn;
    for (std::size_t i = 0; i < n; ++i) {
      sem.push_back(random_dist(rng, dim));
      if (with_syn) syn.push_back(random_dist(rng, dim));
    }
    CHECK(medoid_wass_dists(sem, syn) == brute_medoid(sem, syn, false));
    CHECK(medoid_eucl_dists(sem, syn) == brute_medoid(sem, syn, true));
  }
}

TEST_CASE("medoid fixtures") {
  // Two identical distributions plus an outlier.
  const gauss::DiagonalGaussian a{{0.0, 0.0}, {0.0, 0.0}};
  const gauss::DiagonalGaussian far{{9.0, -9.0}, {1.0, 1.0}};
  CHECK(medoid_wass_dists({a, a, far}, {}) == 0);
  CHECK(medoid_eucl_dists({a, a, far}, {}) == 0);

  // Equal means, different stds: Euclidean ties to index 0, Wasserstein
  // prefers the middle spread.
  const gauss::DiagonalGaussian s1{{0.0}, {std::log(1.0)}};
  const gauss::DiagonalGaussian s2{{0.0}, {std::log(3.0)}};
  const gauss::DiagonalGaussian s3{{0.0}, {std::log(3.2)}};
  CHECK(medoid_eucl_dists({s1, s2, s3}, {}) == 0);
  CHECK(medoid_wass_dists({s1, s2, s3}, {}) == 1);

  // Singletons and errors.
  CHECK(medoid_wass_dists({a}, {}) == 0);
  CHECK(medoid_eucl_dists({a}, {}) == 0);
  CHECK_THROWS_AS(medoid_wass_dists({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(medoid_wass_dists({a, a}, {a}), std::invalid_argument);
}

TEST_CASE("medoid wrappers agree with the distribution route") {
  const auto vocab = toy_vocab();
  const auto cluster = model::prepare_cluster(toy_cluster(), vocab);
  model::ModelParams params(toy_config(), vocab.size(), tag_count());

  std::vector<gauss::DiagonalGaussian> sem, syn;
  for (const auto& d : cluster.docs) {
    const model::EncodedDocument enc = model::encode(d.token_ids, params);
    sem.push_back(enc.v_sem);
    syn.push_back(enc.v_syn);
  }
  CHECK(medoid_wass(cluster, params) == medoid_wass_dists(sem, syn));
  CHECK(medoid_eucl(cluster, params) == medoid_eucl_dists(sem, syn));

  corpus::DocumentCluster one = toy_cluster();
  one.documents.resize(1);
  CHECK(medoid_wass(model::prepare_cluster(one, vocab), params) == 0);
}

TEST_CASE("fused-latent ablation still summarizes") {
  const auto vocab = toy_vocab();
  RunConfig cfg = toy_config();
  cfg.disentangle = false;
  model::ModelParams params(cfg, vocab.size(), tag_count());
  const auto cluster = model::prepare_cluster(toy_cluster(), vocab);

  const SummaryDistributions s =
      summary_distributions(cluster, params, Strategy::TCenter);
  CHECK(s.v_sem_s.mean.size() == 4);  // the fused latent
  CHECK(s.v_syn_s.mean.empty());

  const SummaryOutput out =
      generate_summary(cluster, params, vocab, Strategy::TCenter, 2, 6);
  CHECK(out.z_s.size() == 4);
  CHECK(out.tokens.size() >= 1);
  CHECK(medoid_wass(cluster, params) < cluster.docs.size());
}
