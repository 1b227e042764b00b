#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "wassos/errors.hpp"
#include "wassos/gauss_ot.hpp"
#include "wassos/neural_model.hpp"

using namespace wassos;
using namespace wassos::model;
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
  corpus::Document d1;
  d1.text = "the cat is happy";
  d1.tokens = corpus::tokenize(d1.text);
  corpus::Document d2;
  d2.text = "the dog is happy today";
  d2.tokens = corpus::tokenize(d2.text);
  c.documents = {d1, d2};
  return c;
}

corpus::Vocabulary toy_vocab() {
  return corpus::Vocabulary::build({toy_cluster()}, 1);
}

std::size_t tag_count() { return corpus::tag_inventory().size(); }

void zero_all(ModelParams& params) {
  for (Param& p : params.all()) p.value.assign(p.value.size(), 0.0);
}

bool any_nonzero(const std::vector<double>& v) {
  return std::any_of(v.begin(), v.end(), [](double x) { return x != 0.0; });
}

// y = W x + b with W stored {out, in}, summing in column order like matmul.
std::vector<double> affine(const Param& W, const Param& b,
                           const std::vector<double>& x) {
  const int out = W.shape[0];
  const int in = W.shape[1];
  std::vector<double> y(out);
  for (int r = 0; r < out; ++r) {
    double acc = 0.0;
    for (int k = 0; k < in; ++k) acc += W.value[r * in + k] * x[k];
    y[r] = acc + b.value[r];
  }
  return y;
}

// Central finite differences over one parameter group against the grads
// already accumulated in params; eval() must re-read params.value each call.
double max_rel_fd_error(ModelParams& params, Group group,
                        const std::function<double()>& eval,
                        double eps = 1e-5) {
  double worst = 0.0;
  for (Param& p : params.all()) {
    if (p.group != group) continue;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double keep = p.value[i];
      p.value[i] = keep + eps;
      const double up = eval();
      p.value[i] = keep - eps;
      const double dn = eval();
      p.value[i] = keep;
      const double fd = (up - dn) / (2.0 * eps);
      const double g = p.grad[i];
      const double denom = std::max({std::fabs(g), std::fabs(fd), 1e-3});
      worst = std::max(worst, std::fabs(g - fd) / denom);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("prepare_doc maps tokens, bow, and tags") {
  const auto vocab = toy_vocab();
  const auto cluster = toy_cluster();
  const PreparedDoc d = prepare_doc(cluster.documents[0], vocab);
  REQUIRE(d.token_ids.size() == 4);
  for (int id : d.token_ids) {
    CHECK(id >= corpus::Vocabulary::kReservedCount);
  }
  CHECK(d.tag_ids.size() == 4);
  CHECK(d.bow.distribution.size() == vocab.size());
  double mass = 0.0;
  for (double x : d.bow.distribution) mass += x;
  CHECK(mass == Approx(1.0).epsilon(1e-12));

  corpus::Document unk;
  unk.tokens = {"zebra", "happy"};
  const PreparedDoc du = prepare_doc(unk, vocab);
  CHECK(du.token_ids[0] == corpus::Vocabulary::kUnk);

  corpus::Document bad;
  bad.tokens = {"happy"};
  bad.tags = {"GERUND"};  // not in the inventory
  CHECK_THROWS_AS(prepare_doc(bad, vocab), DataError);

  corpus::DocumentCluster empty;
  empty.cluster_id = "e";
  CHECK_THROWS_AS(prepare_cluster(empty, vocab), DataError);
}

TEST_CASE("noise source is keyed and replayable") {
  const NoiseSource a{7, 3, false};
  const auto x = a.normal(RngPurpose::NoiseSem, 2, 5);
  const auto y = a.normal(RngPurpose::NoiseSem, 2, 5);
  CHECK(x == y);
  CHECK(x != a.normal(RngPurpose::NoiseSyn, 2, 5));
  CHECK(x != a.normal(RngPurpose::NoiseSem, 3, 5));
  const NoiseSource b{7, 4, false};
  CHECK(x != b.normal(RngPurpose::NoiseSem, 2, 5));

  const NoiseSource z{7, 3, true};
  CHECK(z.normal(RngPurpose::NoiseSem, 2, 5) == std::vector<double>(5, 0.0));
}

TEST_CASE("zero parameters give the uniform-model pinned losses") {
  const auto vocab = toy_vocab();
  REQUIRE(vocab.size() == 10);  // 6 corpus tokens + 4 reserved
  ModelParams params(toy_config(), vocab.size(), tag_count());
  zero_all(params);
  const PreparedCluster cluster = prepare_cluster(toy_cluster(), vocab);

  // Encoder collapses to zero state, heads to zero distributions.
  const EncodedDocument enc = encode(cluster.docs[0].token_ids, params);
  for (double h : enc.hidden) CHECK(h == 0.0);
  for (double m : enc.v_sem.mean) CHECK(m == 0.0);
  for (double s : enc.v_sem.log_std) CHECK(s == 0.0);
  CHECK(enc.states.size() == 4);

  LossContext ctx;
  ctx.noise.zero = true;
  const LossBreakdown bd = total_loss(cluster, params, ctx);

  const double lnV = std::log(10.0);
  const double lnT = std::log(static_cast<double>(tag_count()));
  // Uniform decoder: mean NLL is ln V per document; KL of N(0, I) is 0.
  CHECK(bd.elbo_negated == Approx(2 * lnV).epsilon(1e-12));
  CHECK(bd.l_sem_mul == Approx(2 * lnV).epsilon(1e-12));
  // Tag sequences have 4 + 5 steps, summed NLL.
  CHECK(bd.l_syn_mul == Approx(9 * lnT).epsilon(1e-12));
  CHECK(bd.l_sem_adv == Approx(-2 * lnV).epsilon(1e-12));
  CHECK(bd.l_syn_adv == Approx(-9 * lnT).epsilon(1e-12));
  // Two half-latent reconstructions per document, 4 + 5 tokens, negated.
  CHECK(bd.l_rec_adv == Approx(-2 * 9 * lnV).epsilon(1e-12));
  CHECK(bd.l_wass == 0.0);
  CHECK(bd.total == Approx(-16 * lnV).epsilon(1e-12));
}

TEST_CASE("total is the coefficient-weighted sum of the components") {
  const auto vocab = toy_vocab();
  RunConfig cfg = toy_config();
  cfg.coef_elbo = 0.5;
  cfg.coef_sem_mul = 2.0;
  cfg.coef_syn_mul = 3.0;
  cfg.coef_sem_adv = 0.25;
  cfg.coef_syn_adv = 1.5;
  cfg.coef_rec_adv = 0.75;
  cfg.coef_wass = 1.25;
  ModelParams params(cfg, vocab.size(), tag_count());
  const PreparedCluster cluster = prepare_cluster(toy_cluster(), vocab);

  LossContext ctx;
  ctx.noise = {5, 3, false};
  const LossBreakdown bd = total_loss(cluster, params, ctx);
  const double recombined =
      0.5 * bd.elbo_negated + 2.0 * bd.l_sem_mul + 3.0 * bd.l_syn_mul +
      0.25 * bd.l_sem_adv + 1.5 * bd.l_syn_adv + 0.75 * bd.l_rec_adv +
      1.25 * bd.l_wass;
  CHECK(bd.total == Approx(recombined).epsilon(1e-10));
}

TEST_CASE("loss is bit-deterministic under a fixed context") {
  const auto vocab = toy_vocab();
  ModelParams params(toy_config(), vocab.size(), tag_count());
  const PreparedCluster cluster = prepare_cluster(toy_cluster(), vocab);
  LossContext ctx;
  ctx.noise = {5, 3, false};
  const LossBreakdown a = total_loss(cluster, params, ctx);
  const LossBreakdown b = total_loss(cluster, params, ctx);
  CHECK(a.total == b.total);
  CHECK(a.elbo_negated == b.elbo_negated);
  CHECK(a.l_sem_mul == b.l_sem_mul);
  CHECK(a.l_syn_mul == b.l_syn_mul);
  CHECK(a.l_sem_adv == b.l_sem_adv);
  CHECK(a.l_syn_adv == b.l_syn_adv);
  CHECK(a.l_rec_adv == b.l_rec_adv);
  CHECK(a.l_wass == b.l_wass);
}

TEST_CASE("kl warm-up scales only the KL inside the ELBO term") {
  const auto vocab = toy_vocab();
  ModelParams params(toy_config(), vocab.size(), tag_count());
  const PreparedCluster cluster = prepare_cluster(toy_cluster(), vocab);
  LossContext ctx;
  ctx.noise = {5, 3, false};

  ctx.kl_scale = 0.0;
  const LossBreakdown b0 = total_loss(cluster, params, ctx);
  ctx.kl_scale = 1.0;
  const LossBreakdown b1 = total_loss(cluster, params, ctx);
  ctx.kl_scale = 0.5;
  const LossBreakdown bh = total_loss(cluster, params, ctx);

  CHECK(b1.elbo_negated > b0.elbo_negated);  // KL > 0 for random heads
  CHECK(bh.elbo_negated ==
        Approx(0.5 * (b0.elbo_negated + b1.elbo_negated)).epsilon(1e-10));
  // Every other component ignores the warm-up factor.
  CHECK(b0.l_sem_mul == b1.l_sem_mul);
  CHECK(b0.l_syn_mul == b1.l_syn_mul);
  CHECK(b0.l_sem_adv == b1.l_sem_adv);
  CHECK(b0.l_syn_adv == b1.l_syn_adv);
  CHECK(b0.l_rec_adv == b1.l_rec_adv);
  CHECK(b0.l_wass == b1.l_wass);
}

TEST_CASE("kl tensor matches the closed form") {
  diff::Tape tape;
  const std::vector<double> mu = {0.3, -1.2, 0.0, 2.0};
  const std::vector<double> ls = {0.1, -0.4, 0.0, 0.7};
  const auto kl = kl_to_std_normal_t(tape.input({4}, mu), tape.input({4}, ls));
  const double expect =
      gauss::kl_diag_to_std_normal(gauss::DiagonalGaussian{mu, ls});
  CHECK(kl.scalar_value() == Approx(expect).epsilon(1e-13));
}

TEST_CASE("decoder ignores memory exactly when the transformer is off") {
  const auto vocab = toy_vocab();
  RunConfig off = toy_config();
  off.transformer = false;
  ModelParams p_off(off, vocab.size(), tag_count());
  ModelParams p_on(toy_config(), vocab.size(), tag_count());

  const std::vector<double> zv = {0.2, -0.1, 0.4, 0.3};
  std::vector<double> mem1(3 * off.hidden_dim), mem2(3 * off.hidden_dim);
  for (std::size_t i = 0; i < mem1.size(); ++i) {
    mem1[i] = 0.05 * static_cast<double>(i) - 0.2;
    mem2[i] = -0.03 * static_cast<double>(i) + 0.1;
  }

  auto step = [&](ModelParams& params, const std::vector<double>& mem) {
    diff::Tape tape;
    ParamBinder bind(tape, params, Phase::Main, true);
    const auto z = tape.input({4}, zv);
    const auto memory = tape.input({3, params.config().hidden_dim}, mem);
    const auto state = tape.zeros({params.config().hidden_dim});
    auto [logits, next] =
        decoder_step_t(bind, corpus::Vocabulary::kBos, state, z, memory);
    CHECK(logits.shape() == std::vector<int>{10});
    CHECK(next.shape() == std::vector<int>{4});
    return logits.value();
  };

  CHECK(step(p_off, mem1) == step(p_off, mem2));
  CHECK(step(p_on, mem1) != step(p_on, mem2));
}

TEST_CASE("decoder rejects a latent of the wrong dimension") {
  const auto vocab = toy_vocab();
  ModelParams params(toy_config(), vocab.size(), tag_count());
  diff::Tape tape;
  ParamBinder bind(tape, params, Phase::Main, true);
  const auto z = tape.zeros({3});
  const auto memory = tape.zeros({2, 4});
  const auto state = tape.zeros({4});
  try {
    decoder_step_t(bind, 2, state, z, memory);
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("3") != std::string::npos);
    CHECK(msg.find("4") != std::string::npos);
  }
  CHECK_THROWS_AS(encode_t(bind, {}), std::invalid_argument);
}

TEST_CASE("plain encode matches the tensor route") {
  const auto vocab = toy_vocab();
  ModelParams params(toy_config(), vocab.size(), tag_count());
  const PreparedCluster cluster = prepare_cluster(toy_cluster(), vocab);
  const auto& ids = cluster.docs[1].token_ids;

  const EncodedDocument plain = encode(ids, params);

  diff::Tape tape;
  ParamBinder bind(tape, params, Phase::Main, true);
  const EncodedDoc t = encode_t(bind, ids);
  CHECK(plain.hidden == t.h.value());
  CHECK(plain.v_sem.mean == t.mu_sem.value());
  CHECK(plain.v_sem.log_std == t.logstd_sem.value());
  CHECK(plain.v_syn.mean == t.mu_syn.value());
  CHECK(plain.v_syn.log_std == t.logstd_syn.value());
  REQUIRE(plain.states.size() == ids.size());
  CHECK(plain.states.back() == plain.hidden);
}

TEST_CASE("single-document cluster pins the Wasserstein term") {
  const auto vocab = toy_vocab();
  corpus::DocumentCluster one = toy_cluster();
  one.documents.resize(1);
  const PreparedCluster cluster = prepare_cluster(one, vocab);

  for (const Strategy strategy : {Strategy::TCenter, Strategy::OCenter}) {
    RunConfig cfg = toy_config();
    cfg.strategy = strategy;
    ModelParams params(cfg, vocab.size(), tag_count());

    LossContext ctx;
    ctx.noise = {9, 1, false};
    const LossBreakdown bd = total_loss(cluster, params, ctx);

    // With one document, w = {1} and h_s = h exactly; lambda = {1}.
    const EncodedDocument enc = encode(cluster.docs[0].token_ids, params);
    const gauss::DiagonalGaussian sum_sem{
        affine(params.at("sum_sem_L"), params.at("sum_sem_bL"), enc.hidden),
        affine(params.at("sum_sem_G"), params.at("sum_sem_bG"), enc.hidden)};
    double expect = gauss::w2_squared_diag(enc.v_sem, sum_sem);
    if (strategy == Strategy::TCenter) {
      const gauss::DiagonalGaussian sum_syn{
          affine(params.at("sum_syn_L"), params.at("sum_syn_bL"), enc.hidden),
          affine(params.at("sum_syn_G"), params.at("sum_syn_bG"), enc.hidden)};
      expect += gauss::w2_squared_diag(enc.v_syn, sum_syn);
    }
    // O-center keeps only the semantic term; its syntactic summary head is
    // the document head applied to h_s, which equals v_syn here.
    CHECK(bd.l_wass == Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("strategies share components but differ in the Wasserstein term") {
  const auto vocab = toy_vocab();
  const PreparedCluster cluster = prepare_cluster(toy_cluster(), vocab);
  RunConfig t_cfg = toy_config();
  RunConfig o_cfg = toy_config();
  o_cfg.strategy = Strategy::OCenter;
  ModelParams pt(t_cfg, vocab.size(), tag_count());
  ModelParams po(o_cfg, vocab.size(), tag_count());

  LossContext ctx;
  ctx.noise = {9, 1, false};
  const LossBreakdown bt = total_loss(cluster, pt, ctx);
  const LossBreakdown bo = total_loss(cluster, po, ctx);
  CHECK(bt.elbo_negated == bo.elbo_negated);
  CHECK(bt.l_sem_mul == bo.l_sem_mul);
  // T-center adds a strictly positive syntactic transport term.
  CHECK(bt.l_wass > bo.l_wass + 1e-10);

  // The syntactic summary distribution comes from different heads.
  auto syn_summary = [&](ModelParams& params) {
    diff::Tape tape;
    ParamBinder bind(tape, params, Phase::Main, true);
    std::vector<EncodedDoc> encs;
    std::vector<diff::Tensor> z_full;
    for (const auto& d : cluster.docs) {
      encs.push_back(encode_t(bind, d.token_ids));
      z_full.push_back(diff::concat(encs.back().mu_sem, encs.back().mu_syn));
    }
    const SummaryTensors s =
        summary_tensors(bind, encs, z_full, params.config().strategy);
    return std::pair{s.mu_syn_s.value(), s.logstd_syn_s.value()};
  };
  const auto [mu_t, ls_t] = syn_summary(pt);
  const auto [mu_o, ls_o] = syn_summary(po);
  double max_gap = 0.0;
  for (std::size_t j = 0; j < mu_t.size(); ++j) {
    max_gap = std::max(max_gap, std::fabs(mu_t[j] - mu_o[j]));
    max_gap = std::max(max_gap, std::fabs(ls_t[j] - ls_o[j]));
  }
  CHECK(max_gap > 1e-6);
}

TEST_CASE("summary weights are convex and h_s stays in the envelope") {
  const auto vocab = toy_vocab();
  corpus::DocumentCluster c = toy_cluster();
  corpus::Document d3;
  d3.text = "today the cat is the dog";
  d3.tokens = corpus::tokenize(d3.text);
  c.documents.push_back(d3);
  const PreparedCluster cluster = prepare_cluster(c, vocab);
  ModelParams params(toy_config(), vocab.size(), tag_count());

  diff::Tape tape;
  ParamBinder bind(tape, params, Phase::Main, true);
  std::vector<EncodedDoc> encs;
  std::vector<diff::Tensor> z_full;
  for (const auto& d : cluster.docs) {
    encs.push_back(encode_t(bind, d.token_ids));
    z_full.push_back(diff::concat(encs.back().mu_sem, encs.back().mu_syn));
  }
  const SummaryTensors s =
      summary_tensors(bind, encs, z_full, Strategy::TCenter);

  double w_mass = 0.0, l_mass = 0.0;
  for (double w : s.w.value()) {
    CHECK(w > 0.0);
    CHECK(w < 1.0);
    w_mass += w;
  }
  for (double l : s.lambda.value()) l_mass += l;
  CHECK(w_mass == Approx(1.0).epsilon(1e-12));
  CHECK(l_mass == Approx(1.0).epsilon(1e-12));

  const auto& hs = s.h_s.value();
  for (int j = 0; j < params.config().hidden_dim; ++j) {
    double lo = 1e300, hi = -1e300;
    for (const auto& e : encs) {
      lo = std::min(lo, e.h.value()[j]);
      hi = std::max(hi, e.h.value()[j]);
    }
    CHECK(hs[j] >= lo - 1e-12);
    CHECK(hs[j] <= hi + 1e-12);
  }
}

TEST_CASE("main phase trains main params and freezes adversaries") {
  const auto vocab = toy_vocab();
  ModelParams params(toy_config(), vocab.size(), tag_count());
  const PreparedCluster cluster = prepare_cluster(toy_cluster(), vocab);
  params.zero_grads(Group::Main);
  params.zero_grads(Group::Adversary);

  LossContext ctx;
  ctx.noise = {5, 3, false};
  diff::Tape tape;
  ParamBinder bind(tape, params, Phase::Main);
  const auto loss = total_loss_t(bind, cluster, ctx, nullptr);
  tape.backward(loss);

  for (const char* name : {"adv_bow_W", "adv_tag_out_W", "rec_out_W",
                           "rec_emb", "adv_tag_emb"}) {
    CHECK_FALSE(any_nonzero(params.at(name).grad));
  }
  for (const char* name :
       {"embed", "enc_Wz", "sem_L", "syn_G", "dec_Wh", "out_W", "attn_Wq",
        "ff_W1", "fw_W1", "fl_W1", "mt_bow_W", "mt_tag_out_W", "sum_sem_L",
        "sum_syn_L"}) {
    CHECK(any_nonzero(params.at(name).grad));
  }
}

TEST_CASE("adversary phase trains adversaries only, on detached latents") {
  const auto vocab = toy_vocab();
  ModelParams params(toy_config(), vocab.size(), tag_count());
  const PreparedCluster cluster = prepare_cluster(toy_cluster(), vocab);
  params.zero_grads(Group::Main);
  params.zero_grads(Group::Adversary);

  LossContext ctx;
  ctx.noise = {5, 3, false};
  diff::Tape tape;
  ParamBinder bind(tape, params, Phase::Adversary);
  const auto loss = adversary_loss_t(bind, cluster, ctx);
  CHECK(loss.scalar_value() > 0.0);
  tape.backward(loss);

  for (const Param& p : params.all()) {
    if (p.group == Group::Main) CHECK_FALSE(any_nonzero(p.grad));
  }
  for (const char* name : {"adv_bow_W", "adv_bow_b", "adv_tag_emb",
                           "adv_tag_Wz", "adv_tag_out_W", "adv_tag_init_W",
                           "rec_emb", "rec_Wz", "rec_init_W", "rec_out_W"}) {
    CHECK(any_nonzero(params.at(name).grad));
  }
}

TEST_CASE("untrained-adversary note fires once via the params flag") {
  const auto vocab = toy_vocab();
  const PreparedCluster cluster = prepare_cluster(toy_cluster(), vocab);
  LossContext ctx;
  ctx.noise.zero = true;

  ModelParams fresh(toy_config(), vocab.size(), tag_count());
  CHECK_FALSE(fresh.warned_untrained_adversary);
  total_loss(cluster, fresh, ctx);
  CHECK(fresh.warned_untrained_adversary);

  ModelParams trained(toy_config(), vocab.size(), tag_count());
  trained.adversary_updates = 1;
  total_loss(cluster, trained, ctx);
  CHECK_FALSE(trained.warned_untrained_adversary);
}

TEST_CASE("disentangle off collapses to a single latent space") {
  const auto vocab = toy_vocab();
  RunConfig cfg = toy_config();
  cfg.disentangle = false;
  ModelParams params(cfg, vocab.size(), tag_count());
  CHECK(params.coord_count(Group::Adversary) == 0);
  CHECK_FALSE(params.has("sem_L"));
  CHECK(params.has("lat_L"));

  const PreparedCluster cluster = prepare_cluster(toy_cluster(), vocab);
  LossContext ctx;
  ctx.noise = {5, 3, false};
  const LossBreakdown bd = total_loss(cluster, params, ctx);
  CHECK(bd.l_sem_mul == 0.0);
  CHECK(bd.l_syn_mul == 0.0);
  CHECK(bd.l_sem_adv == 0.0);
  CHECK(bd.l_syn_adv == 0.0);
  CHECK(bd.l_rec_adv == 0.0);
  CHECK(bd.l_wass > 0.0);
  CHECK(bd.total == Approx(bd.elbo_negated + bd.l_wass).epsilon(1e-12));

  CHECK(adversary_loss(cluster, params, ctx) == 0.0);

  const EncodedDocument enc = encode(cluster.docs[0].token_ids, params);
  CHECK(enc.v_sem.mean.size() == 4);  // D_sem + D_syn
  CHECK(enc.v_syn.mean.empty());
}

TEST_CASE("finite differences confirm the main-phase gradient") {
  const auto vocab = toy_vocab();
  ModelParams params(toy_config(), vocab.size(), tag_count());
  const PreparedCluster cluster = prepare_cluster(toy_cluster(), vocab);

  LossContext ctx;
  ctx.noise = {9, 1, false};
  ctx.kl_scale = 0.7;

  params.zero_grads(Group::Main);
  diff::Tape tape;
  ParamBinder bind(tape, params, Phase::Main);
  tape.backward(total_loss_t(bind, cluster, ctx, nullptr));

  const double worst = max_rel_fd_error(params, Group::Main, [&] {
    return total_loss(cluster, params, ctx).total;
  });
  CHECK(worst <= 1e-4);
}

TEST_CASE("finite differences confirm the adversary-phase gradient") {
  const auto vocab = toy_vocab();
  ModelParams params(toy_config(), vocab.size(), tag_count());
  const PreparedCluster cluster = prepare_cluster(toy_cluster(), vocab);

  LossContext ctx;
  ctx.noise = {9, 2, false};

  params.zero_grads(Group::Adversary);
  diff::Tape tape;
  ParamBinder bind(tape, params, Phase::Adversary);
  tape.backward(adversary_loss_t(bind, cluster, ctx));

  const double worst = max_rel_fd_error(params, Group::Adversary, [&] {
    return adversary_loss(cluster, params, ctx);
  });
  CHECK(worst <= 1e-4);
}

TEST_CASE("finite differences hold under the ablation toggles") {
  const auto vocab = toy_vocab();
  const PreparedCluster cluster = prepare_cluster(toy_cluster(), vocab);

  RunConfig no_dis = toy_config();
  no_dis.disentangle = false;
  RunConfig no_tf = toy_config();
  no_tf.transformer = false;
  no_tf.strategy = Strategy::OCenter;

  for (const RunConfig& cfg : {no_dis, no_tf}) {
    ModelParams params(cfg, vocab.size(), tag_count());
    LossContext ctx;
    ctx.noise = {9, 4, false};

    params.zero_grads(Group::Main);
    diff::Tape tape;
    ParamBinder bind(tape, params, Phase::Main);
    tape.backward(total_loss_t(bind, cluster, ctx, nullptr));

    const double worst = max_rel_fd_error(params, Group::Main, [&] {
      return total_loss(cluster, params, ctx).total;
    });
    CHECK(worst <= 1e-4);
  }
}
