#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "wassos/config.hpp"
#include "wassos/errors.hpp"

using namespace wassos;

TEST_CASE("defaults") {
  RunConfig c;
  CHECK(c.embed_dim == 16);
  CHECK(c.hidden_dim == 32);
  CHECK(c.sem_dim == 8);
  CHECK(c.syn_dim == 8);
  CHECK(c.heads == 4);
  CHECK(c.latent_dim() == 16);
  CHECK(c.strategy == Strategy::TCenter);
  CHECK(c.disentangle);
  CHECK(c.transformer);
  CHECK(c.coef_elbo == 1.0);
  CHECK(c.coef_wass == 1.0);
  CHECK(c.learning_rate == 5e-4);
  CHECK(c.adam_beta1 == 0.9);
  CHECK(c.adam_beta2 == 0.999);
  CHECK(c.adam_epsilon == 1e-8);
  CHECK(c.kl_warmup);
  CHECK(c.epochs == 30);
  CHECK(c.batch == 1);
  CHECK(c.min_freq == 2);
  CHECK(c.beam_width == 5);
  CHECK(c.max_len == 40);
  CHECK(c.checkpoint_every == 10);
  CHECK(c.seed == 42);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("parse basic file with comments and blanks") {
  const std::string text =
      "# run settings\n"
      "\n"
      "embed_dim = 8\n"
      "  hidden_dim=12   # trailing comment\n"
      "strategy = o-center\n"
      "disentangle = false\n"
      "coef_wass = 0.25\n"
      "seed = 7\n";
  const RunConfig c = parse_config_text(text);
  CHECK(c.embed_dim == 8);
  CHECK(c.hidden_dim == 12);
  CHECK(c.strategy == Strategy::OCenter);
  CHECK_FALSE(c.disentangle);
  CHECK(c.coef_wass == 0.25);
  CHECK(c.seed == 7);
  // untouched keys keep defaults
  CHECK(c.epochs == 30);
  CHECK(c.min_freq == 2);
}

TEST_CASE("round trip is identity") {
  RunConfig c;
  c.embed_dim = 5;
  c.hidden_dim = 9;
  c.sem_dim = 3;
  c.syn_dim = 5;
  c.heads = 2;
  c.strategy = Strategy::OCenter;
  c.disentangle = false;
  c.transformer = false;
  c.coef_elbo = 0.125;
  c.coef_sem_mul = 1.0 / 3.0;  // not exactly representable in decimal
  c.coef_syn_mul = 2.5;
  c.coef_sem_adv = 0.0;
  c.coef_syn_adv = 1e-9;
  c.coef_rec_adv = 7.0;
  c.coef_wass = 0.3;
  c.learning_rate = 1.7e-3;
  c.adam_beta1 = 0.85;
  c.adam_beta2 = 0.9995;
  c.adam_epsilon = 3e-9;
  c.kl_warmup = false;
  c.epochs = 2;
  c.batch = 3;
  c.min_freq = 1;
  c.beam_width = 2;
  c.max_len = 11;
  c.checkpoint_every = 1;
  c.seed = 0xDEADBEEFCAFEF00DULL;

  const std::string text = serialize_config(c);
  const RunConfig back = parse_config_text(text);
  CHECK(back == c);
  // serialize is a fixed point too
  CHECK(serialize_config(back) == text);
}

TEST_CASE("default config round trips") {
  const RunConfig c;
  CHECK(parse_config_text(serialize_config(c)) == c);
}

TEST_CASE("unknown key names the line") {
  const std::string text = "embed_dim = 8\nnot_a_key = 3\n";
  try {
    parse_config_text(text);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("not_a_key") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);
  }
}

TEST_CASE("malformed line names the line") {
  CHECK_THROWS_AS(parse_config_text("embed_dim 8\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("embed_dim = eight\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("= 3\n"), ConfigError);
}

TEST_CASE("validation rejects out-of-range values") {
  RunConfig c;
  c.embed_dim = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = RunConfig{};
  c.coef_wass = -0.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = RunConfig{};
  c.sem_dim = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = RunConfig{};
  c.heads = 3;  // must divide latent_dim() = 16 while transformer is on
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = RunConfig{};
  c.heads = 3;
  c.transformer = false;  // divisibility only matters with the layer on
  CHECK_NOTHROW(c.validate());

  c = RunConfig{};
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = RunConfig{};
  c.beam_width = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = RunConfig{};
  c.epochs = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = RunConfig{};
  c.epochs = 0;  // zero epochs is a legal no-op run
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("parse validates the assembled config") {
  CHECK_THROWS_AS(parse_config_text("embed_dim = 0\n"), ConfigError);
}

TEST_CASE("strategy names") {
  CHECK(strategy_name(Strategy::TCenter) == "t-center");
  CHECK(strategy_name(Strategy::OCenter) == "o-center");
  CHECK(strategy_from_name("t-center") == Strategy::TCenter);
  CHECK(strategy_from_name("o-center") == Strategy::OCenter);
  CHECK_THROWS_AS(strategy_from_name("center"), ConfigError);
}
