#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace wassos {

enum class Strategy { TCenter, OCenter };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

// Flat run configuration. File format: UTF-8 "key = value" lines with "#"
// comments; unspecified keys keep their defaults.
struct RunConfig {
  // Dims.
  int embed_dim = 16;   // E
  int hidden_dim = 32;  // H
  int sem_dim = 8;      // D_sem
  int syn_dim = 8;      // D_syn
  int heads = 4;        // attention heads in the transformer layer

  Strategy strategy = Strategy::TCenter;
  bool disentangle = true;  // off = WassOS-dis ablation
  bool transformer = true;  // off = WassOS-trans ablation

  // Coefficients on the seven loss terms; 1.0 reproduces the unweighted sum.
  double coef_elbo = 1.0;
  double coef_sem_mul = 1.0;
  double coef_syn_mul = 1.0;
  double coef_sem_adv = 1.0;
  double coef_syn_adv = 1.0;
  double coef_rec_adv = 1.0;
  double coef_wass = 1.0;

  double learning_rate = 5e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  bool kl_warmup = true;  // linear 0 -> 1 over the first 10% of main steps

  int epochs = 30;
  int batch = 1;  // clusters per optimization step
  int min_freq = 2;
  int beam_width = 5;
  int max_len = 40;
  int checkpoint_every = 10;  // epochs between periodic checkpoints
  std::uint64_t seed = 42;

  int latent_dim() const { return sem_dim + syn_dim; }

  // Throws ConfigError on out-of-range values or inconsistent dims.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(std::istream& in);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);
std::string serialize_config(const RunConfig& config);

}  // namespace wassos
