#include "wassos/params.hpp"

#include <cmath>
#include <stdexcept>

#include "wassos/rng.hpp"

namespace wassos::model {

ModelParams::ModelParams(const RunConfig& config, std::size_t vocab_size,
                         std::size_t tag_count)
    : config_(config), vocab_size_(vocab_size), tag_count_(tag_count) {
  config_.validate();
  if (vocab_size_ < 5) {
    throw std::invalid_argument(
        "ModelParams: vocabulary must extend past the 4 reserved tokens");
  }
  if (tag_count_ < 1) {
    throw std::invalid_argument("ModelParams: empty tag inventory");
  }
  const int V = static_cast<int>(vocab_size_);
  const int T = static_cast<int>(tag_count_);
  const int E = config_.embed_dim;
  const int H = config_.hidden_dim;
  const int Ds = config_.sem_dim;
  const int Dy = config_.syn_dim;
  const int Dz = config_.latent_dim();

  auto gru = [this](const std::string& prefix, int in, int hidden,
                    Group group) {
    for (const char* gate : {"z", "r", "h"}) {
      add(prefix + "_W" + gate, {hidden, in}, group);
      add(prefix + "_U" + gate, {hidden, hidden}, group);
      add(prefix + "_b" + gate, {hidden}, group);
    }
  };
  auto affine_head = [this](const std::string& prefix, int out, int in,
                            Group group) {
    add(prefix + "_L", {out, in}, group);
    add(prefix + "_bL", {out}, group);
    add(prefix + "_G", {out, in}, group);
    add(prefix + "_bG", {out}, group);
  };
  auto scorer = [this](const std::string& prefix, int in, int hidden,
                       Group group) {
    add(prefix + "_W1", {hidden, in}, group);
    add(prefix + "_b1", {hidden}, group);
    add(prefix + "_W2", {1, hidden}, group);
    add(prefix + "_b2", {1}, group);
  };

  add("embed", {V, E}, Group::Main);
  gru("enc", E, H, Group::Main);

  if (config_.disentangle) {
    affine_head("sem", Ds, H, Group::Main);
    affine_head("syn", Dy, H, Group::Main);
    affine_head("sum_sem", Ds, H, Group::Main);
    affine_head("sum_syn", Dy, H, Group::Main);
  } else {
    affine_head("lat", Dz, H, Group::Main);
    affine_head("sum_lat", Dz, H, Group::Main);
  }

  gru("dec", E + Dz, H, Group::Main);
  add("dec_init_W", {H, Dz}, Group::Main);
  add("dec_init_b", {H}, Group::Main);
  add("out_W", {V, H}, Group::Main);
  add("out_b", {V}, Group::Main);

  if (config_.transformer) {
    const int F = 4 * Dz;
    add("attn_Wq", {Dz, Dz}, Group::Main);
    add("attn_WkT", {H, Dz}, Group::Main);  // stored pre-transposed
    add("attn_WvT", {H, Dz}, Group::Main);
    add("attn_Wo", {Dz, Dz}, Group::Main);
    add("attn_bo", {Dz}, Group::Main);
    add("ff_W1", {F, Dz}, Group::Main);
    add("ff_b1", {F}, Group::Main);
    add("ff_W2", {Dz, F}, Group::Main);
    add("ff_b2", {Dz}, Group::Main);
  }

  scorer("fw", H, H, Group::Main);
  scorer("fl", Dz, H, Group::Main);

  if (config_.disentangle) {
    // Multi-task heads (trained with the main model).
    add("mt_bow_W", {V, Ds}, Group::Main);
    add("mt_bow_b", {V}, Group::Main);
    add("mt_tag_emb", {T + 1, E}, Group::Main);  // extra row = start symbol
    gru("mt_tag", E, H, Group::Main);
    add("mt_tag_init_W", {H, Dy}, Group::Main);
    add("mt_tag_init_b", {H}, Group::Main);
    add("mt_tag_out_W", {T, H}, Group::Main);
    add("mt_tag_out_b", {T}, Group::Main);

    // Adversary heads, each owning its input embeddings so adversary-phase
    // updates never touch main-model arrays.
    add("adv_bow_W", {V, Dy}, Group::Adversary);
    add("adv_bow_b", {V}, Group::Adversary);
    add("adv_tag_emb", {T + 1, E}, Group::Adversary);
    gru("adv_tag", E, H, Group::Adversary);
    add("adv_tag_init_W", {H, Ds}, Group::Adversary);
    add("adv_tag_init_b", {H}, Group::Adversary);
    add("adv_tag_out_W", {T, H}, Group::Adversary);
    add("adv_tag_out_b", {T}, Group::Adversary);
    add("rec_emb", {V, E}, Group::Adversary);
    gru("rec", E, H, Group::Adversary);
    add("rec_init_W", {H, Dz}, Group::Adversary);
    add("rec_init_b", {H}, Group::Adversary);
    add("rec_out_W", {V, H}, Group::Adversary);
    add("rec_out_b", {V}, Group::Adversary);
  }

  init_values(config_.seed);
}

void ModelParams::add(const std::string& name, std::vector<int> shape,
                      Group group) {
  Param p;
  p.name = name;
  p.shape = std::move(shape);
  std::size_t n = 1;
  for (int d : p.shape) n *= static_cast<std::size_t>(d);
  p.value.assign(n, 0.0);
  p.grad.assign(n, 0.0);
  p.group = group;
  index_[p.name] = params_.size();
  params_.push_back(std::move(p));
}

void ModelParams::init_values(std::uint64_t seed) {
  // Matrices: uniform in +-1/sqrt(fan-in), with fan-in = column count.
  // Vectors (biases) stay zero, except posterior log-std biases (*_bG) which
  // start at -2 so early posteriors are tight enough to carry signal.
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Param& p = params_[i];
    if (p.shape.size() < 2) {
      if (p.name.size() > 3 && p.name.ends_with("_bG")) {
        for (double& v : p.value) v = -2.0;
      }
      continue;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.shape[1]));
    CounterRng rng(seed, 0, i, RngPurpose::ParamInit);
    for (double& v : p.value) v = rng.next_uniform(-bound, bound);
  }
}

Param& ModelParams::at(const std::string& name) {
  const auto it = index_.find(name);
  if (it == index_.end()) {
    throw std::invalid_argument("unknown parameter \"" + name + "\"");
  }
  return params_[it->second];
}

const Param& ModelParams::at(const std::string& name) const {
  return const_cast<ModelParams*>(this)->at(name);
}

void ModelParams::zero_grads(Group group) {
  for (Param& p : params_) {
    if (p.group == group) p.grad.assign(p.grad.size(), 0.0);
  }
}

std::size_t ModelParams::coord_count(Group group) const {
  std::size_t n = 0;
  for (const Param& p : params_) {
    if (p.group == group) n += p.numel();
  }
  return n;
}

diff::Tensor ParamBinder::operator()(const std::string& name) {
  const auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  Param& p = params_.at(name);
  const bool trainable =
      !frozen_ && (phase_ == Phase::Main) == (p.group == Group::Main);
  const diff::Tensor t =
      tape_.input(p.shape, p.value, trainable, trainable ? &p.grad : nullptr);
  bound_.emplace(name, t);
  return t;
}

}  // namespace wassos::model
