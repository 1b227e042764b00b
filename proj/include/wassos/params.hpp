#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "wassos/config.hpp"
#include "wassos/tensor.hpp"

namespace wassos::model {

enum class Group { Main, Adversary };
enum class Phase { Main, Adversary };

// One named parameter array. Gradients accumulate into grad via the tape's
// grad-sink mechanism when the parameter is bound as trainable.
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;
  Group group = Group::Main;

  std::size_t numel() const { return value.size(); }
};

// Registry of every model parameter, created in a fixed order derived from
// the config so that initialization, checkpoints, and optimizer state all
// agree on indexing.
class ModelParams {
 public:
  ModelParams(const RunConfig& config, std::size_t vocab_size,
              std::size_t tag_count);

  const RunConfig& config() const { return config_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t tag_count() const { return tag_count_; }

  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) != 0; }

  std::vector<Param>& all() { return params_; }
  const std::vector<Param>& all() const { return params_; }

  void zero_grads(Group group);
  std::size_t coord_count(Group group) const;

  // Number of adversary-phase optimizer updates applied so far; used to log
  // (once) when a main-phase adversarial loss runs against untrained heads.
  std::uint64_t adversary_updates = 0;
  mutable bool warned_untrained_adversary = false;

 private:
  void add(const std::string& name, std::vector<int> shape, Group group);
  void init_values(std::uint64_t seed);

  RunConfig config_;
  std::size_t vocab_size_;
  std::size_t tag_count_;
  std::vector<Param> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Binds parameters onto one tape, each at most once. Trainability follows
// the phase: main phase trains Group::Main, adversary phase Group::Adversary;
// the opposite group is bound as a constant. A frozen binder (inference)
// binds everything as constants.
class ParamBinder {
 public:
  ParamBinder(diff::Tape& tape, ModelParams& params, Phase phase,
              bool frozen = false)
      : tape_(tape), params_(params), phase_(phase), frozen_(frozen) {}

  diff::Tensor operator()(const std::string& name);
  Phase phase() const { return phase_; }
  ModelParams& params() { return params_; }
  diff::Tape& tape() { return tape_; }

 private:
  diff::Tape& tape_;
  ModelParams& params_;
  Phase phase_;
  bool frozen_;
  std::unordered_map<std::string, diff::Tensor> bound_;
};

}  // namespace wassos::model
