#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wassos/config.hpp"
#include "wassos/optimizer.hpp"
#include "wassos/params.hpp"

namespace wassos::ckpt {

struct NamedArray {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<double> values;
};

struct RawCheckpoint {
  std::uint32_t version = 1;
  std::string config_text;
  std::vector<NamedArray> entries;
};

// Binary layout: magic "WOSS", version u32, length-prefixed UTF-8 config,
// entry count u32, then per entry: name length u32 + bytes, rank u32, dims
// u64 each, values f64; all little-endian. save(load(x)) is byte-identical.
void save_raw(const std::string& path, const RawCheckpoint& raw);
RawCheckpoint load_raw(const std::string& path);

// Writes the full training state: every parameter array in registry order,
// Adam moments for both groups ("m:"/"v:" entries), and the counters.
void save_checkpoint(const std::string& path, const model::ModelParams& params,
                     const opt::AdamState& adam_main,
                     const opt::AdamState& adam_adversary, std::uint64_t step,
                     std::uint64_t adversary_updates);

struct TrainingSnapshot {
  RunConfig config;
  RawCheckpoint raw;
  std::uint64_t step = 0;
  std::uint64_t adversary_updates = 0;
  std::size_t vocab_size = 0;  // rows of the embed entry

  const NamedArray* find(const std::string& name) const;
};

TrainingSnapshot load_checkpoint(const std::string& path);

// Copies parameter arrays / Adam moments out of the snapshot into a registry
// built from the same config. Throws DataError on name or shape mismatches.
void restore_params(const TrainingSnapshot& snap, model::ModelParams& params);
opt::AdamState restore_adam(const TrainingSnapshot& snap,
                            const model::ModelParams& params,
                            model::Group group);

}  // namespace wassos::ckpt
