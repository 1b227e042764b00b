#include "wassos/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "wassos/errors.hpp"

namespace wassos::ckpt {

namespace {

constexpr char kMagic[4] = {'W', 'O', 'S', 'S'};

void put_u32(std::string& out, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, 8);
  put_u64(out, bits);
}

class Reader {
 public:
  Reader(const std::string& data, const std::string& path)
      : data_(data), path_(path) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) {
      x |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 4;
    return x;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) {
      x |= static_cast<std::uint64_t>(
               static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 8;
    return x;
  }

  double f64() {
    const std::uint64_t bits = u64();
    double x;
    std::memcpy(&x, &bits, 8);
    return x;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > data_.size()) {
      throw DataError("checkpoint \"" + path_ + "\" is truncated");
    }
  }

  const std::string& data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_raw(const std::string& path, const RawCheckpoint& raw) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, raw.version);
  put_u32(out, static_cast<std::uint32_t>(raw.config_text.size()));
  out += raw.config_text;
  put_u32(out, static_cast<std::uint32_t>(raw.entries.size()));
  for (const NamedArray& e : raw.entries) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out += e.name;
    put_u32(out, static_cast<std::uint32_t>(e.shape.size()));
    std::uint64_t numel = 1;
    for (const std::uint64_t d : e.shape) {
      put_u64(out, d);
      numel *= d;
    }
    if (numel != e.values.size()) {
      throw std::invalid_argument("checkpoint entry \"" + e.name +
                                  "\" shape does not match its value count");
    }
    for (const double x : e.values) put_f64(out, x);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open \"" + path + "\" for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("failed writing \"" + path + "\"");
}

RawCheckpoint load_raw(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint \"" + path + "\"");
  std::string data((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());

  Reader r(data, path);
  if (r.bytes(4) != std::string(kMagic, 4)) {
    throw DataError("\"" + path + "\" is not a checkpoint (bad magic)");
  }
  RawCheckpoint raw;
  raw.version = r.u32();
  if (raw.version != 1) {
    throw DataError("checkpoint \"" + path + "\" has unsupported version " +
                    std::to_string(raw.version));
  }
  raw.config_text = r.bytes(r.u32());
  const std::uint32_t count = r.u32();
  raw.entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray e;
    e.name = r.bytes(r.u32());
    const std::uint32_t rank = r.u32();
    std::uint64_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      e.shape.push_back(r.u64());
      numel *= e.shape.back();
    }
    e.values.resize(numel);
    for (std::uint64_t k = 0; k < numel; ++k) e.values[k] = r.f64();
    raw.entries.push_back(std::move(e));
  }
  if (!r.done()) {
    throw DataError("checkpoint \"" + path + "\" has trailing bytes");
  }
  return raw;
}

namespace {

NamedArray scalar_entry(const std::string& name, double value) {
  return {name, {1}, {value}};
}

std::vector<std::uint64_t> to_u64_shape(const std::vector<int>& shape) {
  std::vector<std::uint64_t> out;
  for (const int d : shape) out.push_back(static_cast<std::uint64_t>(d));
  return out;
}

void append_adam_entries(std::vector<NamedArray>& entries,
                         const model::ModelParams& params,
                         const opt::AdamState& state, model::Group group,
                         const std::string& tag) {
  const auto& all = params.all();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].group != group) continue;
    entries.push_back({"m:" + all[i].name, to_u64_shape(all[i].shape),
                       state.m[i]});
    entries.push_back({"v:" + all[i].name, to_u64_shape(all[i].shape),
                       state.v[i]});
  }
  entries.push_back(scalar_entry("t:" + tag, static_cast<double>(state.t)));
}

}  // namespace

void save_checkpoint(const std::string& path, const model::ModelParams& params,
                     const opt::AdamState& adam_main,
                     const opt::AdamState& adam_adversary, std::uint64_t step,
                     std::uint64_t adversary_updates) {
  RawCheckpoint raw;
  raw.config_text = serialize_config(params.config());
  for (const model::Param& p : params.all()) {
    raw.entries.push_back({p.name, to_u64_shape(p.shape), p.value});
  }
  append_adam_entries(raw.entries, params, adam_main, model::Group::Main,
                      "main");
  append_adam_entries(raw.entries, params, adam_adversary,
                      model::Group::Adversary, "adv");
  raw.entries.push_back(scalar_entry("step", static_cast<double>(step)));
  raw.entries.push_back(
      scalar_entry("adv_updates", static_cast<double>(adversary_updates)));
  save_raw(path, raw);
}

const NamedArray* TrainingSnapshot::find(const std::string& name) const {
  for (const NamedArray& e : raw.entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

TrainingSnapshot load_checkpoint(const std::string& path) {
  TrainingSnapshot snap;
  snap.raw = load_raw(path);
  try {
    snap.config = parse_config_text(snap.raw.config_text);
  } catch (const ConfigError& e) {
    throw DataError("checkpoint \"" + path +
                    "\" holds an invalid config: " + e.what());
  }
  const NamedArray* step = snap.find("step");
  const NamedArray* adv = snap.find("adv_updates");
  const NamedArray* embed = snap.find("embed");
  if (!step || !adv || !embed || embed->shape.empty()) {
    throw DataError("checkpoint \"" + path + "\" is missing core entries");
  }
  snap.step = static_cast<std::uint64_t>(step->values.at(0));
  snap.adversary_updates = static_cast<std::uint64_t>(adv->values.at(0));
  snap.vocab_size = static_cast<std::size_t>(embed->shape[0]);
  return snap;
}

void restore_params(const TrainingSnapshot& snap, model::ModelParams& params) {
  for (model::Param& p : params.all()) {
    const NamedArray* e = snap.find(p.name);
    if (!e) {
      throw DataError("checkpoint is missing parameter \"" + p.name + "\"");
    }
    if (e->shape != to_u64_shape(p.shape) ||
        e->values.size() != p.value.size()) {
      throw DataError("checkpoint parameter \"" + p.name +
                      "\" has a mismatched shape");
    }
    p.value = e->values;
  }
}

opt::AdamState restore_adam(const TrainingSnapshot& snap,
                            const model::ModelParams& params,
                            model::Group group) {
  opt::AdamState state = opt::make_adam_state(params, group);
  const auto& all = params.all();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].group != group) continue;
    const NamedArray* m = snap.find("m:" + all[i].name);
    const NamedArray* v = snap.find("v:" + all[i].name);
    if (!m || !v || m->values.size() != all[i].numel() ||
        v->values.size() != all[i].numel()) {
      throw DataError("checkpoint is missing optimizer state for \"" +
                      all[i].name + "\"");
    }
    state.m[i] = m->values;
    state.v[i] = v->values;
  }
  const NamedArray* t =
      snap.find(group == model::Group::Main ? "t:main" : "t:adv");
  if (!t) throw DataError("checkpoint is missing an optimizer step counter");
  state.t = static_cast<std::uint64_t>(t->values.at(0));
  return state;
}

}  // namespace wassos::ckpt
