#include "wassos/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "wassos/errors.hpp"

namespace wassos {

std::string strategy_name(Strategy s) {
  return s == Strategy::TCenter ? "t-center" : "o-center";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "t-center") return Strategy::TCenter;
  if (name == "o-center") return Strategy::OCenter;
  throw ConfigError("unknown strategy \"" + name +
                    "\" (expected t-center or o-center)");
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  require(embed_dim >= 1, "embed_dim must be >= 1");
  require(hidden_dim >= 1, "hidden_dim must be >= 1");
  require(sem_dim >= 1, "sem_dim must be >= 1");
  require(syn_dim >= 1, "syn_dim must be >= 1");
  require(heads >= 1, "heads must be >= 1");
  require(!transformer || latent_dim() % heads == 0,
          "heads must divide sem_dim + syn_dim when the transformer is on");
  for (double c : {coef_elbo, coef_sem_mul, coef_syn_mul, coef_sem_adv,
                   coef_syn_adv, coef_rec_adv, coef_wass}) {
    require(c >= 0.0, "loss coefficients must be >= 0");
  }
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam_beta1 out of [0,1)");
  require(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam_beta2 out of [0,1)");
  require(adam_epsilon > 0.0, "adam_epsilon must be > 0");
  require(epochs >= 0, "epochs must be >= 0");
  require(batch >= 1, "batch must be >= 1");
  require(min_freq >= 1, "min_freq must be >= 1");
  require(beam_width >= 1, "beam_width must be >= 1");
  require(max_len >= 1, "max_len must be >= 1");
  require(checkpoint_every >= 1, "checkpoint_every must be >= 1");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Exact decimal form that round-trips a double bit-for-bit.
std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config: bad integer for " + key + ": \"" + v + "\"");
  }
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config: bad unsigned integer for " + key + ": \"" + v +
                      "\"");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: bad real for " + key + ": \"" + v + "\"");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("config: bad boolean for " + key + ": \"" + v +
                    "\" (expected true or false)");
}

// Ordered field table; serialization emits in this order.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    auto add_int = [&t](const std::string& key, int RunConfig::* member) {
      t.push_back({key,
                   {[member](const RunConfig& c) {
                      return std::to_string(c.*member);
                    },
                    [key, member](RunConfig& c, const std::string& v) {
                      c.*member = parse_int(key, v);
                    }}});
    };
    auto add_double = [&t](const std::string& key,
                           double RunConfig::* member) {
      t.push_back({key,
                   {[member](const RunConfig& c) {
                      return fmt_double(c.*member);
                    },
                    [key, member](RunConfig& c, const std::string& v) {
                      c.*member = parse_double(key, v);
                    }}});
    };
    auto add_bool = [&t](const std::string& key, bool RunConfig::* member) {
      t.push_back({key,
                   {[member](const RunConfig& c) {
                      return c.*member ? "true" : "false";
                    },
                    [key, member](RunConfig& c, const std::string& v) {
                      c.*member = parse_bool(key, v);
                    }}});
    };

    add_int("embed_dim", &RunConfig::embed_dim);
    add_int("hidden_dim", &RunConfig::hidden_dim);
    add_int("sem_dim", &RunConfig::sem_dim);
    add_int("syn_dim", &RunConfig::syn_dim);
    add_int("heads", &RunConfig::heads);
    t.push_back({"strategy",
                 {[](const RunConfig& c) { return strategy_name(c.strategy); },
                  [](RunConfig& c, const std::string& v) {
                    c.strategy = strategy_from_name(v);
                  }}});
    add_bool("disentangle", &RunConfig::disentangle);
    add_bool("transformer", &RunConfig::transformer);
    add_double("coef_elbo", &RunConfig::coef_elbo);
    add_double("coef_sem_mul", &RunConfig::coef_sem_mul);
    add_double("coef_syn_mul", &RunConfig::coef_syn_mul);
    add_double("coef_sem_adv", &RunConfig::coef_sem_adv);
    add_double("coef_syn_adv", &RunConfig::coef_syn_adv);
    add_double("coef_rec_adv", &RunConfig::coef_rec_adv);
    add_double("coef_wass", &RunConfig::coef_wass);
    add_double("learning_rate", &RunConfig::learning_rate);
    add_double("adam_beta1", &RunConfig::adam_beta1);
    add_double("adam_beta2", &RunConfig::adam_beta2);
    add_double("adam_epsilon", &RunConfig::adam_epsilon);
    add_bool("kl_warmup", &RunConfig::kl_warmup);
    add_int("epochs", &RunConfig::epochs);
    add_int("batch", &RunConfig::batch);
    add_int("min_freq", &RunConfig::min_freq);
    add_int("beam_width", &RunConfig::beam_width);
    add_int("max_len", &RunConfig::max_len);
    add_int("checkpoint_every", &RunConfig::checkpoint_every);
    t.push_back({"seed",
                 {[](const RunConfig& c) { return std::to_string(c.seed); },
                  [](RunConfig& c, const std::string& v) {
                    c.seed = parse_u64("seed", v);
                  }}});
    return t;
  }();
  return table;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value, got \"" + stripped + "\"");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    bool found = false;
    for (const auto& [name, field] : fields()) {
      if (name == key) {
        field.set(config, value);
        found = true;
        break;
      }
    }
    if (!found) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": unknown key \"" + key + "\"");
    }
  }
  config.validate();
  return config;
}

RunConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in);
}

std::string serialize_config(const RunConfig& config) {
  std::string out;
  for (const auto& [name, field] : fields()) {
    out += name;
    out += " = ";
    out += field.get(config);
    out += "\n";
  }
  return out;
}

}  // namespace wassos
