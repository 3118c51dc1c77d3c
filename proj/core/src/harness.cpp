#include "varbench/harness.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "varbench/concentration.h"
#include "varbench/error.h"
#include "varbench/varlin2.h"
#include "varbench/voful2.h"

namespace varbench {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error("invalid config: " + join(errors, "; ")), errors_(std::move(errors)) {}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kBandit: return "bandit";
    case ExperimentKind::kMdp: return "mdp";
    case ExperimentKind::kEpc: return "epc";
    case ExperimentKind::kConc: return "conc";
  }
  return "unknown";
}

namespace {

const std::vector<double>& default_theta_for(int d, std::vector<double>& store) {
  store.assign(static_cast<std::size_t>(d), 0.0);
  store[0] = 0.4;
  for (int i = 1; i < d; ++i) store[static_cast<std::size_t>(i)] = 0.2 / std::sqrt(static_cast<double>(d - 1));
  return store;
}

std::vector<std::string> allowed_algorithms(ExperimentKind k) {
  if (k == ExperimentKind::kBandit) return {"voful2", "oful"};
  if (k == ExperimentKind::kMdp) return {"varlin2", "varlin2-oracle"};
  return {};
}

std::vector<std::string> sweep_params(ExperimentKind k) {
  if (k == ExperimentKind::kBandit) return {"sigma", "iota_scale", "K"};
  if (k == ExperimentKind::kMdp) return {"iota_scale", "K"};
  return {};
}

// Field-level reader that accumulates errors instead of throwing.
class Reader {
 public:
  Reader(const json& obj, std::string prefix, std::vector<std::string>& errors)
      : obj_(obj), prefix_(std::move(prefix)), errors_(errors) {}

  bool has(const char* key) const { return obj_.contains(key); }
  std::string name(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }
  void fail(const std::string& key, const std::string& what) {
    errors_.push_back("field '" + name(key) + "': " + what);
  }
  void unknown_fields(const std::set<std::string>& allowed) {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!allowed.count(it.key())) errors_.push_back("unknown field '" + name(it.key()) + "'");
    }
  }

  void number(const char* key, double& out, double lo, double hi, bool lo_open = false,
              const std::string& hi_text = "") {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_number()) return fail(key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x) || (lo_open ? x <= lo : x < lo) || x > hi) {
      return fail(key, "value " + fmt_double(x) + " out of range " + (lo_open ? "(" : "[") + fmt_double(lo) +
                           ", " + (hi_text.empty() ? fmt_double(hi) : hi_text) + "]");
    }
    out = x;
  }

  template <class Int>
  void integer(const char* key, Int& out, long long lo, long long hi) {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_number_integer()) return fail(key, "expected an integer");
    if (v.is_number_unsigned() && v.get<unsigned long long>() > static_cast<unsigned long long>(hi)) {
      return fail(key, "value out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    const long long x = v.get<long long>();
    if (x < lo || x > hi) {
      return fail(key, "value " + std::to_string(x) + " out of range [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "]");
    }
    out = static_cast<Int>(x);
  }

  void seed(const char* key, std::uint64_t& out) {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      return fail(key, "expected a non-negative 64-bit integer");
    }
    out = v.get<std::uint64_t>();
  }

  void boolean(const char* key, bool& out) {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_boolean()) return fail(key, "expected true or false");
    out = v.get<bool>();
  }

  void string(const char* key, std::string& out) {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_string()) return fail(key, "expected a string");
    out = v.get<std::string>();
  }

  void choice(const char* key, std::string& out, const std::vector<std::string>& options) {
    std::string v = out;
    string(key, v);
    if (std::find(options.begin(), options.end(), v) == options.end()) {
      return fail(key, "'" + v + "' is not one of {" + join(options, ", ") + "}");
    }
    out = v;
  }

  bool number_array(const char* key, std::vector<double>& out) {
    if (!has(key)) return false;
    const json& v = obj_.at(key);
    if (!v.is_array()) {
      fail(key, "expected an array of numbers");
      return false;
    }
    std::vector<double> tmp;
    for (const auto& e : v) {
      if (!e.is_number()) {
        fail(key, "expected an array of numbers");
        return false;
      }
      tmp.push_back(e.get<double>());
    }
    out = std::move(tmp);
    return true;
  }

  const json& at(const char* key) const { return obj_.at(key); }

 private:
  const json& obj_;
  std::string prefix_;
  std::vector<std::string>& errors_;
};

const double kDeltaMax = std::exp(-1.0);

void parse_env(const json& j, ExperimentConfig& c, std::vector<std::string>& errors) {
  if (!j.is_object()) {
    errors.push_back("field 'env': expected an object");
    return;
  }
  Reader r(j, "env", errors);
  r.unknown_fields({"preset", "d", "theta_star", "theta_on_net"});
  if (!r.has("preset")) errors.push_back("missing required field 'env.preset'");
  r.choice("preset", c.env.preset, {"circle-8", "basis", "sphere-16"});
  r.integer("d", c.env.d, 1, kMaxDim);
  if (c.env.preset == "circle-8" && c.env.d != 2) r.fail("d", "preset circle-8 needs d = 2");
  r.boolean("theta_on_net", c.env.theta_on_net);
  if (r.number_array("theta_star", c.env.theta_star)) {
    if (c.env.theta_star.size() != static_cast<std::size_t>(c.env.d)) {
      r.fail("theta_star", "length " + std::to_string(c.env.theta_star.size()) + " does not match d = " +
                               std::to_string(c.env.d));
    }
  } else {
    default_theta_for(c.env.d, c.env.theta_star);
  }
}

void parse_sigma(const json& j, ExperimentConfig& c, std::vector<std::string>& errors) {
  if (j.is_number()) {
    const double v = j.get<double>();
    if (!(v >= 0.0 && v <= 1.0)) {
      errors.push_back("field 'sigma': value " + fmt_double(v) + " out of range [0, 1]");
      return;
    }
    c.sigma = SigmaSpec{};
    c.sigma.value = v;
    return;
  }
  if (!j.is_object()) {
    errors.push_back("field 'sigma': expected a number or an object");
    return;
  }
  Reader r(j, "sigma", errors);
  r.unknown_fields({"schedule", "value", "hi", "lo", "switch_round"});
  r.choice("schedule", c.sigma.schedule, {"constant", "two-phase", "uniform"});
  r.number("value", c.sigma.value, 0.0, 1.0);
  r.number("hi", c.sigma.hi, 0.0, 1.0);
  r.number("lo", c.sigma.lo, 0.0, 1.0);
  r.integer("switch_round", c.sigma.switch_round, 0, 1'000'000'000);
  if (c.sigma.schedule != "constant" && c.sigma.lo > c.sigma.hi) r.fail("lo", "must not exceed sigma.hi");
}

void parse_mdp_instance(const json& j, ExperimentConfig& c, std::vector<std::string>& errors) {
  Reader r(j, "mdp", errors);
  r.unknown_fields({"S", "A", "H", "base_kernels", "theta_star", "reward", "initial_state"});
  MdpInstanceSpec m;
  for (const char* k : {"S", "A", "H", "base_kernels", "theta_star", "reward"}) {
    if (!r.has(k)) errors.push_back(std::string("missing required field 'mdp.") + k + "'");
  }
  r.integer("S", m.S, 1, 64);
  r.integer("A", m.A, 1, 16);
  r.integer("H", m.H, 1, 64);
  r.integer("initial_state", m.initial_state, 0, 63);
  r.number_array("theta_star", m.theta_star);
  const std::size_t before = errors.size();
  try {
    if (r.has("base_kernels")) {
      for (const auto& kernel : r.at("base_kernels")) {
        std::vector<double> flat;
        if (static_cast<int>(kernel.size()) != m.S) throw std::runtime_error("kernel needs S rows");
        for (const auto& per_s : kernel) {
          if (static_cast<int>(per_s.size()) != m.A) throw std::runtime_error("kernel needs A entries per state");
          for (const auto& row : per_s) {
            if (static_cast<int>(row.size()) != m.S) throw std::runtime_error("kernel rows need S entries");
            for (const auto& p : row) flat.push_back(p.get<double>());
          }
        }
        m.base_kernels.push_back(std::move(flat));
      }
    }
    if (r.has("reward")) {
      const auto& rw = r.at("reward");
      if (static_cast<int>(rw.size()) != m.S) throw std::runtime_error("reward needs S rows");
      for (const auto& per_s : rw) {
        if (static_cast<int>(per_s.size()) != m.A) throw std::runtime_error("reward rows need A entries");
        for (const auto& v : per_s) m.reward.push_back(v.get<double>());
      }
    }
  } catch (const std::exception& e) {
    errors.push_back(std::string("field 'mdp': malformed instance (") + e.what() + ")");
  }
  if (errors.size() != before) return;
  try {
    MixtureMdp probe(m.S, m.A, m.H, m.base_kernels, m.theta_star, m.reward, m.initial_state);
    (void)probe;
  } catch (const std::exception& e) {
    errors.push_back(std::string("field 'mdp': ") + e.what());
    return;
  }
  c.mdp_instance = std::move(m);
}

void parse_grid(const json& j, ExperimentConfig& c, std::vector<std::string>& errors) {
  if (!j.is_object()) {
    errors.push_back("field 'grid': expected an object");
    return;
  }
  Reader r(j, "grid", errors);
  r.unknown_fields({"dims", "taus", "qs", "ns"});
  std::vector<double> v;
  if (r.number_array("dims", v)) {
    c.grid.dims.clear();
    for (double x : v) {
      if (x != std::floor(x) || x < 1 || x > kMaxDim) {
        r.fail("dims", "entries must be integers in [1, " + std::to_string(kMaxDim) + "]");
        break;
      }
      c.grid.dims.push_back(static_cast<int>(x));
    }
  }
  if (r.number_array("taus", v)) {
    if (std::any_of(v.begin(), v.end(), [](double x) { return !(x > 0.0); })) r.fail("taus", "entries must be positive");
    c.grid.taus = v;
  }
  if (r.number_array("qs", v)) {
    if (std::any_of(v.begin(), v.end(), [](double x) { return !(x > 0.0); })) r.fail("qs", "entries must be positive");
    c.grid.qs = v;
  }
  if (r.number_array("ns", v)) {
    c.grid.ns.clear();
    for (double x : v) {
      if (x != std::floor(x) || x < 1 || x > 1e7) {
        r.fail("ns", "entries must be integers in [1, 10000000]");
        break;
      }
      c.grid.ns.push_back(static_cast<std::size_t>(x));
    }
  }
}

void validate_variants(const ExperimentConfig& c, std::vector<std::string>& errors) {
  for (std::size_t v = 0; v < variant_count(c); ++v) {
    const ExperimentConfig vc = variant_config(c, v);
    try {
      if (c.kind == ExperimentKind::kBandit) (void)build_bandit_env(vc);
    } catch (const std::exception& e) {
      errors.push_back(std::string("field '") + (c.sweep ? "sweep" : "env") + "': " + e.what());
      return;
    }
  }
}

}  // namespace

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  if (kind == ExperimentKind::kBandit) {
    c.algorithms = allowed_algorithms(kind);
    default_theta_for(c.env.d, c.env.theta_star);
    c.theta_xi = default_theta_xi(c.env.d);
    c.mu_xi = 0.1;
  } else if (kind == ExperimentKind::kMdp) {
    c.algorithms = {"varlin2"};
    c.K = 150;
    c.mu_xi = 0.3;
  }
  return c;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("document is not valid JSON: ") + e.what()});
  }
  if (!j.is_object()) throw ConfigError({"document must be a JSON object"});
  std::vector<std::string> errors;
  if (!j.contains("kind")) throw ConfigError({"missing required field 'kind'"});
  if (!j.at("kind").is_string()) throw ConfigError({"field 'kind': expected a string"});
  const std::string kind_s = j.at("kind").get<std::string>();
  ExperimentKind kind;
  if (kind_s == "bandit") kind = ExperimentKind::kBandit;
  else if (kind_s == "mdp") kind = ExperimentKind::kMdp;
  else if (kind_s == "epc") kind = ExperimentKind::kEpc;
  else if (kind_s == "conc") kind = ExperimentKind::kConc;
  else throw ConfigError({"field 'kind': '" + kind_s + "' is not one of {bandit, mdp, epc, conc}"});

  ExperimentConfig c = default_config(kind);
  Reader r(j, "", errors);
  std::set<std::string> allowed{"kind", "label", "seed", "replicates", "output_dir"};
  if (kind == ExperimentKind::kBandit || kind == ExperimentKind::kMdp) {
    allowed.insert({"sweep", "K", "delta", "iota_scale", "mu_xi", "net_cap", "algorithms"});
  }
  if (kind == ExperimentKind::kBandit) allowed.insert({"env", "sigma", "theta_xi"});
  if (kind == ExperimentKind::kMdp) allowed.insert({"mdp", "simplex_mesh"});
  if (kind == ExperimentKind::kEpc) allowed.insert({"families", "grid", "random_seeds"});
  if (kind == ExperimentKind::kConc) allowed.insert({"mc_replicates"});
  r.unknown_fields(allowed);

  r.string("label", c.label);
  r.seed("seed", c.seed);
  r.integer("replicates", c.replicates, 1, 1'000'000);
  r.string("output_dir", c.output_dir);

  if (kind == ExperimentKind::kBandit || kind == ExperimentKind::kMdp) {
    r.integer("K", c.K, 1, 1'000'000);
    r.number("delta", c.delta, 0.0, kDeltaMax, true, "e^-1 = " + fmt_double(kDeltaMax));
    r.number("iota_scale", c.iota_scale, 0.0, 1e6, true);
    r.number("mu_xi", c.mu_xi, 0.0, 2.0, true);
    r.integer("net_cap", c.net_cap, 1, 100'000'000);
    if (r.has("algorithms")) {
      const json& a = r.at("algorithms");
      const auto ok = allowed_algorithms(kind);
      if (!a.is_array() || a.empty()) {
        r.fail("algorithms", "expected a non-empty array of strings");
      } else {
        c.algorithms.clear();
        for (const auto& e : a) {
          if (!e.is_string() || std::find(ok.begin(), ok.end(), e.get<std::string>()) == ok.end()) {
            r.fail("algorithms", "entries must be one of {" + join(ok, ", ") + "}");
            break;
          }
          c.algorithms.push_back(e.get<std::string>());
        }
      }
    }
    if (r.has("sweep")) {
      const json& s = r.at("sweep");
      if (!s.is_object()) {
        r.fail("sweep", "expected an object");
      } else {
        Reader sr(s, "sweep", errors);
        sr.unknown_fields({"param", "values"});
        SweepSpec sw;
        if (!sr.has("param")) errors.push_back("missing required field 'sweep.param'");
        if (!sr.has("values")) errors.push_back("missing required field 'sweep.values'");
        sw.param = sweep_params(kind).front();
        sr.choice("param", sw.param, sweep_params(kind));
        if (sr.number_array("values", sw.values) && sw.values.empty()) sr.fail("values", "must not be empty");
        for (double v : sw.values) {
          const bool bad = (sw.param == "sigma" && !(v >= 0.0 && v <= 1.0)) ||
                           (sw.param == "iota_scale" && !(v > 0.0)) ||
                           (sw.param == "K" && !(v >= 1.0 && v == std::floor(v)));
          if (bad) {
            sr.fail("values", "value " + fmt_double(v) + " is invalid for '" + sw.param + "'");
            break;
          }
        }
        c.sweep = sw;
      }
    }
  }
  if (kind == ExperimentKind::kBandit) {
    if (!r.has("env")) errors.push_back("missing required field 'env'");
    else parse_env(r.at("env"), c, errors);
    c.theta_xi = default_theta_xi(c.env.d);
    r.number("theta_xi", c.theta_xi, 0.0, 1.0, true);
    if (r.has("sigma")) parse_sigma(r.at("sigma"), c, errors);
  }
  if (kind == ExperimentKind::kMdp) {
    r.integer("simplex_mesh", c.simplex_mesh, 1, 1000);
    if (r.has("mdp")) {
      const json& m = r.at("mdp");
      if (m.is_string()) {
        c.mdp_preset = m.get<std::string>();
        const auto names = mdp_presets::names();
        if (std::find(names.begin(), names.end(), c.mdp_preset) == names.end()) {
          r.fail("mdp", "unknown preset '" + c.mdp_preset + "'; expected one of {" + join(names, ", ") + "}");
        }
      } else if (m.is_object()) {
        c.mdp_preset.clear();
        parse_mdp_instance(m, c, errors);
      } else {
        r.fail("mdp", "expected a preset name or an instance object");
      }
    }
  }
  if (kind == ExperimentKind::kEpc) {
    if (r.has("families")) {
      const json& f = r.at("families");
      if (!f.is_array() || f.empty()) {
        r.fail("families", "expected a non-empty array of strings");
      } else {
        c.families.clear();
        for (const auto& e : f) {
          try {
            c.families.push_back(epc_family_from_string(e.get<std::string>()));
          } catch (const std::exception&) {
            r.fail("families", "entries must be one of {repeated, random-unit, greedy}");
            break;
          }
        }
      }
    }
    if (r.has("grid")) parse_grid(r.at("grid"), c, errors);
    r.integer("random_seeds", c.random_seeds, 1, 100000);
  }
  if (kind == ExperimentKind::kConc) r.integer("mc_replicates", c.mc_replicates, 1, 100'000'000);
  if (errors.empty()) validate_variants(c, errors);
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ResourceError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

json to_json(const ExperimentConfig& c) {
  json j;
  j["kind"] = to_string(c.kind);
  j["label"] = c.label;
  j["seed"] = c.seed;
  j["replicates"] = c.replicates;
  j["output_dir"] = c.output_dir;
  if (c.kind == ExperimentKind::kBandit || c.kind == ExperimentKind::kMdp) {
    j["K"] = c.K;
    j["delta"] = c.delta;
    j["iota_scale"] = c.iota_scale;
    j["mu_xi"] = c.mu_xi;
    j["net_cap"] = c.net_cap;
    j["algorithms"] = c.algorithms;
    if (c.sweep) j["sweep"] = {{"param", c.sweep->param}, {"values", c.sweep->values}};
  }
  if (c.kind == ExperimentKind::kBandit) {
    j["env"] = {{"preset", c.env.preset}, {"d", c.env.d}, {"theta_star", c.env.theta_star},
                {"theta_on_net", c.env.theta_on_net}};
    j["sigma"] = {{"schedule", c.sigma.schedule}, {"value", c.sigma.value}, {"hi", c.sigma.hi},
                  {"lo", c.sigma.lo}, {"switch_round", c.sigma.switch_round}};
    j["theta_xi"] = c.theta_xi;
  }
  if (c.kind == ExperimentKind::kMdp) {
    j["simplex_mesh"] = c.simplex_mesh;
    if (c.mdp_instance) {
      const auto& m = *c.mdp_instance;
      json kernels = json::array();
      for (const auto& k : m.base_kernels) {
        json per_s = json::array();
        for (int s = 0; s < m.S; ++s) {
          json per_a = json::array();
          for (int a = 0; a < m.A; ++a) {
            json row = json::array();
            for (int s2 = 0; s2 < m.S; ++s2) row.push_back(k[static_cast<std::size_t>((s * m.A + a) * m.S + s2)]);
            per_a.push_back(row);
          }
          per_s.push_back(per_a);
        }
        kernels.push_back(per_s);
      }
      json reward = json::array();
      for (int s = 0; s < m.S; ++s) {
        json row = json::array();
        for (int a = 0; a < m.A; ++a) row.push_back(m.reward[static_cast<std::size_t>(s * m.A + a)]);
        reward.push_back(row);
      }
      j["mdp"] = {{"S", m.S}, {"A", m.A}, {"H", m.H}, {"base_kernels", kernels},
                  {"theta_star", m.theta_star}, {"reward", reward}, {"initial_state", m.initial_state}};
    } else {
      j["mdp"] = c.mdp_preset;
    }
  }
  if (c.kind == ExperimentKind::kEpc) {
    json fam = json::array();
    for (auto f : c.families) fam.push_back(to_string(f));
    j["families"] = fam;
    j["grid"] = {{"dims", c.grid.dims}, {"taus", c.grid.taus}, {"qs", c.grid.qs}, {"ns", c.grid.ns}};
    j["random_seeds"] = c.random_seeds;
  }
  if (c.kind == ExperimentKind::kConc) j["mc_replicates"] = c.mc_replicates;
  return j;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& config) { return to_json(config).dump(2); }

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return serialize_config(*this) == serialize_config(o);
}

// Where a run writes is not part of what it computes.
static json content_json(const ExperimentConfig& config) {
  json j = to_json(config);
  j.erase("output_dir");
  return j;
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : content_json(config).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::size_t variant_count(const ExperimentConfig& config) {
  return config.sweep ? config.sweep->values.size() : 1;
}

ExperimentConfig variant_config(const ExperimentConfig& config, std::size_t v) {
  ExperimentConfig c = config;
  if (!config.sweep) return c;
  VARBENCH_REQUIRE(v < config.sweep->values.size(), "sweep variant out of range");
  const double value = config.sweep->values[v];
  const std::string& p = config.sweep->param;
  if (p == "sigma") {
    c.sigma = SigmaSpec{};
    c.sigma.value = value;
  } else if (p == "iota_scale") {
    c.iota_scale = value;
  } else if (p == "K") {
    c.K = static_cast<int>(value);
  }
  c.sweep.reset();
  return c;
}

LinearBanditEnv build_bandit_env(const ExperimentConfig& c) {
  VARBENCH_REQUIRE(c.kind == ExperimentKind::kBandit, "build_bandit_env needs a bandit config");
  const int d = c.env.d;
  std::vector<double> theta = c.env.theta_star;
  if (theta.empty()) default_theta_for(d, theta);
  FeatureVector th(Eigen::Map<const Eigen::VectorXd>(theta.data(), d));
  if (c.env.theta_on_net) {
    const EpsNet net = build_net(d, 1.0, c.theta_xi, c.net_cap);
    th = net.points[net.nearest_index(th)];
  }
  ArmGenerator gen = ArmGenerator::fresh_sphere(d, 16);
  if (c.env.preset == "circle-8") {
    gen = ArmGenerator::circle(8);
  } else if (c.env.preset == "basis") {
    ArmSet arms;
    for (int i = 0; i < d; ++i) arms.push_back(FeatureVector::unit(d, i));
    gen = ArmGenerator::fixed_set(std::move(arms));
  }
  std::vector<double> sigma;
  if (c.sigma.schedule == "constant") {
    sigma = sigma_schedule::constant(c.K, c.sigma.value);
  } else if (c.sigma.schedule == "two-phase") {
    sigma = sigma_schedule::two_phase(c.K, c.sigma.hi, c.sigma.lo,
                                      c.sigma.switch_round > 0 ? c.sigma.switch_round : c.K / 2);
  } else {
    sigma = sigma_schedule::uniform_draw(c.K, c.sigma.lo, c.sigma.hi, stream_seed(c.seed, StreamTag::kSigma, 0));
  }
  return LinearBanditEnv(std::move(th), std::move(gen), std::move(sigma));
}

MixtureMdp build_mdp(const ExperimentConfig& c) {
  VARBENCH_REQUIRE(c.kind == ExperimentKind::kMdp, "build_mdp needs an mdp config");
  if (c.mdp_instance) {
    const auto& m = *c.mdp_instance;
    return MixtureMdp(m.S, m.A, m.H, m.base_kernels, m.theta_star, m.reward, m.initial_state);
  }
  return mdp_presets::by_name(c.mdp_preset);
}

namespace {

struct Stat {
  double mean = 0.0;
  double stderr_ = 0.0;
};

Stat mean_stderr(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return s;
}

json stat_json(const std::vector<double>& xs) {
  const Stat s = mean_stderr(xs);
  return {{"mean", s.mean}, {"stderr", s.stderr_}, {"n", xs.size()}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ResourceError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw ResourceError("failed writing '" + path.string() + "'");
}

// Tracks every file a run writes so a failed run can remove them.
class OutputTracker {
 public:
  explicit OutputTracker(fs::path dir) : dir_(std::move(dir)) {}
  void write(const std::string& name, const std::string& text) {
    write_text(dir_ / name, text);
    std::lock_guard<std::mutex> lock(mu_);
    files_.insert(name);
  }
  std::vector<std::string> files() const { return {files_.begin(), files_.end()}; }
  void remove_all() {
    std::error_code ec;
    for (const auto& f : files_) fs::remove(dir_ / f, ec);
    files_.clear();
  }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::mutex mu_;
  std::set<std::string> files_;
};

std::string bool01(bool b) { return b ? "1" : "0"; }

// Per (variant, algorithm) aggregates from one replicate.
struct BanditReplicateResult {
  std::vector<std::map<std::string, double>> final_regret;  // [variant][algo]
  std::vector<std::map<std::string, double>> half_regret;
  std::vector<std::map<std::string, bool>> covered;
};

struct MdpReplicateResult {
  std::vector<std::map<std::string, json>> decomposition;
  std::vector<std::map<std::string, double>> final_regret;
  std::vector<std::map<std::string, bool>> covered;
  std::vector<std::string> failures;
};

BanditReplicateResult run_bandit_replicate(const ExperimentConfig& cfg, std::size_t j, std::uint64_t seed,
                                           OutputTracker& out) {
  BanditReplicateResult res;
  for (std::size_t v = 0; v < variant_count(cfg); ++v) {
    const ExperimentConfig vc = variant_config(cfg, v);
    const LinearBanditEnv env = build_bandit_env(vc);
    std::string csv = "run_id,k,algo,arm_idx,inst_regret,cum_regret,sigma_sq,A_k,coverage,ell_bucket\n";
    std::map<std::string, double> fr, hr;
    std::map<std::string, bool> cov;
    for (const auto& algo : vc.algorithms) {
      RegretRecord rec;
      if (algo == "voful2") {
        VofulConfig vcfg;
        vcfg.delta = vc.delta;
        vcfg.iota_scale = vc.iota_scale;
        vcfg.theta_xi = vc.theta_xi;
        vcfg.mu_xi = vc.mu_xi;
        vcfg.net_cap = vc.net_cap;
        rec = run_voful2(env, vcfg, seed);
      } else {
        OfulConfig ocfg;
        ocfg.delta = vc.delta;
        rec = run_oful_baseline(env, ocfg, seed);
      }
      bool all_cov = true;
      for (const auto& row : rec.rows) {
        csv += std::to_string(j) + "," + std::to_string(row.k) + "," + algo + "," + std::to_string(row.arm_idx) +
               "," + fmt_double(row.inst_regret) + "," + fmt_double(row.cum_regret) + "," +
               fmt_double(row.sigma_sq) + "," + fmt_double(row.A_k) + "," + bool01(row.coverage) + "," +
               std::to_string(row.ell_bucket) + "\n";
        all_cov = all_cov && row.coverage;
      }
      fr[algo] = rec.final_regret();
      hr[algo] = rec.rows[static_cast<std::size_t>(std::max(1, vc.K / 2) - 1)].cum_regret;
      cov[algo] = all_cov;
    }
    out.write("bandit_v" + std::to_string(v) + "_r" + std::to_string(j) + ".csv", csv);
    res.final_regret.push_back(fr);
    res.half_regret.push_back(hr);
    res.covered.push_back(cov);
  }
  return res;
}

json decomposition_json(const VarlinRun& run, const DecompositionLog& log) {
  std::size_t covered = 0, optimistic_covered = 0, optimistic_all_covered = 0, fallback = 0;
  for (const auto& e : run.episodes) {
    if (e.coverage) {
      ++covered;
      if (e.optimistic) ++optimistic_covered;
      if (e.optimistic_all) ++optimistic_all_covered;
    }
    if (e.fallback) ++fallback;
  }
  return {{"regret", log.regret},
          {"R1", log.R1},
          {"R2", log.R2},
          {"R3", log.R3},
          {"regret_covered", log.regret_covered},
          {"R1_covered", log.R1_covered},
          {"R2_covered", log.R2_covered},
          {"R3_covered", log.R3_covered},
          {"R_m", log.R_m},
          {"M_m", log.M_m},
          {"M_m_covered", log.M_m_covered},
          {"eta_bar", log.eta_bar},
          {"identity_residual", log.identity_residual},
          {"dominates", log.dominates},
          {"r2_within_r0", log.r2_within_r0},
          {"uncovered_episodes", log.uncovered_episodes},
          {"eta_dominance_failures", log.eta_dominance_failures},
          {"episodes_covered", covered},
          {"optimistic_covered", optimistic_covered},
          {"optimistic_all_states_covered", optimistic_all_covered},
          {"fallback_episodes", fallback},
          {"bucket_partition_ok", run.bucket_partition_ok},
          {"total_samples", run.total_samples},
          {"theta_net_size", run.theta_net_size},
          {"mu_net_size", run.mu_net_size},
          {"final_feasible_count", run.final_feasible.size()},
          {"schedule",
           {{"L0", run.schedule.L0}, {"Lp", run.schedule.Lp}, {"iota", run.schedule.iota},
            {"iota_scale", run.schedule.iota_scale}}}};
}

MdpReplicateResult run_mdp_replicate(const ExperimentConfig& cfg, std::size_t j, std::uint64_t seed,
                                     OutputTracker& out) {
  MdpReplicateResult res;
  for (std::size_t v = 0; v < variant_count(cfg); ++v) {
    const ExperimentConfig vc = variant_config(cfg, v);
    const MixtureMdp mdp = build_mdp(vc);
    std::map<std::string, json> dec;
    std::map<std::string, double> fr;
    std::map<std::string, bool> cov;
    for (const auto& algo : vc.algorithms) {
      VarlinConfig lc;
      lc.episodes = vc.K;
      lc.delta = vc.delta;
      lc.iota_scale = vc.iota_scale;
      lc.simplex_mesh = vc.simplex_mesh;
      lc.mu_xi = vc.mu_xi;
      lc.net_cap = vc.net_cap;
      lc.oracle_singleton = algo == "varlin2-oracle";
      const VarlinRun run = run_varlin2(mdp, lc, seed);
      const DecompositionLog log = decomposition_diagnostics(run);
      std::string csv = "run_id,k,cum_regret,V1_opt,V1_star,coverage,feasible_count\n";
      bool all_cov = true;
      const std::string tag = "v" + std::to_string(v) + " " + algo + " replicate " + std::to_string(j);
      for (const auto& e : run.episodes) {
        csv += std::to_string(j) + "," + std::to_string(e.k) + "," + fmt_double(e.cum_regret) + "," +
               fmt_double(e.V1_opt) + "," + fmt_double(e.V1_star) + "," + bool01(e.coverage) + "," +
               std::to_string(e.feasible_count) + "\n";
        all_cov = all_cov && e.coverage;
        if (e.coverage && !e.optimistic) {
          res.failures.push_back(tag + ": optimism violated at episode " + std::to_string(e.k));
        }
        if (lc.oracle_singleton && e.V1_opt < e.V1_star) {
          res.failures.push_back(tag + ": oracle optimism violated at episode " + std::to_string(e.k));
        }
      }
      if (!run.bucket_partition_ok) res.failures.push_back(tag + ": bucket partition invariant broken");
      if (log.identity_residual > kSumTolerance * std::max(1.0, static_cast<double>(run.episodes.size()))) {
        res.failures.push_back(tag + ": R1 + R2 + R3 identity residual " + fmt_double(log.identity_residual));
      }
      if (!log.dominates) res.failures.push_back(tag + ": R1 + R2 + R3 below regret on covered episodes");
      if (!log.r2_within_r0) res.failures.push_back(tag + ": R2 exceeds R_0");
      if (log.eta_dominance_failures) res.failures.push_back(tag + ": variance estimate below covered point");
      const std::string base = "mdp_v" + std::to_string(v) + "_" + algo + "_r" + std::to_string(j);
      out.write(base + ".csv", csv);
      json d = decomposition_json(run, log);
      out.write(base + "_decomposition.json", d.dump(2) + "\n");
      dec[algo] = std::move(d);
      fr[algo] = run.final_regret();
      cov[algo] = all_cov;
    }
    res.decomposition.push_back(std::move(dec));
    res.final_regret.push_back(std::move(fr));
    res.covered.push_back(std::move(cov));
  }
  return res;
}

template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json variant_header(const ExperimentConfig& cfg, std::size_t v) {
  json h = {{"index", v}};
  if (cfg.sweep) {
    h["param"] = cfg.sweep->param;
    h["value"] = cfg.sweep->values[v];
  }
  return h;
}

json run_bandit(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds, const RunOptions& opt,
                OutputTracker& out, RunManifest& manifest) {
  std::vector<BanditReplicateResult> results(seeds.size());
  std::mutex log_mu;
  parallel_for(seeds.size(), opt.jobs, [&](std::size_t j) {
    results[j] = run_bandit_replicate(cfg, j, seeds[j], out);
    if (opt.log) {
      std::lock_guard<std::mutex> lock(log_mu);
      *opt.log << "bandit replicate " << j << " done\n";
    }
  });
  json variants = json::array();
  for (std::size_t v = 0; v < variant_count(cfg); ++v) {
    json entry = variant_header(cfg, v);
    json algos = json::object();
    for (const auto& algo : cfg.algorithms) {
      std::vector<double> fr, hr;
      std::size_t cov = 0;
      for (const auto& r : results) {
        fr.push_back(r.final_regret[v].at(algo));
        hr.push_back(r.half_regret[v].at(algo));
        if (r.covered[v].at(algo)) ++cov;
      }
      algos[algo] = {{"final_regret", stat_json(fr)},
                     {"half_horizon_regret", stat_json(hr)},
                     {"coverage_rate", static_cast<double>(cov) / static_cast<double>(results.size())}};
    }
    entry["algorithms"] = algos;
    variants.push_back(entry);
  }
  (void)manifest;
  return {{"variants", variants}};
}

json run_mdp(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds, const RunOptions& opt,
             OutputTracker& out, RunManifest& manifest) {
  std::vector<MdpReplicateResult> results(seeds.size());
  std::mutex log_mu;
  parallel_for(seeds.size(), opt.jobs, [&](std::size_t j) {
    results[j] = run_mdp_replicate(cfg, j, seeds[j], out);
    if (opt.log) {
      std::lock_guard<std::mutex> lock(log_mu);
      *opt.log << "mdp replicate " << j << " done\n";
    }
  });
  json variants = json::array();
  for (std::size_t v = 0; v < variant_count(cfg); ++v) {
    json entry = variant_header(cfg, v);
    json algos = json::object();
    for (const auto& algo : cfg.algorithms) {
      std::vector<double> fr;
      std::size_t cov = 0, dominated = 0, eps_cov = 0, eps_opt = 0;
      for (const auto& r : results) {
        fr.push_back(r.final_regret[v].at(algo));
        if (r.covered[v].at(algo)) ++cov;
        const json& d = r.decomposition[v].at(algo);
        if (d.at("dominates").get<bool>()) ++dominated;
        eps_cov += d.at("episodes_covered").get<std::size_t>();
        eps_opt += d.at("optimistic_covered").get<std::size_t>();
      }
      algos[algo] = {{"final_regret", stat_json(fr)},
                     {"coverage_rate", static_cast<double>(cov) / static_cast<double>(results.size())},
                     {"episodes_covered", eps_cov},
                     {"optimistic_covered", eps_opt},
                     {"decomposition_dominates", dominated}};
    }
    entry["algorithms"] = algos;
    variants.push_back(entry);
  }
  for (const auto& r : results) {
    for (const auto& f : r.failures) manifest.failures.push_back(f);
  }
  return {{"variants", variants}};
}

json run_epc(const ExperimentConfig& cfg, OutputTracker& out, RunManifest& manifest) {
  const EpcReport rep = verify_epc(cfg.families, cfg.grid, cfg.random_seeds, cfg.seed);
  json entries = json::array();
  for (const auto& e : rep.entries) {
    entries.push_back({{"family", to_string(e.family)}, {"seed", e.seed}, {"d", e.d}, {"tau", e.tau},
                       {"q", e.q}, {"n", e.n}, {"count", e.count}, {"bound", e.bound}, {"ratio", e.ratio},
                       {"pass", e.pass}, {"det_trace_ok", e.chain_ok}, {"halved_pass", e.halved_pass}});
  }
  json report = {{"pass", rep.pass()},
                 {"violations", rep.violations},
                 {"chain_failures", rep.chain_failures},
                 {"halved_violations", rep.halved_violations},
                 {"max_ratio", rep.max_ratio},
                 {"entries", entries}};
  out.write("epc_report.json", report.dump(2) + "\n");
  if (!rep.pass()) {
    manifest.failures.push_back("epc: " + std::to_string(rep.violations) + " count violations, " +
                                std::to_string(rep.chain_failures) + " det-trace chain failures");
  }
  return {{"pass", rep.pass()},
          {"entries", rep.entries.size()},
          {"violations", rep.violations},
          {"halved_violations", rep.halved_violations},
          {"max_ratio", rep.max_ratio}};
}

json run_conc(const ExperimentConfig& cfg, OutputTracker& out, RunManifest& manifest) {
  const auto mc = run_concentration_battery(cfg.mc_replicates, cfg.seed);
  json checks = json::array();
  bool all = true;
  for (const auto& r : mc) {
    checks.push_back({{"check", to_string(r.check)}, {"preset", to_string(r.preset)},
                      {"n", r.params.n}, {"delta", r.params.delta}, {"replicates", r.params.replicates},
                      {"violations", r.violations}, {"rate", r.rate}, {"budget", r.budget},
                      {"raw_budget", r.raw_budget}, {"vacuous", r.vacuous},
                      {"wilson", {r.interval.lo, r.interval.hi}}, {"pass", r.pass}});
    if (!r.pass) {
      all = false;
      manifest.failures.push_back("conc: " + to_string(r.check) + " on " + to_string(r.preset) + " over budget");
    }
  }
  const RecursionGridReport rec = verify_recursion_grid();
  json points = json::array();
  for (const auto& p : rec.points) {
    points.push_back({{"l1", p.l1}, {"l2", p.l2}, {"l3", p.l3}, {"l4", p.l4}, {"implicit_a1", p.implicit_a1},
                      {"implicit_bound", p.implicit_bound}, {"bootstrap_a1", p.bootstrap_a1},
                      {"bootstrap_bound", p.bootstrap_bound}, {"pass", p.pass}});
  }
  if (!rec.pass()) {
    all = false;
    manifest.failures.push_back("conc: recursion solver grid has " + std::to_string(rec.failures) + " failures");
  }
  json report = {{"pass", all},
                 {"checks", checks},
                 {"recursions",
                  {{"pass", rec.pass()}, {"max_ratio_implicit", rec.max_ratio_implicit},
                   {"max_ratio_bootstrap", rec.max_ratio_bootstrap}, {"points", points}}}};
  out.write("conc_report.json", report.dump(2) + "\n");
  return {{"pass", all}, {"checks", mc.size()}, {"recursion_points", rec.points.size()}};
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  RunManifest manifest;
  manifest.config_hash = config_hash(config);
  manifest.master_seed = config.seed;
  std::string dir = config.output_dir;
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') dir = env;
  if (!options.out_dir.empty()) dir = options.out_dir;
  manifest.output_dir = dir;

  const bool existed = fs::exists(dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ResourceError("cannot create output directory '" + dir + "': " + ec.message());
  OutputTracker out{fs::path(dir)};

  const bool replicated = config.kind == ExperimentKind::kBandit || config.kind == ExperimentKind::kMdp;
  if (replicated) {
    for (int j = 0; j < config.replicates; ++j) {
      manifest.replicate_seeds.push_back(derive_seed(config.seed, static_cast<std::uint64_t>(j)));
    }
  }
  try {
    json summary = {{"kind", to_string(config.kind)}, {"label", config.label},
                    {"config_hash", manifest.config_hash}, {"version", manifest.version},
                    {"master_seed", config.seed}};
    json body;
    switch (config.kind) {
      case ExperimentKind::kBandit: body = run_bandit(config, manifest.replicate_seeds, options, out, manifest); break;
      case ExperimentKind::kMdp: body = run_mdp(config, manifest.replicate_seeds, options, out, manifest); break;
      case ExperimentKind::kEpc: body = run_epc(config, out, manifest); break;
      case ExperimentKind::kConc: body = run_conc(config, out, manifest); break;
    }
    if (replicated) summary["replicates"] = config.replicates;
    summary["results"] = body;
    summary["assertions_passed"] = manifest.failures.empty();
    summary["failures"] = manifest.failures;
    out.write("summary.json", summary.dump(2) + "\n");
    out.write("config.json", content_json(config).dump(2) + "\n");

    manifest.assertions_passed = manifest.failures.empty();
    manifest.files = out.files();
    manifest.created_at = utc_now();
    json seeds = json::array();
    for (std::size_t j = 0; j < manifest.replicate_seeds.size(); ++j) {
      seeds.push_back({{"index", j}, {"seed", manifest.replicate_seeds[j]}});
    }
    json m = {{"config_hash", manifest.config_hash}, {"version", manifest.version},
              {"master_seed", manifest.master_seed}, {"replicates", seeds},
              {"files", manifest.files}, {"assertions_passed", manifest.assertions_passed},
              {"created_at", manifest.created_at}};
    out.write("manifest.json", m.dump(2) + "\n");
    manifest.files.push_back("manifest.json");
    std::sort(manifest.files.begin(), manifest.files.end());
  } catch (...) {
    out.remove_all();
    if (!existed) fs::remove(dir, ec);
    throw;
  }
  return manifest;
}

}  // namespace varbench
