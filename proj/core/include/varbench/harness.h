#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "varbench/bandit_env.h"
#include "varbench/epc.h"
#include "varbench/mixture_mdp.h"

namespace varbench {

inline constexpr const char* kArtifactVersion = "0.1.0";
// Environment variable that overrides the configured output directory.
inline constexpr const char* kOutDirEnv = "VARBENCH_OUT_DIR";

// One message per offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

enum class ExperimentKind { kBandit, kMdp, kEpc, kConc };
std::string to_string(ExperimentKind k);

struct SigmaSpec {
  std::string schedule = "constant";  // constant | two-phase | uniform
  double value = 0.1;                 // constant
  double hi = 0.5, lo = 0.05;         // two-phase and uniform
  int switch_round = 0;               // two-phase; 0 means K / 2
  bool operator==(const SigmaSpec&) const = default;
};

struct BanditEnvSpec {
  std::string preset = "circle-8";  // circle-8 | basis | sphere-16
  int d = 2;
  std::vector<double> theta_star;   // empty: preset default
  bool theta_on_net = false;        // snap theta* to the nearest theta-net point
  bool operator==(const BanditEnvSpec&) const = default;
};

struct MdpInstanceSpec {
  int S = 0, A = 0, H = 0;
  std::vector<std::vector<double>> base_kernels;  // d x (S*A*S)
  std::vector<double> theta_star;
  std::vector<double> reward;  // S*A
  int initial_state = 0;
  bool operator==(const MdpInstanceSpec&) const = default;
};

struct SweepSpec {
  std::string param;  // sigma | iota_scale | K
  std::vector<double> values;
  bool operator==(const SweepSpec&) const = default;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kBandit;
  std::string label;
  std::uint64_t seed = 0;
  int replicates = 1;
  std::string output_dir = "varbench-out";
  std::optional<SweepSpec> sweep;

  // bandit and mdp
  int K = 100;
  double delta = 0.1;
  double iota_scale = 1.0;
  double mu_xi = 0.1;
  std::size_t net_cap = 2'000'000;
  std::vector<std::string> algorithms;

  // bandit
  BanditEnvSpec env;
  SigmaSpec sigma;
  double theta_xi = 0.05;

  // mdp
  std::string mdp_preset = "stochastic";
  std::optional<MdpInstanceSpec> mdp_instance;
  int simplex_mesh = 10;

  // epc
  std::vector<EpcFamily> families{EpcFamily::kRepeated, EpcFamily::kRandomUnit, EpcFamily::kGreedy};
  EpcGrid grid;
  int random_seeds = 100;

  // conc
  std::size_t mc_replicates = 10000;

  bool operator==(const ExperimentConfig& o) const;
};

// Validates against the schema documented in docs/config.md; throws
// ConfigError listing every problem found.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
// Canonical JSON (sorted keys, every resolved field).
std::string serialize_config(const ExperimentConfig& config);
// FNV-1a 64 of the canonical JSON, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);
ExperimentConfig default_config(ExperimentKind kind);

// Variant v of a sweep (or the config itself when there is no sweep).
std::size_t variant_count(const ExperimentConfig& config);
ExperimentConfig variant_config(const ExperimentConfig& config, std::size_t v);

LinearBanditEnv build_bandit_env(const ExperimentConfig& config);
MixtureMdp build_mdp(const ExperimentConfig& config);

struct RunOptions {
  int jobs = 1;
  std::ostream* log = nullptr;  // progress lines; null = quiet
  std::string out_dir;          // non-empty: wins over the config and kOutDirEnv
};

struct RunManifest {
  std::string config_hash;
  std::string version = kArtifactVersion;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> replicate_seeds;
  std::vector<std::string> files;  // relative to the output directory
  std::string output_dir;
  std::string created_at;          // excluded from golden comparisons
  bool assertions_passed = true;
  std::vector<std::string> failures;
};

// Writes per-replicate CSVs, summary.json and manifest.json under the
// output directory. Files written by a failed run are removed.
RunManifest run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace varbench
