#pragma once

// Convergence metrics for the law of large numbers, the central and local
// limit theorems, the hitting-time local limit theorem, the histogram-figure
// dataset, and the config-driven experiment runner behind the CLI.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chaowalk/env.hpp"
#include "chaowalk/limits.hpp"
#include "chaowalk/walk.hpp"

namespace chaowalk {

struct LltError {
  double value = 0.0;       // sqrt(n) sup_k |P(X_n = k) - q(k)|
  std::size_t argmax = 0;
};

LltError llt_error(const Environment& env, const LimitParams& params, std::size_t n,
                   Engine engine = Engine::Float, long centering_shift = 0);

// Same metric against an already computed pmf.
LltError llt_error(const Pmf& pmf, const LltPrediction& prediction);

// k sup_n |P(T_k = n) - f_k(n)|. Beyond the stored horizon the difference is
// bounded by max(tail mass, f_k(n_max + 1)) and folded into the sup.
double hitting_llt_error(const Environment& env, std::size_t k);

// Kolmogorov-Smirnov distance between the law of (X_n - k_n)/(sigma~ sqrt n)
// and the standard normal, evaluated on both sides of every jump.
double clt_error(const Environment& env, const LimitParams& params, std::size_t n,
                 Engine engine = Engine::Float);
double ks_distance(const Pmf& pmf, double center, double scale);

// max over `samples` draws of |X_n / n - 1/mu|.
double lln_check(const Environment& env, const LimitParams& params, std::size_t n,
                 std::size_t samples, std::uint64_t seed);

struct Figure2Row {
  std::size_t site;
  double exact_mass;
  double gaussian;
  double modulated_prediction;
};

struct Figure2Data {
  std::size_t time = 0;
  std::vector<Figure2Row> rows;

  double sup_error_modulated() const;
  double sup_error_gaussian() const;
  // Header `site,exact_mass,gaussian,modulated_prediction`.
  std::string to_csv() const;
};

// Rows keep sites whose Gaussian value exceeds 1e-12 of its peak.
Figure2Data figure2(const Environment& env, const LimitParams& params, std::size_t n);
Figure2Data figure2(const EnvSpec& spec, std::size_t n, std::uint64_t seed);

// ---- experiment runner --------------------------------------------------

inline constexpr std::size_t kMaxPmfTime = std::size_t{1} << 16;
inline constexpr std::size_t kMaxSamples = 10'000'000;
inline constexpr double kMassTolerance = 1e-9;

enum class ExperimentKind { Llt, Clt, Lln, Hitting, Figure2 };

std::string to_string(ExperimentKind kind);

struct EmitOptions {
  bool csv = true;
  bool json = true;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Llt;
  EnvSpec env = figure2_markov();
  std::optional<std::size_t> env_length;
  std::uint64_t env_seed = 0;
  std::optional<LimitParams> params;
  std::vector<std::size_t> n_grid;
  std::size_t seeds = 100;
  std::uint64_t sample_seed = 0;
  Engine engine = Engine::Float;
  EmitOptions emit;
};

// Throws ConfigError carrying a JSON pointer to the offending node.
ExperimentConfig parse_config(const nlohmann::json& j);

// Compact command-line form: constant:P | markov:A,B,STAY | sinusoid:C,D |
// iid:V1,V2,..;P1,P2,.. | table:PATH
EnvSpec parse_env_spec(const std::string& text);
inline EnvSpec parse_env_spec(const char* text) { return parse_env_spec(std::string(text)); }
EnvSpec parse_env_spec(const nlohmann::json& j, const std::string& pointer = "/env");

struct ExperimentReport {
  std::string id;
  std::string env;
  std::uint64_t env_seed = 0;
  std::vector<std::size_t> n_grid;
  std::map<std::string, std::vector<double>> metrics;
  std::vector<double> wall_seconds;  // not emitted, so emitted files stay deterministic
  std::vector<std::filesystem::path> emitted;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

// Executes the experiment over its grid; writes CSV/JSON into out_dir when
// it is non-empty. Deterministic in the config.
ExperimentReport run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir = {});

}  // namespace chaowalk
