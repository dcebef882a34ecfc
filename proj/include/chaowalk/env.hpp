#pragma once

// Frozen environments: construction, generators, prefix statistics, limit
// constants, regularity diagnostics and the phi-mixing coefficient of finite
// Markov environments.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "chaowalk/rational.hpp"

namespace chaowalk {

namespace spec {

struct Constant {
  Rational p;
};

// Symmetric two-state chain on {a, b}; stays put with probability stay.
// Started from its stationary law, which is uniform.
struct TwoStateMarkov {
  Rational a;
  Rational b;
  double stay;
};

// omega_k = offset + amplitude * sin(k), k in radians.
struct Sinusoid {
  double offset;
  double amplitude;
};

struct IidDiscrete {
  std::vector<Rational> values;
  std::vector<double> probabilities;
};

// One decimal per line, '#' comments.
struct Table {
  std::filesystem::path path;
};

}  // namespace spec

using EnvSpec = std::variant<spec::Constant, spec::TwoStateMarkov, spec::Sinusoid,
                             spec::IidDiscrete, spec::Table>;

// Throws ValidationError when the spec's own parameters are out of range.
void validate(const EnvSpec& spec);

// Short human-readable form, e.g. "markov(1/4,3/4;stay=0.8)".
std::string describe(const EnvSpec& spec);

// The two reference environments of the histogram experiment.
EnvSpec figure2_markov();
EnvSpec figure2_sinusoid();

class Environment {
 public:
  // Float-only environment. Every entry must lie strictly inside (0,1).
  Environment(std::vector<double> omega, EnvSpec spec, std::uint64_t seed = 0);

  // Environment with exact rational entries; the double view is derived.
  Environment(std::vector<Rational> omega, EnvSpec spec, std::uint64_t seed = 0);

  std::size_t size() const noexcept { return omega_.size(); }
  double operator[](std::size_t k) const { return omega_[k]; }
  std::span<const double> omega() const noexcept { return omega_; }

  bool has_exact() const noexcept { return exact_.has_value(); }
  // Throws UnsupportedError when the environment is float-only.
  std::span<const Rational> exact() const;

  const EnvSpec& spec() const noexcept { return spec_; }
  std::uint64_t seed() const noexcept { return seed_; }

  // Throws BoundsError unless at least `sites` entries exist.
  void require_sites(std::size_t sites, const char* what) const;

 private:
  std::vector<double> omega_;
  std::optional<std::vector<Rational>> exact_;
  EnvSpec spec_;
  std::uint64_t seed_;
};

// Deterministic in (spec, length, seed). Constant and Sinusoid ignore seed.
Environment generate(const EnvSpec& spec, std::size_t length, std::uint64_t seed);

// Table-file reader. Entries are parsed as exact decimals.
std::vector<Rational> read_table(const std::filesystem::path& path, std::size_t max_rows);

struct PrefixStats {
  // mu[k] = sum_{j<k} 1/omega_j, sigma2[k] = sum_{j<k} (1-omega_j)/omega_j^2,
  // for k = 0..K.
  std::vector<double> mu;
  std::vector<double> sigma2;
};

PrefixStats prefix_stats(const Environment& env);

struct LimitParams {
  double mu;
  double sigma2;
  double lambda;
  double sigma_tilde2;  // sigma2 / mu^3
};

// Validates mu > 1, sigma2 > 0, 0 <= lambda < 1/2 and fills sigma_tilde2.
LimitParams make_limit_params(double mu, double sigma2, double lambda = 0.0);

// Stationary-law constants for built-in specs; UnsupportedError for Table.
LimitParams limit_params(const EnvSpec& spec);

struct DiagnosticsReport {
  std::string spec;
  LimitParams params;
  std::vector<std::size_t> k_grid;
  std::vector<double> u_values;
  std::vector<double> growth;        // max_{j<k} omega_j^{-1} / k^lambda
  std::vector<double> mean;          // |mu_k/k - mu| k^lambda sqrt(log k)
  std::vector<double> variance;      // |sigma2_k/k - sigma2| k^lambda sqrt(log k)
  std::vector<double> third_moment;  // k^{-1} sum_{j<k} omega_j^{-3}
  std::vector<std::vector<double>> moving_avg;  // [u index][k index]
  // Heuristic only: residual trajectory non-increasing over the top half of
  // the grid. Not a verdict on the asymptotic condition.
  bool growth_flag = false;
  bool mean_flag = false;
  bool variance_flag = false;
  bool third_moment_flag = false;
  std::vector<bool> moving_avg_flags;

  std::string to_json() const;
};

// b(k) = sqrt(k log k), the moving-average window scale.
double window_scale(std::size_t k);

DiagnosticsReport diagnostics(const Environment& env, const LimitParams& params,
                              std::span<const std::size_t> k_grid,
                              std::span<const double> u_values);

// True when the trajectory is non-increasing over the upper half of the grid.
bool non_increasing_top_half(std::span<const double> values);

using Matrix = std::vector<std::vector<double>>;

// phi(k) of a stationary finite-state Markov environment:
// max over initial states i and state sets B of |P^k(i,B) - pi(B)|.
// Conditioning on a cylinder that pins the state at time m collapses the
// supremum over the past to the initial state, so this is the exact mixing
// coefficient for such chains.
double phi_mixing_markov(const Matrix& transition, std::span<const double> stationary,
                         std::size_t lag);

Matrix two_state_transition(double stay);

}  // namespace chaowalk
