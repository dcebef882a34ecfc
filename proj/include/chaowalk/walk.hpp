#pragma once

// The unidirectional walk: X_0 = 0, from site k step to k+1 with probability
// omega_k, stay otherwise. Exact pmf propagation (float and rational engines),
// seeded sampling, and hitting-time laws.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chaowalk/env.hpp"
#include "chaowalk/rational.hpp"

namespace chaowalk {

// Masses below this are trimmed from the ends of a float Pmf.
inline constexpr double kTrimThreshold = 1e-300;

// Largest n accepted by the exact engine.
inline constexpr std::size_t kExactEngineMaxN = 512;

enum class Engine { Float, Exact };

struct Pmf {
  std::size_t origin = 0;       // site of masses[0]
  std::vector<double> masses;   // sites origin .. origin + masses.size() - 1
  std::size_t time = 0;
  double trimmed_mass = 0.0;    // mass removed by end trimming so far

  // P(X_n = site); zero outside the stored window.
  double at(std::size_t site) const;
  std::size_t end() const noexcept { return origin + masses.size(); }
  double total() const;

  static Pmf delta0();

  // Header `site,mass`, one row per stored site in increasing order.
  std::string to_csv() const;
};

struct ExactPmf {
  std::vector<Rational> masses;  // sites 0 .. masses.size() - 1
  std::size_t time = 0;

  Rational total() const;
  Pmf to_float() const;
};

Pmf step_pmf(const Pmf& p, const Environment& env);
ExactPmf step_pmf(const ExactPmf& p, const Environment& env);

// n-fold step from delta_0. No renormalisation: the deviation of total()
// from 1 is a numeric-quality metric.
Pmf walk_pmf(const Environment& env, std::size_t n);

// Exact rational engine for n <= kExactEngineMaxN.
ExactPmf walk_pmf_exact(const Environment& env, std::size_t n);

// Float view of either engine.
Pmf walk_pmf(const Environment& env, std::size_t n, Engine engine);

struct PathSample {
  std::size_t final_position = 0;
  std::optional<std::vector<std::size_t>> trajectory;  // X_0 .. X_n
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

// `count` independent draws of X_n; sample i uses stream
// streams::kWalkSampleBase + i. Sojourns are drawn as geometrics, so a draw
// costs O(X_n) uniforms rather than O(n).
std::vector<PathSample> sample_final(const Environment& env, std::size_t n, std::uint64_t seed,
                                     std::size_t count);

// Full trajectories by Bernoulli stepping, same stream layout.
std::vector<PathSample> sample_paths(const Environment& env, std::size_t n, std::uint64_t seed,
                                     std::size_t count);

// Law of the hitting time T_k of site k, stored for n = k .. n_max, with
// P(T_k > n_max) carried as tail.
struct HittingDist {
  std::size_t site = 0;
  std::size_t n_max = 0;
  std::vector<double> probs;  // probs[i] = P(T_k = site + i)
  double tail = 0.0;

  double at(std::size_t n) const;
};

struct ExactHittingDist {
  std::size_t site = 0;
  std::size_t n_max = 0;
  std::vector<Rational> probs;
  Rational tail;

  Rational at(std::size_t n) const;
};

// ceil(mu_k + 12 sigma_k).
std::size_t default_hitting_horizon(const Environment& env, std::size_t k);

HittingDist hitting_dist(const Environment& env, std::size_t k, std::optional<std::size_t> n_max = {});
ExactHittingDist hitting_dist_exact(const Environment& env, std::size_t k, std::size_t n_max);

// Laws of T_1 .. T_{k_max} sharing one horizon, from a single convolution pass.
std::vector<HittingDist> hitting_dists(const Environment& env, std::size_t k_max, std::size_t n_max);
std::vector<ExactHittingDist> hitting_dists_exact(const Environment& env, std::size_t k_max,
                                                  std::size_t n_max);

// (mu_k, sigma2_k): mean and variance of T_k.
std::pair<double, double> hitting_moments(const Environment& env, std::size_t k);

}  // namespace chaowalk
