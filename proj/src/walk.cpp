#include "chaowalk/walk.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "chaowalk/error.hpp"
#include "chaowalk/numeric.hpp"
#include "chaowalk/rng.hpp"

namespace chaowalk {

double Pmf::at(std::size_t site) const {
  if (site < origin || site >= end()) return 0.0;
  return masses[site - origin];
}

double Pmf::total() const {
  CompensatedSum acc;
  for (double m : masses) acc.add(m);
  return acc.value();
}

Pmf Pmf::delta0() { return Pmf{0, {1.0}, 0, 0.0}; }

std::string Pmf::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "site,mass\n";
  for (std::size_t i = 0; i < masses.size(); ++i) os << origin + i << ',' << masses[i] << '\n';
  return os.str();
}

Rational ExactPmf::total() const {
  Rational acc = 0;
  for (const auto& m : masses) acc += m;
  return acc;
}

Pmf ExactPmf::to_float() const {
  Pmf out;
  out.time = time;
  out.masses.reserve(masses.size());
  for (const auto& m : masses) out.masses.push_back(to_double(m));
  return out;
}

Pmf step_pmf(const Pmf& p, const Environment& env) {
  env.require_sites(p.end() + 1, "step_pmf");
  Pmf next;
  next.time = p.time + 1;
  next.trimmed_mass = p.trimmed_mass;
  next.origin = p.origin;
  next.masses.resize(p.masses.size() + 1);
  const auto omega = env.omega();
  double carry = 0.0;  // omega_{k-1} p(k-1)
  for (std::size_t i = 0; i < p.masses.size(); ++i) {
    const double w = omega[p.origin + i];
    next.masses[i] = (1.0 - w) * p.masses[i] + carry;
    carry = w * p.masses[i];
  }
  next.masses.back() = carry;

  std::size_t lead = 0;
  while (lead + 1 < next.masses.size() && next.masses[lead] < kTrimThreshold) {
    next.trimmed_mass += next.masses[lead];
    ++lead;
  }
  std::size_t keep = next.masses.size();
  while (keep > lead + 1 && next.masses[keep - 1] < kTrimThreshold) {
    next.trimmed_mass += next.masses[keep - 1];
    --keep;
  }
  if (lead > 0 || keep < next.masses.size()) {
    next.masses.erase(next.masses.begin() + static_cast<std::ptrdiff_t>(keep), next.masses.end());
    next.masses.erase(next.masses.begin(), next.masses.begin() + static_cast<std::ptrdiff_t>(lead));
    next.origin += lead;
  }
  return next;
}

ExactPmf step_pmf(const ExactPmf& p, const Environment& env) {
  env.require_sites(p.masses.size() + 1, "step_pmf");
  const auto omega = env.exact();
  ExactPmf next;
  next.time = p.time + 1;
  next.masses.resize(p.masses.size() + 1);
  Rational carry = 0;
  for (std::size_t k = 0; k < p.masses.size(); ++k) {
    next.masses[k] = (1 - omega[k]) * p.masses[k] + carry;
    carry = omega[k] * p.masses[k];
  }
  next.masses.back() = carry;
  return next;
}

Pmf walk_pmf(const Environment& env, std::size_t n) {
  env.require_sites(n + 1, "walk_pmf");
  Pmf p = Pmf::delta0();
  for (std::size_t t = 0; t < n; ++t) p = step_pmf(p, env);
  return p;
}

ExactPmf walk_pmf_exact(const Environment& env, std::size_t n) {
  if (n > kExactEngineMaxN)
    throw CapExceeded("exact engine is limited to n <= " + std::to_string(kExactEngineMaxN) +
                      ", got " + std::to_string(n));
  env.require_sites(n + 1, "walk_pmf");
  ExactPmf p{{Rational(1)}, 0};
  for (std::size_t t = 0; t < n; ++t) p = step_pmf(p, env);
  return p;
}

Pmf walk_pmf(const Environment& env, std::size_t n, Engine engine) {
  return engine == Engine::Float ? walk_pmf(env, n) : walk_pmf_exact(env, n).to_float();
}

std::vector<PathSample> sample_final(const Environment& env, std::size_t n, std::uint64_t seed,
                                     std::size_t count) {
  env.require_sites(n + 1, "sample_final");
  const auto omega = env.omega();
  std::vector<PathSample> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t stream = streams::kWalkSampleBase + i;
    StreamRng rng(seed, stream);
    std::size_t position = 0;
    std::uint64_t elapsed = 0;  // T_position
    while (position < n) {
      const std::uint64_t sojourn = rng.geometric(omega[position]);
      if (sojourn > n - elapsed) break;
      elapsed += sojourn;
      ++position;
    }
    out[i] = PathSample{position, std::nullopt, seed, stream};
  }
  return out;
}

std::vector<PathSample> sample_paths(const Environment& env, std::size_t n, std::uint64_t seed,
                                     std::size_t count) {
  env.require_sites(n + 1, "sample_paths");
  const auto omega = env.omega();
  std::vector<PathSample> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t stream = streams::kWalkSampleBase + i;
    StreamRng rng(seed, stream);
    std::vector<std::size_t> path(n + 1, 0);
    for (std::size_t t = 0; t < n; ++t)
      path[t + 1] = path[t] + (rng.bernoulli(omega[path[t]]) ? 1 : 0);
    out[i] = PathSample{path.back(), std::move(path), seed, stream};
  }
  return out;
}

double HittingDist::at(std::size_t n) const {
  if (n < site || n > n_max) return 0.0;
  return probs[n - site];
}

Rational ExactHittingDist::at(std::size_t n) const {
  if (n < site || n > n_max) return Rational(0);
  return probs[n - site];
}

std::size_t default_hitting_horizon(const Environment& env, std::size_t k) {
  const auto [mu, sigma2] = hitting_moments(env, k);
  return std::max<std::size_t>(k, static_cast<std::size_t>(std::ceil(mu + 12.0 * std::sqrt(sigma2))));
}

namespace {

void check_hitting_args(const Environment& env, std::size_t k, std::size_t n_max) {
  if (k < 1) throw ValidationError("hitting distribution needs site k >= 1");
  if (n_max < k) throw ValidationError("hitting horizon n_max must be >= k");
  env.require_sites(k, "hitting_dist");
}

// Convolves the sojourn laws one site at a time. H holds P(T_j = m) for
// m = 0..n_max. Adding the geometric sojourn at site j uses
//   P(T_{j+1} = m) = w P(T_j = m-1) + (1-w) P(T_{j+1} = m-1),
// and the mass pushed past n_max is P(T_j = m) (1-w)^{n_max-m}.
template <class Num, class Omega, class Emit>
void convolve_sojourns(const Omega& omega, std::size_t k_max, std::size_t n_max, Emit&& emit) {
  std::vector<Num> h(n_max + 1, Num(0));
  h[0] = Num(1);
  Num tail(0);
  std::vector<Num> next(n_max + 1, Num(0));
  for (std::size_t j = 0; j < k_max; ++j) {
    const Num w(omega[j]);
    const Num stay = Num(1) - w;
    Num spill(0);
    Num stay_pow(1);
    for (std::size_t m = n_max + 1; m-- > j;) {
      spill += h[m] * stay_pow;
      stay_pow *= stay;
    }
    tail += spill;
    std::fill(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(j + 1), Num(0));
    for (std::size_t m = j + 1; m <= n_max; ++m) next[m] = w * h[m - 1] + stay * next[m - 1];
    std::swap(h, next);
    emit(j + 1, h, tail);
  }
}

}  // namespace

std::vector<HittingDist> hitting_dists(const Environment& env, std::size_t k_max, std::size_t n_max) {
  check_hitting_args(env, k_max, n_max);
  std::vector<HittingDist> out;
  out.reserve(k_max);
  convolve_sojourns<double>(env.omega(), k_max, n_max,
                            [&](std::size_t k, const std::vector<double>& h, double tail) {
                              out.push_back(HittingDist{
                                  k, n_max, std::vector<double>(h.begin() + static_cast<std::ptrdiff_t>(k), h.end()),
                                  tail});
                            });
  return out;
}

std::vector<ExactHittingDist> hitting_dists_exact(const Environment& env, std::size_t k_max,
                                                  std::size_t n_max) {
  check_hitting_args(env, k_max, n_max);
  std::vector<ExactHittingDist> out;
  out.reserve(k_max);
  convolve_sojourns<Rational>(
      env.exact(), k_max, n_max,
      [&](std::size_t k, const std::vector<Rational>& h, const Rational& tail) {
        out.push_back(ExactHittingDist{
            k, n_max, std::vector<Rational>(h.begin() + static_cast<std::ptrdiff_t>(k), h.end()),
            tail});
      });
  return out;
}

HittingDist hitting_dist(const Environment& env, std::size_t k, std::optional<std::size_t> n_max) {
  check_hitting_args(env, k, n_max.value_or(k));
  const std::size_t horizon = n_max.value_or(default_hitting_horizon(env, k));
  HittingDist result;
  convolve_sojourns<double>(env.omega(), k, horizon,
                            [&](std::size_t level, const std::vector<double>& h, double tail) {
                              if (level != k) return;
                              result = HittingDist{
                                  k, horizon, std::vector<double>(h.begin() + static_cast<std::ptrdiff_t>(k), h.end()),
                                  tail};
                            });
  return result;
}

ExactHittingDist hitting_dist_exact(const Environment& env, std::size_t k, std::size_t n_max) {
  check_hitting_args(env, k, n_max);
  ExactHittingDist result;
  convolve_sojourns<Rational>(
      env.exact(), k, n_max,
      [&](std::size_t level, const std::vector<Rational>& h, const Rational& tail) {
        if (level != k) return;
        result = ExactHittingDist{
            k, n_max, std::vector<Rational>(h.begin() + static_cast<std::ptrdiff_t>(k), h.end()),
            tail};
      });
  return result;
}

std::pair<double, double> hitting_moments(const Environment& env, std::size_t k) {
  env.require_sites(k, "hitting_moments");
  const PrefixStats stats = prefix_stats(env);
  return {stats.mu[k], stats.sigma2[k]};
}

}  // namespace chaowalk
