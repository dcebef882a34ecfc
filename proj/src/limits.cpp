#include "chaowalk/limits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "chaowalk/error.hpp"

namespace chaowalk {

IncreasingSeq::IncreasingSeq(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty() || values_[0] != 0.0)
    throw ValidationError("increasing sequence must start at a(0) = 0");
  for (std::size_t k = 1; k < values_.size(); ++k)
    if (!(values_[k] > values_[k - 1]))
      throw ValidationError("sequence is not strictly increasing at index " + std::to_string(k));
}

double IncreasingSeq::min_step() const {
  double c = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < values_.size(); ++k) c = std::min(c, values_[k] - values_[k - 1]);
  return c;
}

std::size_t gen_inverse(const IncreasingSeq& a, double level) {
  const auto v = a.values();
  const auto it = std::lower_bound(v.begin(), v.end(), level);
  if (it == v.end())
    throw BoundsError("sequence exhausted before reaching level " + std::to_string(level));
  return static_cast<std::size_t>(it - v.begin());
}

std::size_t centering(const PrefixStats& stats, std::size_t n) {
  const auto& mu = stats.mu;
  const auto it = std::lower_bound(mu.begin(), mu.end(), static_cast<double>(n));
  if (it == mu.end())
    throw BoundsError("environment prefix sums never reach n = " + std::to_string(n));
  return static_cast<std::size_t>(it - mu.begin());
}

std::size_t centering(const Environment& env, std::size_t n) {
  return centering(prefix_stats(env), n);
}

namespace {

// Evaluated as exp(log-density) so far tails underflow to 0 instead of NaN.
double gaussian(double offset, double variance) {
  const double log_density =
      -0.5 * std::log(2.0 * std::numbers::pi * variance) - offset * offset / (2.0 * variance);
  return std::exp(log_density);
}

}  // namespace

double f_density(const PrefixStats& stats, std::size_t k, double n) {
  if (k == 0) throw DegenerateError("f_k needs k >= 1 (T_0 = 0 has no spread)");
  if (k >= stats.mu.size()) throw BoundsError("f_k site beyond the environment");
  return gaussian(n - stats.mu[k], stats.sigma2[k]);
}

double g_density(const LimitParams& params, double mu_k, double n) {
  if (!(n >= 1.0)) throw DegenerateError("g_k(n) needs n >= 1");
  return gaussian(mu_k - n, n * params.sigma2 / params.mu);
}

double h_density(const LimitParams& params, double k_n, double n, double k) {
  if (!(n >= 1.0)) throw DegenerateError("h_n(k) needs n >= 1");
  return gaussian(k - k_n, n * params.sigma_tilde2);
}

LltPrediction llt_prediction(const Environment& env, const LimitParams& params, std::size_t n,
                             long centering_shift) {
  env.require_sites(n + 1, "llt_prediction");
  if (n == 0) throw DegenerateError("llt prediction needs n >= 1");
  LltPrediction out;
  out.time = n;
  out.params = params;
  const long shifted = static_cast<long>(centering(env, n)) + centering_shift;
  out.centering = static_cast<std::size_t>(std::max(0L, shifted));
  const double nd = static_cast<double>(n);
  out.gaussian.resize(n + 1);
  out.modulation.resize(n + 1);
  out.predicted.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    out.gaussian[k] =
        h_density(params, static_cast<double>(out.centering), nd, static_cast<double>(k));
    out.modulation[k] = 1.0 / (env[k] * params.mu);
    out.predicted[k] = out.modulation[k] * out.gaussian[k];
  }
  return out;
}

std::string LltPrediction::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "site,predicted_mass,gaussian,modulation\n";
  for (std::size_t k = 0; k < predicted.size(); ++k)
    os << k << ',' << predicted[k] << ',' << gaussian[k] << ',' << modulation[k] << '\n';
  return os.str();
}

double clt_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace chaowalk
