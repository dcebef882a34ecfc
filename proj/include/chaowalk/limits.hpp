#pragma once

// Centering, generalized inverses, the three Gaussian densities and the
// local/central limit predictions.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "chaowalk/env.hpp"

namespace chaowalk {

// a(0) = 0 < a(1) < a(2) < ...
class IncreasingSeq {
 public:
  explicit IncreasingSeq(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  // inf_k (a(k+1) - a(k)) over the stored range; +inf for a single entry.
  double min_step() const;

 private:
  std::vector<double> values_;
};

// min{k : a(k) >= level}. BoundsError when the stored range never reaches it.
std::size_t gen_inverse(const IncreasingSeq& a, double level);

// k_n = min{k >= 0 : mu_k >= n}.
std::size_t centering(const Environment& env, std::size_t n);
std::size_t centering(const PrefixStats& stats, std::size_t n);

// Gaussian approximation of P(T_k = n).
double f_density(const PrefixStats& stats, std::size_t k, double n);

// (2 pi n sigma2/mu)^{-1/2} exp(-(mu_k - n)^2 / (2 n sigma2/mu)).
double g_density(const LimitParams& params, double mu_k, double n);

// (2 pi n s)^{-1/2} exp(-(k - k_n)^2 / (2 n s)), s = sigma2/mu^3.
double h_density(const LimitParams& params, double k_n, double n, double k);

struct LltPrediction {
  std::size_t time = 0;
  std::size_t centering = 0;
  LimitParams params{};
  std::vector<double> gaussian;    // h_n(k), k = 0..n
  std::vector<double> modulation;  // omega_k^{-1} / mu
  std::vector<double> predicted;   // modulation * gaussian

  // Header `site,predicted_mass,gaussian,modulation`.
  std::string to_csv() const;
};

// Prediction for sites 0..n; `centering_shift` moves k_n for robustness
// checks of alternative centerings.
LltPrediction llt_prediction(const Environment& env, const LimitParams& params, std::size_t n,
                             long centering_shift = 0);

// Standard normal CDF.
double clt_normal_cdf(double x);

}  // namespace chaowalk
