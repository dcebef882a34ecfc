#include "chaowalk/env.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "chaowalk/error.hpp"
#include "chaowalk/numeric.hpp"
#include "chaowalk/rng.hpp"

namespace chaowalk {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool in_open_unit(const Rational& q) { return q > 0 && q < 1; }
bool in_open_unit(double x) { return x > 0.0 && x < 1.0; }

std::string fmt_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace

void validate(const EnvSpec& spec) {
  std::visit(Overloaded{
                 [](const spec::Constant& c) {
                   if (!in_open_unit(c.p)) throw ValidationError("constant p must lie in (0,1)");
                 },
                 [](const spec::TwoStateMarkov& m) {
                   if (!in_open_unit(m.a) || !in_open_unit(m.b))
                     throw ValidationError("markov values must lie in (0,1)");
                   if (!in_open_unit(m.stay))
                     throw ValidationError("markov stay probability must lie in (0,1)");
                 },
                 [](const spec::Sinusoid& s) {
                   if (!std::isfinite(s.offset) || !std::isfinite(s.amplitude))
                     throw ValidationError("sinusoid parameters must be finite");
                 },
                 [](const spec::IidDiscrete& d) {
                   if (d.values.empty() || d.values.size() != d.probabilities.size())
                     throw ValidationError("iid spec needs matching non-empty values/probabilities");
                   double total = 0.0;
                   for (std::size_t i = 0; i < d.values.size(); ++i) {
                     if (!in_open_unit(d.values[i]))
                       throw ValidationError("iid values must lie in (0,1)");
                     if (!(d.probabilities[i] >= 0.0))
                       throw ValidationError("iid probabilities must be non-negative");
                     total += d.probabilities[i];
                   }
                   if (std::fabs(total - 1.0) > 1e-12)
                     throw ValidationError("iid probabilities must sum to 1");
                 },
                 [](const spec::Table& t) {
                   if (t.path.empty()) throw ValidationError("table spec needs a file path");
                 },
             },
             spec);
}

std::string describe(const EnvSpec& spec) {
  return std::visit(
      Overloaded{
          [](const spec::Constant& c) { return "constant(" + to_string(c.p) + ")"; },
          [](const spec::TwoStateMarkov& m) {
            return "markov(" + to_string(m.a) + "," + to_string(m.b) + ";stay=" +
                   fmt_double(m.stay) + ")";
          },
          [](const spec::Sinusoid& s) {
            return "sinusoid(" + fmt_double(s.offset) + "," + fmt_double(s.amplitude) + ")";
          },
          [](const spec::IidDiscrete& d) {
            std::string out = "iid(";
            for (std::size_t i = 0; i < d.values.size(); ++i) {
              if (i) out += ",";
              out += to_string(d.values[i]);
            }
            out += ";";
            for (std::size_t i = 0; i < d.probabilities.size(); ++i) {
              if (i) out += ",";
              out += fmt_double(d.probabilities[i]);
            }
            return out + ")";
          },
          [](const spec::Table& t) { return "table(" + t.path.string() + ")"; },
      },
      spec);
}

EnvSpec figure2_markov() { return spec::TwoStateMarkov{Rational(1, 4), Rational(3, 4), 0.8}; }

EnvSpec figure2_sinusoid() { return spec::Sinusoid{0.55, 0.45}; }

Environment::Environment(std::vector<double> omega, EnvSpec spec, std::uint64_t seed)
    : omega_(std::move(omega)), spec_(std::move(spec)), seed_(seed) {
  if (omega_.empty()) throw ValidationError("environment needs at least one site");
  for (std::size_t k = 0; k < omega_.size(); ++k)
    if (!in_open_unit(omega_[k]))
      throw ValidationError("omega_" + std::to_string(k) + " = " + fmt_double(omega_[k]) +
                            " is outside (0,1)");
}

Environment::Environment(std::vector<Rational> omega, EnvSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), seed_(seed) {
  if (omega.empty()) throw ValidationError("environment needs at least one site");
  omega_.reserve(omega.size());
  for (std::size_t k = 0; k < omega.size(); ++k) {
    if (!in_open_unit(omega[k]))
      throw ValidationError("omega_" + std::to_string(k) + " = " + to_string(omega[k]) +
                            " is outside (0,1)");
    omega_.push_back(to_double(omega[k]));
    // get_d truncates; a value within (0,1) can still round to 1.0 when it
    // is closer than one ulp, which the float engines cannot represent.
    if (!in_open_unit(omega_.back()))
      throw ValidationError("omega_" + std::to_string(k) + " is not representable in (0,1)");
  }
  exact_ = std::move(omega);
}

std::span<const Rational> Environment::exact() const {
  if (!exact_) throw UnsupportedError("environment " + describe(spec_) + " has no exact entries");
  return *exact_;
}

void Environment::require_sites(std::size_t sites, const char* what) const {
  if (omega_.size() < sites)
    throw BoundsError(std::string(what) + " needs an environment of length >= " +
                      std::to_string(sites) + ", have " + std::to_string(omega_.size()));
}

std::vector<Rational> read_table(const std::filesystem::path& path, std::size_t max_rows) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open table file " + path.string());
  std::vector<Rational> rows;
  std::string line;
  std::size_t line_no = 0;
  while (rows.size() < max_rows && std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    Rational q;
    try {
      q = parse_rational(line);
    } catch (const ValidationError&) {
      throw ParseError("malformed table row '" + line + "' in " + path.string(), line_no);
    }
    if (!in_open_unit(q))
      throw ParseError("table value " + to_string(q) + " outside (0,1) in " + path.string(),
                       line_no);
    rows.push_back(std::move(q));
  }
  return rows;
}

Environment generate(const EnvSpec& spec, std::size_t length, std::uint64_t seed) {
  validate(spec);
  if (length == 0) throw ValidationError("environment length must be >= 1");
  StreamRng rng(seed, streams::kEnvironment);
  return std::visit(
      Overloaded{
          [&](const spec::Constant& c) {
            return Environment(std::vector<Rational>(length, c.p), spec, seed);
          },
          [&](const spec::TwoStateMarkov& m) {
            std::vector<Rational> omega;
            omega.reserve(length);
            bool upper = rng.bernoulli(0.5);
            for (std::size_t k = 0; k < length; ++k) {
              if (k > 0 && !rng.bernoulli(m.stay)) upper = !upper;
              omega.push_back(upper ? m.b : m.a);
            }
            return Environment(std::move(omega), spec, seed);
          },
          [&](const spec::Sinusoid& s) {
            std::vector<double> omega(length);
            for (std::size_t k = 0; k < length; ++k) {
              omega[k] = s.offset + s.amplitude * std::sin(static_cast<double>(k));
              if (!in_open_unit(omega[k]))
                throw GenerationError("sinusoid value " + fmt_double(omega[k]) + " outside (0,1)",
                                      k);
            }
            return Environment(std::move(omega), spec, seed);
          },
          [&](const spec::IidDiscrete& d) {
            std::vector<double> cumulative(d.probabilities.size());
            CompensatedSum acc;
            for (std::size_t i = 0; i < d.probabilities.size(); ++i) {
              acc.add(d.probabilities[i]);
              cumulative[i] = acc.value();
            }
            std::vector<Rational> omega;
            omega.reserve(length);
            for (std::size_t k = 0; k < length; ++k) {
              const double u = rng.uniform() * cumulative.back();
              auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
              const auto idx = std::min<std::size_t>(
                  static_cast<std::size_t>(it - cumulative.begin()), d.values.size() - 1);
              omega.push_back(d.values[idx]);
            }
            return Environment(std::move(omega), spec, seed);
          },
          [&](const spec::Table& t) {
            auto omega = read_table(t.path, length);
            if (omega.size() < length)
              throw BoundsError("table " + t.path.string() + " has " +
                                std::to_string(omega.size()) + " rows, need " +
                                std::to_string(length));
            return Environment(std::move(omega), spec, seed);
          },
      },
      spec);
}

PrefixStats prefix_stats(const Environment& env) {
  PrefixStats out;
  out.mu.resize(env.size() + 1);
  out.sigma2.resize(env.size() + 1);
  CompensatedSum mu;
  CompensatedSum sigma2;
  out.mu[0] = 0.0;
  out.sigma2[0] = 0.0;
  for (std::size_t j = 0; j < env.size(); ++j) {
    const double w = env[j];
    mu.add(1.0 / w);
    sigma2.add((1.0 - w) / (w * w));
    out.mu[j + 1] = mu.value();
    out.sigma2[j + 1] = sigma2.value();
  }
  return out;
}

LimitParams make_limit_params(double mu, double sigma2, double lambda) {
  if (!(mu > 1.0) || !std::isfinite(mu)) throw ValidationError("mu must exceed 1");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw ValidationError("sigma2 must be positive");
  if (!(lambda >= 0.0 && lambda < 0.5)) throw ValidationError("lambda must lie in [0, 1/2)");
  return LimitParams{mu, sigma2, lambda, sigma2 / (mu * mu * mu)};
}

namespace {

// Periodic trapezoid rule; spectrally accurate for smooth periodic integrands.
template <class F>
double circle_mean(F&& f, std::size_t nodes) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < nodes; ++i)
    acc.add(f(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(nodes)));
  return acc.value() / static_cast<double>(nodes);
}

}  // namespace

LimitParams limit_params(const EnvSpec& spec) {
  validate(spec);
  return std::visit(
      Overloaded{
          [](const spec::Constant& c) {
            const Rational mu = 1 / c.p;
            const Rational sigma2 = (1 - c.p) / (c.p * c.p);
            return make_limit_params(to_double(mu), to_double(sigma2));
          },
          [](const spec::TwoStateMarkov& m) {
            const Rational mu = (1 / m.a + 1 / m.b) / 2;
            const Rational sigma2 = ((1 - m.a) / (m.a * m.a) + (1 - m.b) / (m.b * m.b)) / 2;
            return make_limit_params(to_double(mu), to_double(sigma2));
          },
          [](const spec::Sinusoid& s) {
            // sin k for integer k is equidistributed mod 2 pi, so the stationary
            // averages are circle means of the site functions.
            auto omega = [&](double t) { return s.offset + s.amplitude * std::sin(t); };
            constexpr std::size_t kNodes = std::size_t{1} << 16;
            const double mu = circle_mean([&](double t) { return 1.0 / omega(t); }, kNodes);
            const double sigma2 = circle_mean(
                [&](double t) {
                  const double w = omega(t);
                  return (1.0 - w) / (w * w);
                },
                kNodes);
            return make_limit_params(mu, sigma2);
          },
          [](const spec::IidDiscrete& d) {
            CompensatedSum mu;
            CompensatedSum sigma2;
            for (std::size_t i = 0; i < d.values.size(); ++i) {
              const double w = to_double(d.values[i]);
              mu.add(d.probabilities[i] / w);
              sigma2.add(d.probabilities[i] * (1.0 - w) / (w * w));
            }
            return make_limit_params(mu.value(), sigma2.value());
          },
          [](const spec::Table&) -> LimitParams {
            throw UnsupportedError(
                "limit constants of a table environment must be supplied explicitly");
          },
      },
      spec);
}

double window_scale(std::size_t k) {
  const double kd = static_cast<double>(k);
  return k < 2 ? 0.0 : std::sqrt(kd * std::log(kd));
}

bool non_increasing_top_half(std::span<const double> values) {
  if (values.size() < 2) return true;
  const std::size_t start = values.size() / 2;
  for (std::size_t i = start + 1; i < values.size(); ++i)
    if (values[i] > values[i - 1]) return false;
  return true;
}

DiagnosticsReport diagnostics(const Environment& env, const LimitParams& params,
                              std::span<const std::size_t> k_grid,
                              std::span<const double> u_values) {
  if (k_grid.empty()) throw ValidationError("diagnostics needs a non-empty k grid");
  for (std::size_t i = 0; i < k_grid.size(); ++i) {
    if (k_grid[i] < 2) throw ValidationError("diagnostics k grid entries must be >= 2");
    if (i > 0 && k_grid[i] <= k_grid[i - 1])
      throw ValidationError("diagnostics k grid must be strictly increasing");
  }
  for (double u : u_values)
    if (!(u > 0.0)) throw ValidationError("moving-average u values must be positive");

  const std::size_t k_max = k_grid.back();
  const double u_max = u_values.empty() ? 0.0 : *std::max_element(u_values.begin(), u_values.end());
  const auto reach = static_cast<std::size_t>(std::floor(u_max * window_scale(k_max)));
  env.require_sites(k_max + reach, "diagnostics");

  const PrefixStats stats = prefix_stats(env);
  // Centered partial sums S(m) = sum_{l<m} (1/omega_l - mu).
  std::vector<double> centered(env.size() + 1, 0.0);
  std::vector<double> running_max(env.size() + 1, 0.0);
  std::vector<double> cube(env.size() + 1, 0.0);
  {
    CompensatedSum c;
    CompensatedSum c3;
    for (std::size_t j = 0; j < env.size(); ++j) {
      const double inv = 1.0 / env[j];
      c.add(inv - params.mu);
      c3.add(inv * inv * inv);
      centered[j + 1] = c.value();
      cube[j + 1] = c3.value();
      running_max[j + 1] = std::max(running_max[j], inv);
    }
  }

  DiagnosticsReport r;
  r.spec = describe(env.spec());
  r.params = params;
  r.k_grid.assign(k_grid.begin(), k_grid.end());
  r.u_values.assign(u_values.begin(), u_values.end());
  r.moving_avg.assign(u_values.size(), {});
  for (std::size_t k : k_grid) {
    const double kd = static_cast<double>(k);
    const double klam = std::pow(kd, params.lambda);
    const double rate = klam * std::sqrt(std::log(kd));
    r.growth.push_back(running_max[k] / klam);
    r.mean.push_back(std::fabs(stats.mu[k] / kd - params.mu) * rate);
    r.variance.push_back(std::fabs(stats.sigma2[k] / kd - params.sigma2) * rate);
    r.third_moment.push_back(cube[k] / kd);
    const double norm = std::pow(kd, 0.5 - params.lambda);
    for (std::size_t ui = 0; ui < u_values.size(); ++ui) {
      const auto width = static_cast<std::size_t>(std::floor(u_values[ui] * window_scale(k)));
      // j ranges over [-width, width]; the sum over l in [k, k+j) is
      // S(k+j) - S(k), and for negative j it is -(S(k) - S(k+j)).
      const std::size_t lo = k > width ? k - width : 0;
      double best = 0.0;
      for (std::size_t m = lo; m <= k + width; ++m)
        best = std::max(best, std::fabs(centered[m] - centered[k]));
      r.moving_avg[ui].push_back(best / norm);
    }
  }
  r.growth_flag = non_increasing_top_half(r.growth);
  r.mean_flag = non_increasing_top_half(r.mean);
  r.variance_flag = non_increasing_top_half(r.variance);
  r.third_moment_flag = non_increasing_top_half(r.third_moment);
  for (const auto& traj : r.moving_avg) r.moving_avg_flags.push_back(non_increasing_top_half(traj));
  return r;
}

std::string DiagnosticsReport::to_json() const {
  using nlohmann::json;
  json moving = json::array();
  json moving_flags = json::array();
  for (std::size_t i = 0; i < u_values.size(); ++i) {
    moving.push_back({{"u", u_values[i]}, {"values", moving_avg[i]}});
    moving_flags.push_back({{"u", u_values[i]}, {"non_increasing_top_half", moving_avg_flags[i]}});
  }
  json j = {
      {"spec", spec},
      {"params",
       {{"mu", params.mu},
        {"sigma2", params.sigma2},
        {"lambda", params.lambda},
        {"sigma_tilde2", params.sigma_tilde2}}},
      {"k_grid", k_grid},
      {"residuals",
       {{"growth", growth},
        {"mean", mean},
        {"variance", variance},
        {"third_moment", third_moment},
        {"moving_avg", moving}}},
      {"heuristic_flags",
       {{"note",
         "heuristic: trajectory non-increasing over the top half of the k grid; "
         "finite-sample trend only, not a verdict on the asymptotic condition"},
        {"growth", growth_flag},
        {"mean", mean_flag},
        {"variance", variance_flag},
        {"third_moment", third_moment_flag},
        {"moving_avg", moving_flags}}},
  };
  return j.dump(2);
}

Matrix two_state_transition(double stay) {
  return Matrix{{stay, 1.0 - stay}, {1.0 - stay, stay}};
}

double phi_mixing_markov(const Matrix& transition, std::span<const double> stationary,
                         std::size_t lag) {
  constexpr double kTol = 1e-12;
  const std::size_t n = transition.size();
  if (n == 0 || stationary.size() != n)
    throw ValidationError("transition matrix and stationary law must have matching size");
  if (lag < 1) throw ValidationError("mixing lag must be >= 1");
  for (const auto& row : transition) {
    if (row.size() != n) throw ValidationError("transition matrix must be square");
    double total = 0.0;
    for (double x : row) {
      if (!(x >= 0.0)) throw ValidationError("transition entries must be non-negative");
      total += x;
    }
    if (std::fabs(total - 1.0) > kTol) throw ValidationError("transition rows must sum to 1");
  }
  double pi_total = 0.0;
  for (double x : stationary) {
    if (!(x >= 0.0)) throw ValidationError("stationary law must be non-negative");
    pi_total += x;
  }
  if (std::fabs(pi_total - 1.0) > kTol) throw ValidationError("stationary law must sum to 1");
  for (std::size_t j = 0; j < n; ++j) {
    double flow = 0.0;
    for (std::size_t i = 0; i < n; ++i) flow += stationary[i] * transition[i][j];
    if (std::fabs(flow - stationary[j]) > kTol)
      throw ValidationError("stationary law is not invariant under the transition matrix");
  }

  // Deviation matrix D_k = P^k - 1 pi obeys D_k = D_{k-1} P because pi P = pi.
  // Propagating D directly avoids the cancellation of forming P^k - pi.
  Matrix deviation(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deviation[i][j] = transition[i][j] - stationary[j];
  for (std::size_t step = 1; step < lag; ++step) {
    Matrix next(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t m = 0; m < n; ++m)
        for (std::size_t j = 0; j < n; ++j) next[i][j] += deviation[i][m] * transition[m][j];
    deviation = std::move(next);
  }
  // The maximising set B collects the states where P^k(i,.) exceeds pi (or
  // its complement, with the same value), so the sup over B is the positive
  // part of the row deviation.
  double phi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double excess = 0.0;
    for (std::size_t j = 0; j < n; ++j) excess += std::max(0.0, deviation[i][j]);
    phi = std::max(phi, excess);
  }
  return phi;
}

}  // namespace chaowalk
