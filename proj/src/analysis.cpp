#include "chaowalk/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "chaowalk/error.hpp"

namespace chaowalk {

LltError llt_error(const Pmf& pmf, const LltPrediction& prediction) {
  LltError out;
  double sup = -1.0;
  for (std::size_t k = 0; k < prediction.predicted.size(); ++k) {
    const double diff = std::fabs(pmf.at(k) - prediction.predicted[k]);
    if (diff > sup) {
      sup = diff;
      out.argmax = k;
    }
  }
  out.value = std::sqrt(static_cast<double>(prediction.time)) * std::max(sup, 0.0);
  return out;
}

LltError llt_error(const Environment& env, const LimitParams& params, std::size_t n,
                   Engine engine, long centering_shift) {
  const Pmf pmf = walk_pmf(env, n, engine);
  return llt_error(pmf, llt_prediction(env, params, n, centering_shift));
}

double hitting_llt_error(const Environment& env, std::size_t k) {
  const HittingDist dist = hitting_dist(env, k);
  const PrefixStats stats = prefix_stats(env);
  double sup = 0.0;
  for (std::size_t n = 0; n <= dist.n_max; ++n)
    sup = std::max(sup, std::fabs(dist.at(n) - f_density(stats, k, static_cast<double>(n))));
  // Past the horizon both P(T_k = n) <= tail and f_k(n) <= f_k(n_max + 1),
  // since n_max lies above mu_k.
  const double beyond =
      std::max(dist.tail, f_density(stats, k, static_cast<double>(dist.n_max + 1)));
  sup = std::max(sup, beyond);
  return static_cast<double>(k) * sup;
}

double ks_distance(const Pmf& pmf, double center, double scale) {
  double below = 0.0;
  double sup = 0.0;
  for (std::size_t i = 0; i < pmf.masses.size(); ++i) {
    const double x = (static_cast<double>(pmf.origin + i) - center) / scale;
    const double phi = clt_normal_cdf(x);
    const double above = below + pmf.masses[i];
    // F jumps at x: compare Phi(x) against both F(x-) and F(x).
    sup = std::max({sup, std::fabs(below - phi), std::fabs(above - phi)});
    below = above;
  }
  return std::min(sup, 1.0);
}

double clt_error(const Environment& env, const LimitParams& params, std::size_t n,
                 Engine engine) {
  if (n == 0) throw DegenerateError("clt error needs n >= 1");
  const Pmf pmf = walk_pmf(env, n, engine);
  const double center = static_cast<double>(centering(env, n));
  const double scale = std::sqrt(params.sigma_tilde2 * static_cast<double>(n));
  return ks_distance(pmf, center, scale);
}

double lln_check(const Environment& env, const LimitParams& params, std::size_t n,
                 std::size_t samples, std::uint64_t seed) {
  if (n == 0) throw DegenerateError("lln check needs n >= 1");
  const auto draws = sample_final(env, n, seed, samples);
  const double speed = 1.0 / params.mu;
  double worst = 0.0;
  for (const auto& s : draws)
    worst = std::max(worst,
                     std::fabs(static_cast<double>(s.final_position) / static_cast<double>(n) - speed));
  return worst;
}

double Figure2Data::sup_error_modulated() const {
  double sup = 0.0;
  for (const auto& r : rows) sup = std::max(sup, std::fabs(r.exact_mass - r.modulated_prediction));
  return sup;
}

double Figure2Data::sup_error_gaussian() const {
  double sup = 0.0;
  for (const auto& r : rows) sup = std::max(sup, std::fabs(r.exact_mass - r.gaussian));
  return sup;
}

std::string Figure2Data::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "site,exact_mass,gaussian,modulated_prediction\n";
  for (const auto& r : rows)
    os << r.site << ',' << r.exact_mass << ',' << r.gaussian << ',' << r.modulated_prediction
       << '\n';
  return os.str();
}

Figure2Data figure2(const Environment& env, const LimitParams& params, std::size_t n) {
  const Pmf pmf = walk_pmf(env, n);
  const LltPrediction pred = llt_prediction(env, params, n);
  const double peak = *std::max_element(pred.gaussian.begin(), pred.gaussian.end());
  Figure2Data data;
  data.time = n;
  for (std::size_t k = 0; k <= n; ++k)
    if (pred.gaussian[k] > 1e-12 * peak)
      data.rows.push_back(Figure2Row{k, pmf.at(k), pred.gaussian[k], pred.predicted[k]});
  return data;
}

Figure2Data figure2(const EnvSpec& spec, std::size_t n, std::uint64_t seed) {
  const Environment env = generate(spec, n + 1, seed);
  return figure2(env, limit_params(spec), n);
}

// ---- configuration ---------------------------------------------------------

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Llt: return "llt";
    case ExperimentKind::Clt: return "clt";
    case ExperimentKind::Lln: return "lln";
    case ExperimentKind::Hitting: return "hitting";
    case ExperimentKind::Figure2: return "figure2";
  }
  return "unknown";
}

namespace {

using nlohmann::json;

const json& member(const json& obj, const std::string& key, const std::string& pointer) {
  if (!obj.is_object()) throw ConfigError(pointer, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(pointer + "/" + key, "required field is missing");
  return *it;
}

Rational rational_at(const json& j, const std::string& pointer) {
  try {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<long>());
    if (j.is_number()) return rational_from_double(j.get<double>());
  } catch (const ValidationError& e) {
    throw ConfigError(pointer, e.what());
  }
  throw ConfigError(pointer, "expected a number or a \"p/q\" string");
}

double number_at(const json& j, const std::string& pointer) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return to_double(rational_at(j, pointer));
  throw ConfigError(pointer, "expected a number");
}

std::uint64_t uint_at(const json& j, const std::string& pointer) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
    throw ConfigError(pointer, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

bool bool_at(const json& j, const std::string& pointer) {
  if (!j.is_boolean()) throw ConfigError(pointer, "expected a boolean");
  return j.get<bool>();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

}  // namespace

EnvSpec parse_env_spec(const json& j, const std::string& pointer) {
  const std::string variant_ptr = pointer + "/variant";
  const json& v = member(j, "variant", pointer);
  if (!v.is_string()) throw ConfigError(variant_ptr, "expected a string");
  const std::string variant = v.get<std::string>();
  EnvSpec spec;
  if (variant == "constant") {
    spec = spec::Constant{rational_at(member(j, "p", pointer), pointer + "/p")};
  } else if (variant == "markov") {
    const json& values = member(j, "values", pointer);
    if (!values.is_array() || values.size() != 2)
      throw ConfigError(pointer + "/values", "expected two values");
    spec = spec::TwoStateMarkov{rational_at(values[0], pointer + "/values/0"),
                                rational_at(values[1], pointer + "/values/1"),
                                number_at(member(j, "stay", pointer), pointer + "/stay")};
  } else if (variant == "sinusoid") {
    spec = spec::Sinusoid{number_at(member(j, "offset", pointer), pointer + "/offset"),
                          number_at(member(j, "amplitude", pointer), pointer + "/amplitude")};
  } else if (variant == "iid") {
    const json& values = member(j, "values", pointer);
    const json& probs = member(j, "probabilities", pointer);
    if (!values.is_array() || values.empty())
      throw ConfigError(pointer + "/values", "expected a non-empty array");
    if (!probs.is_array() || probs.size() != values.size())
      throw ConfigError(pointer + "/probabilities", "expected an array matching values");
    spec::IidDiscrete d;
    for (std::size_t i = 0; i < values.size(); ++i) {
      d.values.push_back(rational_at(values[i], pointer + "/values/" + std::to_string(i)));
      d.probabilities.push_back(
          number_at(probs[i], pointer + "/probabilities/" + std::to_string(i)));
    }
    spec = std::move(d);
  } else if (variant == "table") {
    const json& path = member(j, "path", pointer);
    if (!path.is_string()) throw ConfigError(pointer + "/path", "expected a string");
    spec = spec::Table{path.get<std::string>()};
  } else {
    throw ConfigError(variant_ptr, "unknown variant '" + variant + "'");
  }
  try {
    validate(spec);
  } catch (const ValidationError& e) {
    throw ConfigError(pointer, e.what());
  }
  return spec;
}

EnvSpec parse_env_spec(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("--env", "expected VARIANT:ARGS");
  const std::string variant = text.substr(0, colon);
  const std::string args = text.substr(colon + 1);
  json j = {{"variant", variant}};
  const auto parts = split(args, ',');
  auto need = [&](std::size_t count) {
    if (parts.size() != count)
      throw ConfigError("--env", variant + " takes " + std::to_string(count) + " arguments");
  };
  if (variant == "constant") {
    need(1);
    j["p"] = parts[0];
  } else if (variant == "markov") {
    need(3);
    j["values"] = {parts[0], parts[1]};
    j["stay"] = parts[2];
  } else if (variant == "sinusoid") {
    need(2);
    j["offset"] = parts[0];
    j["amplitude"] = parts[1];
  } else if (variant == "iid") {
    const auto halves = split(args, ';');
    if (halves.size() != 2) throw ConfigError("--env", "iid expects VALUES;PROBABILITIES");
    j["values"] = split(halves[0], ',');
    j["probabilities"] = split(halves[1], ',');
  } else if (variant == "table") {
    j["path"] = args;
  }
  return parse_env_spec(j, "--env");
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
  ExperimentConfig c;
  const json& exp = member(j, "experiment", "");
  if (!exp.is_string()) throw ConfigError("/experiment", "expected a string");
  const std::string name = exp.get<std::string>();
  if (name == "llt") c.kind = ExperimentKind::Llt;
  else if (name == "clt") c.kind = ExperimentKind::Clt;
  else if (name == "lln") c.kind = ExperimentKind::Lln;
  else if (name == "hitting") c.kind = ExperimentKind::Hitting;
  else if (name == "figure2") c.kind = ExperimentKind::Figure2;
  else throw ConfigError("/experiment", "unknown experiment '" + name + "'");

  const json& env = member(j, "env", "");
  c.env = parse_env_spec(env, "/env");
  if (auto it = env.find("length"); it != env.end()) {
    c.env_length = uint_at(*it, "/env/length");
    if (*c.env_length == 0) throw ConfigError("/env/length", "must be >= 1");
  }
  if (auto it = env.find("seed"); it != env.end()) c.env_seed = uint_at(*it, "/env/seed");

  if (auto it = j.find("params"); it != j.end() && !it->is_null()) {
    const double mu = number_at(member(*it, "mu", "/params"), "/params/mu");
    const double sigma2 = number_at(member(*it, "sigma2", "/params"), "/params/sigma2");
    double lambda = 0.0;
    if (auto l = it->find("lambda"); l != it->end()) lambda = number_at(*l, "/params/lambda");
    try {
      c.params = make_limit_params(mu, sigma2, lambda);
    } catch (const ValidationError& e) {
      throw ConfigError("/params", e.what());
    }
  }

  const json& grid = member(j, "n_grid", "");
  if (!grid.is_array() || grid.empty()) throw ConfigError("/n_grid", "expected a non-empty array");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::string ptr = "/n_grid/" + std::to_string(i);
    const auto n = static_cast<std::size_t>(uint_at(grid[i], ptr));
    if (n == 0) throw ConfigError(ptr, "grid entries must be >= 1");
    if (!c.n_grid.empty() && n <= c.n_grid.back())
      throw ConfigError(ptr, "grid must be strictly increasing");
    c.n_grid.push_back(n);
  }
  if (auto it = j.find("seeds"); it != j.end()) {
    c.seeds = static_cast<std::size_t>(uint_at(*it, "/seeds"));
    if (c.seeds == 0) throw ConfigError("/seeds", "must be >= 1");
  }
  if (auto it = j.find("seed"); it != j.end()) c.sample_seed = uint_at(*it, "/seed");
  if (auto it = j.find("engine"); it != j.end()) {
    if (*it == "float") c.engine = Engine::Float;
    else if (*it == "exact") c.engine = Engine::Exact;
    else throw ConfigError("/engine", "expected \"float\" or \"exact\"");
  }
  if (auto it = j.find("emit"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("/emit", "expected an object");
    if (auto v = it->find("csv"); v != it->end()) c.emit.csv = bool_at(*v, "/emit/csv");
    if (auto v = it->find("json"); v != it->end()) c.emit.json = bool_at(*v, "/emit/json");
  }
  return c;
}

// ---- runner ------------------------------------------------------------------

nlohmann::json ExperimentReport::to_json() const {
  json emitted_paths = json::array();
  for (const auto& p : emitted) emitted_paths.push_back(p.filename().string());
  return json{{"experiment", id},
              {"env", env},
              {"env_seed", env_seed},
              {"n_grid", n_grid},
              {"metrics", metrics},
              {"emitted", emitted_paths}};
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "n";
  for (const auto& [name, values] : metrics) os << ',' << name;
  os << '\n';
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    os << n_grid[i];
    for (const auto& [name, values] : metrics) os << ',' << values[i];
    os << '\n';
  }
  return os.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

void check_mass(const Pmf& pmf) {
  const double deviation = std::fabs(pmf.total() + pmf.trimmed_mass - 1.0);
  if (deviation > kMassTolerance)
    throw NumericQualityError("pmf mass deviates from 1 by " + std::to_string(deviation) +
                              " at n = " + std::to_string(pmf.time));
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir) {
  if (config.n_grid.empty()) throw ConfigError("/n_grid", "expected a non-empty array");
  const std::size_t top = config.n_grid.back();
  const bool pmf_based = config.kind != ExperimentKind::Lln && config.kind != ExperimentKind::Hitting;
  if (pmf_based && top > kMaxPmfTime)
    throw CapExceeded("n = " + std::to_string(top) + " exceeds the pmf cap " +
                      std::to_string(kMaxPmfTime));
  if (config.kind == ExperimentKind::Hitting && top > kMaxPmfTime)
    throw CapExceeded("hitting site " + std::to_string(top) + " exceeds the cap " +
                      std::to_string(kMaxPmfTime));
  if (config.engine == Engine::Exact && top > kExactEngineMaxN)
    throw CapExceeded("exact engine is limited to n <= " + std::to_string(kExactEngineMaxN));
  if (config.kind == ExperimentKind::Lln && config.seeds > kMaxSamples)
    throw CapExceeded("sample count exceeds " + std::to_string(kMaxSamples));

  LimitParams params{};
  if (config.params) {
    params = *config.params;
  } else {
    try {
      params = limit_params(config.env);
    } catch (const UnsupportedError& e) {
      throw ConfigError("/params", e.what());
    }
  }

  const std::size_t needed = config.kind == ExperimentKind::Hitting ? top : top + 1;
  const std::size_t length = config.env_length.value_or(needed);
  if (length < needed)
    throw ConfigError("/env/length", "environment length " + std::to_string(length) +
                                         " is shorter than the required " + std::to_string(needed));
  const Environment env = generate(config.env, length, config.env_seed);

  ExperimentReport report;
  report.id = to_string(config.kind);
  report.env = describe(config.env);
  report.env_seed = config.env_seed;
  report.n_grid = config.n_grid;

  std::vector<std::pair<std::string, std::string>> datasets;
  for (std::size_t n : config.n_grid) {
    const auto started = std::chrono::steady_clock::now();
    switch (config.kind) {
      case ExperimentKind::Llt: {
        const Pmf pmf = walk_pmf(env, n, config.engine);
        check_mass(pmf);
        const LltError e = llt_error(pmf, llt_prediction(env, params, n));
        report.metrics["llt_error"].push_back(e.value);
        report.metrics["argmax_site"].push_back(static_cast<double>(e.argmax));
        report.metrics["mass_deviation"].push_back(std::fabs(pmf.total() - 1.0));
        break;
      }
      case ExperimentKind::Clt: {
        const Pmf pmf = walk_pmf(env, n, config.engine);
        check_mass(pmf);
        const double center = static_cast<double>(centering(env, n));
        const double scale = std::sqrt(params.sigma_tilde2 * static_cast<double>(n));
        report.metrics["ks"].push_back(ks_distance(pmf, center, scale));
        break;
      }
      case ExperimentKind::Lln:
        report.metrics["max_deviation"].push_back(
            lln_check(env, params, n, config.seeds, config.sample_seed));
        break;
      case ExperimentKind::Hitting:
        report.metrics["hitting_llt_error"].push_back(hitting_llt_error(env, n));
        break;
      case ExperimentKind::Figure2: {
        const Figure2Data data = figure2(env, params, n);
        report.metrics["sup_error_modulated"].push_back(data.sup_error_modulated());
        report.metrics["sup_error_gaussian"].push_back(data.sup_error_gaussian());
        datasets.emplace_back("figure2_n" + std::to_string(n) + ".csv", data.to_csv());
        break;
      }
    }
    report.wall_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
  }

  if (!out_dir.empty() && (config.emit.csv || config.emit.json)) {
    std::filesystem::create_directories(out_dir);
    if (config.emit.csv) {
      report.emitted.push_back(out_dir / (report.id + ".csv"));
      write_file(report.emitted.back(), report.to_csv());
      for (const auto& [name, content] : datasets) {
        report.emitted.push_back(out_dir / name);
        write_file(report.emitted.back(), content);
      }
    }
    if (config.emit.json) {
      report.emitted.push_back(out_dir / (report.id + ".json"));
      write_file(report.emitted.back(), report.to_json().dump(2) + "\n");
    }
  }
  return report;
}

}  // namespace chaowalk
