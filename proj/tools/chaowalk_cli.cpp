// Command-line front end: environment generation and diagnostics, walk laws
// and samples, map pushforwards, centering, and the analysis experiments.
//
// Exit codes: 0 success, 2 config error, 3 resource-cap refusal,
// 4 numeric-quality failure, 1 anything else.

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "chaowalk/analysis.hpp"
#include "chaowalk/chaosmap.hpp"
#include "chaowalk/env.hpp"
#include "chaowalk/error.hpp"
#include "chaowalk/limits.hpp"
#include "chaowalk/walk.hpp"

namespace fs = std::filesystem;
using namespace chaowalk;

namespace {

struct Globals {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string engine = "float";
};

struct EnvArgs {
  std::string env = "markov:1/4,3/4,0.8";
  std::optional<std::size_t> length;
};

void add_env_options(CLI::App* cmd, EnvArgs& args) {
  cmd->add_option("--env", args.env,
                  "constant:P | markov:A,B,STAY | sinusoid:C,D | iid:V1,..;P1,.. | table:PATH")
      ->capture_default_str();
  cmd->add_option("--length", args.length, "environment length (default: what the command needs)");
}

Engine parse_engine(const std::string& name) {
  if (name == "float") return Engine::Float;
  if (name == "exact") return Engine::Exact;
  throw ConfigError("--engine", "expected float or exact");
}

// Writes to <out>/<name> when --out is set, stdout otherwise.
void emit(const Globals& g, const std::string& name, const std::string& content) {
  if (g.out.empty()) {
    std::cout << content;
    return;
  }
  fs::create_directories(g.out);
  std::ofstream file(fs::path(g.out) / name, std::ios::binary);
  if (!file) throw Error("cannot write " + (fs::path(g.out) / name).string());
  file << content;
  std::cerr << "wrote " << (fs::path(g.out) / name).string() << '\n';
}

Environment make_env(const Globals& g, const EnvArgs& args, std::size_t needed) {
  return generate(parse_env_spec(args.env), args.length.value_or(needed), g.seed.value_or(0));
}

nlohmann::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const CapExceeded*>(&e)) return 3;
  if (dynamic_cast<const NumericQualityError*>(&e)) return 4;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ValidationError*>(&e) ||
      dynamic_cast<const ParseError*>(&e) || dynamic_cast<const BoundsError*>(&e) ||
      dynamic_cast<const UnsupportedError*>(&e) || dynamic_cast<const GenerationError*>(&e))
    return 2;
  return 1;
}

std::string histogram_csv(const std::string& header, const std::vector<std::size_t>& values) {
  std::map<std::size_t, std::size_t> counts;
  for (auto v : values) ++counts[v];
  std::ostringstream os;
  os << header << '\n';
  for (const auto& [k, c] : counts) os << k << ',' << c << '\n';
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chaowalk: chaotic walk in a frozen environment"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "experiment config (JSON)");
  app.add_option("--out", g.out, "output directory (default: stdout)");
  app.add_option("--seed", g.seed, "seed for environment generation and sampling");
  app.add_option("--engine", g.engine, "pmf engine: float or exact")->capture_default_str();

  std::function<void()> action;

  // env
  auto* env_cmd = app.add_subcommand("env", "environment tools")->require_subcommand(1);
  EnvArgs gen_args;
  auto* gen = env_cmd->add_subcommand("gen", "print omega_0 .. omega_{K-1}, one per line");
  add_env_options(gen, gen_args);
  gen->callback([&] {
    action = [&] {
      const auto env = make_env(g, gen_args, gen_args.length.value_or(1000));
      std::ostringstream os;
      os << "# " << describe(env.spec()) << " seed=" << env.seed() << '\n';
      char buf[32];
      for (std::size_t k = 0; k < env.size(); ++k) {
        const auto res = std::to_chars(buf, buf + sizeof buf, env[k]);
        os << std::string_view(buf, res.ptr - buf) << '\n';
      }
      emit(g, "env.txt", os.str());
    };
  });

  EnvArgs diag_args;
  std::vector<std::size_t> k_grid;
  std::vector<double> u_values{1.0};
  std::optional<double> mu_opt;
  std::optional<double> sigma2_opt;
  double lambda = 0.0;
  auto* diag = env_cmd->add_subcommand("diag", "regularity-condition residual trajectories (JSON)");
  add_env_options(diag, diag_args);
  diag->add_option("--k-grid", k_grid, "evaluation sites")->required();
  diag->add_option("--u", u_values, "moving-average window multipliers");
  diag->add_option("--mu", mu_opt);
  diag->add_option("--sigma2", sigma2_opt);
  diag->add_option("--lambda", lambda);
  diag->callback([&] {
    action = [&] {
      const auto spec = parse_env_spec(diag_args.env);
      const LimitParams params = (mu_opt && sigma2_opt)
                                     ? make_limit_params(*mu_opt, *sigma2_opt, lambda)
                                     : limit_params(spec);
      std::sort(k_grid.begin(), k_grid.end());
      const double u_max = *std::max_element(u_values.begin(), u_values.end());
      const std::size_t need =
          k_grid.back() + static_cast<std::size_t>(u_max * window_scale(k_grid.back())) + 1;
      const auto env = make_env(g, diag_args, need);
      emit(g, "diagnostics.json", diagnostics(env, params, k_grid, u_values).to_json() + "\n");
    };
  });

  // walk
  auto* walk_cmd = app.add_subcommand("walk", "random walk laws and samples")->require_subcommand(1);
  EnvArgs pmf_args;
  std::size_t pmf_n = 0;
  auto* pmf = walk_cmd->add_subcommand("pmf", "law of X_n as CSV (site,mass)");
  add_env_options(pmf, pmf_args);
  pmf->add_option("--n", pmf_n, "time")->required();
  pmf->callback([&] {
    action = [&] {
      if (pmf_n > kMaxPmfTime) throw CapExceeded("n exceeds the pmf cap");
      const auto env = make_env(g, pmf_args, pmf_n + 1);
      const Pmf p = walk_pmf(env, pmf_n, parse_engine(g.engine));
      if (std::fabs(p.total() + p.trimmed_mass - 1.0) > kMassTolerance)
        throw NumericQualityError("pmf mass deviates from 1");
      emit(g, "pmf.csv", p.to_csv());
    };
  });

  EnvArgs sample_args;
  std::size_t sample_n = 0;
  std::size_t sample_count = 1000;
  auto* sample = walk_cmd->add_subcommand("sample", "Monte Carlo draws of X_n (CSV)");
  add_env_options(sample, sample_args);
  sample->add_option("--n", sample_n, "time")->required();
  sample->add_option("--count", sample_count)->capture_default_str();
  sample->callback([&] {
    action = [&] {
      if (sample_count > kMaxSamples) throw CapExceeded("sample count exceeds cap");
      const auto env = make_env(g, sample_args, sample_n + 1);
      std::ostringstream os;
      os << "sample,final_position\n";
      std::size_t i = 0;
      for (const auto& s : sample_final(env, sample_n, g.seed.value_or(0), sample_count))
        os << i++ << ',' << s.final_position << '\n';
      emit(g, "samples.csv", os.str());
    };
  });

  // map
  auto* map_cmd = app.add_subcommand("map", "exact piecewise-affine map")->require_subcommand(1);
  EnvArgs push_args;
  std::size_t push_n = 0;
  std::size_t push_cap = kDefaultPushforwardCap;
  auto* push = map_cmd->add_subcommand("push", "exact pushforward of Uniform[0,1) (JSON)");
  add_env_options(push, push_args);
  push->add_option("--n", push_n)->required();
  push->add_option("--cap", push_cap, "override the depth cap")->capture_default_str();
  push->callback([&] {
    action = [&] {
      const auto env = make_env(g, push_args, push_n + 1);
      emit(g, "pushforward.json", pushforward(env, push_n, push_cap).to_json() + "\n");
    };
  });

  EnvArgs msample_args;
  std::size_t msample_n = 0;
  unsigned bits = 40;
  std::size_t msample_count = 1000;
  auto* msample = map_cmd->add_subcommand("sample", "exact orbits from dyadic x_0 (cell histogram CSV)");
  add_env_options(msample, msample_args);
  msample->add_option("--n", msample_n)->required();
  msample->add_option("--bits", bits)->capture_default_str();
  msample->add_option("--count", msample_count)->capture_default_str();
  msample->callback([&] {
    action = [&] {
      const auto env = make_env(g, msample_args, msample_n + 1);
      const auto cells = sample_trajectories(env, msample_n, g.seed.value_or(0), bits, msample_count);
      emit(g, "map_samples.csv", histogram_csv("cell,count", cells));
    };
  });

  // limits
  auto* limits_cmd = app.add_subcommand("limits", "limit-theorem ingredients")->require_subcommand(1);
  EnvArgs center_args;
  std::size_t center_n = 0;
  auto* center = limits_cmd->add_subcommand("center", "centering k_n");
  add_env_options(center, center_args);
  center->add_option("--n", center_n)->required();
  center->callback([&] {
    action = [&] {
      const auto env = make_env(g, center_args, center_n + 1);
      emit(g, "center.txt", std::to_string(centering(env, center_n)) + "\n");
    };
  });

  // analyze
  auto* analyze = app.add_subcommand("analyze", "convergence experiments")->require_subcommand(1);
  struct AnalyzeArgs {
    EnvArgs env;
    std::vector<std::size_t> grid;
    std::size_t seeds = 100;
  };
  std::map<std::string, AnalyzeArgs> analyze_args;
  for (const char* name : {"llt", "clt", "lln", "hitting", "figure2"}) {
    auto& args = analyze_args[name];
    auto* cmd = analyze->add_subcommand(name, std::string("run the ") + name + " experiment");
    add_env_options(cmd, args.env);
    cmd->add_option("--n-grid", args.grid, "time grid (site grid for hitting)");
    cmd->add_option("--seeds", args.seeds, "Monte Carlo samples (lln)")->capture_default_str();
    cmd->callback([&, name = std::string(name)] {
      action = [&, name] {
        auto& a = analyze_args[name];
        ExperimentConfig c;
        bool engine_in_config = false;
        if (!g.config.empty()) {
          nlohmann::json j = load_config(g.config);
          if (j.contains("experiment") && j["experiment"] != name)
            throw ConfigError("/experiment", "config is for " + j["experiment"].dump() +
                                                 ", command is " + name);
          j["experiment"] = name;
          engine_in_config = j.contains("engine");
          c = parse_config(j);
        } else {
          if (a.grid.empty()) throw ConfigError("--n-grid", "required without --config");
          c = parse_config({{"experiment", name},
                            {"env", {{"variant", "constant"}, {"p", "1/2"}}},
                            {"n_grid", a.grid},
                            {"seeds", a.seeds}});
          c.env = parse_env_spec(a.env.env);
          c.env_length = a.env.length;
        }
        if (g.seed) {
          c.env_seed = *g.seed;
          c.sample_seed = *g.seed;
        }
        if (!engine_in_config) c.engine = parse_engine(g.engine);
        const auto report = run_experiment(c, g.out);
        std::cout << report.to_csv();
        for (std::size_t i = 0; i < report.n_grid.size(); ++i)
          std::cerr << "n=" << report.n_grid[i] << " wall=" << report.wall_seconds[i] << "s\n";
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    if (action) action();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}
