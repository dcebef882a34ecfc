#include <doctest.h>

#include <json.hpp>

#include "chaowalk/chaosmap.hpp"
#include "chaowalk/error.hpp"
#include "chaowalk/rng.hpp"
#include "chaowalk/walk.hpp"
#include "chi_square.hpp"

using namespace chaowalk;

namespace {

Environment rational_env(std::vector<Rational> omega) {
  return Environment(std::move(omega), spec::Table{"inline"});
}

}  // namespace

TEST_CASE("apply_map branches") {
  const auto env = rational_env({Rational(1, 4), Rational(1, 2), Rational(1, 3)});
  CHECK(apply_map(ExactPoint(Rational(1, 2)), env).value() == Rational(2, 3));
  CHECK(apply_map(ExactPoint(Rational(4, 5)), env).value() == Rational(6, 5));
  CHECK(apply_map(ExactPoint(Rational(0)), env).value() == 0);
  // The breakpoint 1 - omega belongs to the upper branch.
  CHECK(apply_map(ExactPoint(Rational(3, 4)), env).value() == 1);
  // Cell 1 with omega = 1/2: 1 + 1/4 -> 1 + 1/2; 1 + 3/4 -> 2 + 1/2.
  CHECK(apply_map(ExactPoint(Rational(5, 4)), env).value() == Rational(3, 2));
  CHECK(apply_map(ExactPoint(Rational(7, 4)), env).value() == Rational(5, 2));
  CHECK_THROWS_AS(ExactPoint(Rational(-1, 2)), ValidationError);
  CHECK_THROWS_AS(apply_map(ExactPoint(Rational(7, 2)), env), BoundsError);
}

TEST_CASE("apply_map needs rational entries") {
  const auto env = generate(figure2_sinusoid(), 4, 0);
  CHECK_THROWS_AS(apply_map(ExactPoint(Rational(1, 2)), env), UnsupportedError);
  CHECK_THROWS_AS(pushforward(env, 2), UnsupportedError);
}

TEST_CASE("pushforward small cases") {
  const auto env = rational_env({Rational(1, 4), Rational(1, 3), Rational(1, 2)});
  const auto m0 = pushforward(env, 0);
  REQUIRE(m0.pieces().size() == 1);
  CHECK(m0.pieces()[0].lo == 0);
  CHECK(m0.pieces()[0].hi == 1);
  CHECK(m0.pieces()[0].density == 1);

  const auto m1 = pushforward(env, 1);
  REQUIRE(m1.pieces().size() == 2);
  CHECK(m1.pieces()[0].hi == 1);
  CHECK(m1.pieces()[0].density == Rational(3, 4));
  CHECK(m1.pieces()[1].lo == 1);
  CHECK(m1.pieces()[1].hi == 2);
  CHECK(m1.pieces()[1].density == Rational(1, 4));

  const auto law = cell_law(m1);
  CHECK(law.masses == std::vector<Rational>{Rational(3, 4), Rational(1, 4)});
  CHECK(law.all_uniform());

  const auto j = nlohmann::json::parse(m1.to_json());
  CHECK(j["pieces"][0]["density"] == "3/4");
  CHECK(j["pieces"][1]["lo"] == "1");
}

TEST_CASE("two-step cell masses match the walk for any rational second label") {
  for (auto q : {Rational(1, 3), Rational(2, 7), Rational(5, 6), Rational(1, 1000)}) {
    const auto env = rational_env({Rational(1, 4), q, Rational(1, 2)});
    const auto law = cell_law(pushforward(env, 2));
    CHECK(law.masses[0] == Rational(9, 16));
    CHECK(law.masses == walk_pmf_exact(env, 2).masses);
  }
}

TEST_CASE("pushforward equals the walk law and keeps uniform fractional parts") {
  const auto env = generate(figure2_markov(), 20, 2026);
  for (std::size_t n = 0; n <= 12; ++n) {
    const auto m = pushforward(env, n);
    CHECK(m.total_mass() == 1);
    const auto law = cell_law(m);
    CHECK(law.masses == walk_pmf_exact(env, n).masses);
    CHECK(law.all_uniform());
    Rational top = 1;
    for (std::size_t j = 0; j < n; ++j) top *= env.exact()[j];
    CHECK(law.masses.back() == top);
  }
}

TEST_CASE("conditioning on a cell and stepping once splits 1-w / w") {
  const auto env = generate(figure2_markov(), 12, 4);
  const auto m = pushforward(env, 6);
  const auto law = cell_law(m);
  for (std::size_t k = 0; k < law.masses.size(); ++k) {
    std::vector<Piece> conditioned;
    for (const auto& p : m.pieces())
      if (p.lo >= k && p.hi <= k + 1) conditioned.push_back(Piece{p.lo, p.hi, p.density / law.masses[k]});
    const auto next = cell_law(push_once(IntervalMeasure(conditioned), env));
    REQUIRE(next.masses.size() == k + 2);
    for (std::size_t j = 0; j < k; ++j) CHECK(next.masses[j] == 0);
    CHECK(next.masses[k] == 1 - env.exact()[k]);
    CHECK(next.masses[k + 1] == env.exact()[k]);
  }
}

TEST_CASE("push_once handles pieces not aligned with cells") {
  const auto env = rational_env({Rational(1, 4), Rational(1, 2)});
  // Uniform on [0, 1/2): entirely in the lower branch, stretched by 4/3.
  const IntervalMeasure half({Piece{Rational(0), Rational(1, 2), Rational(2)}});
  const auto img = push_once(half, env);
  REQUIRE(img.pieces().size() == 1);
  CHECK(img.pieces()[0].hi == Rational(2, 3));
  CHECK(img.pieces()[0].density == Rational(3, 2));
  CHECK_FALSE(cell_law(img).all_uniform());

  // Two pieces with different densities straddling the breakpoint 3/4.
  const IntervalMeasure two({Piece{Rational(0), Rational(1, 2), Rational(1, 2)},
                             Piece{Rational(1, 2), Rational(1), Rational(3, 2)}});
  const auto out = push_once(two, env);
  CHECK(out.total_mass() == 1);
  const auto law = cell_law(out);
  // Cell 0 receives [0, 3/4): 1/4 + (1/4)(3/2) = 5/8; cell 1 gets the rest.
  CHECK(law.masses[0] == Rational(5, 8));
  CHECK(law.masses[1] == Rational(3, 8));
  CHECK_FALSE(law.uniform[0]);
  CHECK(law.uniform[1]);
}

TEST_CASE("interval measure invariants") {
  CHECK_THROWS_AS(IntervalMeasure({Piece{Rational(0), Rational(1), Rational(1, 2)}}), ValidationError);
  CHECK_THROWS_AS(IntervalMeasure({Piece{Rational(1, 2), Rational(3, 2), Rational(1)}}),
                  ValidationError);
  CHECK_THROWS_AS(IntervalMeasure({Piece{Rational(1), Rational(1), Rational(1)}}), ValidationError);
}

TEST_CASE("pushforward depth cap") {
  const auto env = generate(figure2_markov(), 40, 1);
  CHECK_THROWS_AS(pushforward(env, 17), CapExceeded);
  CHECK_NOTHROW(pushforward(env, 17, 17));
}

TEST_CASE("one-bit initial data exposes discretisation bias") {
  const auto env = rational_env({Rational(1, 4), Rational(1, 2)});
  CHECK(trajectory_cell(env, 1, 0, 1) == 0);
  CHECK(trajectory_cell(env, 1, 1, 1) == 0);
  for (std::uint64_t seed = 0; seed < 50; ++seed) CHECK(sample_trajectory(env, 1, seed, 1) == 0);
}

TEST_CASE("fast trajectory path agrees with apply_map") {
  const auto env = generate(figure2_markov(), 300, 6);
  StreamRng rng(1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const unsigned bits = 24;
    const mpz_class atom(static_cast<unsigned long>(rng() & ((1u << bits) - 1)));
    ExactPoint x(Rational(atom, mpz_class(1) << bits));
    for (std::size_t n = 1; n <= 200; ++n) {
      x = apply_map(x, env);
      if (n % 25 == 0) CHECK(trajectory_cell(env, n, atom, bits) == x.cell());
    }
  }
}

TEST_CASE("enumerating every 20-bit atom reproduces the continuous pushforward") {
  // Each step with labels in {1/4, 3/4} consumes two bits of the dyadic grid,
  // so for n <= 10 the atoms split exactly like the uniform law.
  const auto env = generate(figure2_markov(), 16, 31);
  const unsigned bits = 20;
  const std::size_t n = 10;
  std::vector<unsigned long> counts(n + 1, 0);
  for (unsigned long j = 0; j < (1ul << bits); ++j) ++counts[trajectory_cell(env, n, mpz_class(j), bits)];
  const auto law = cell_law(pushforward(env, n));
  for (std::size_t k = 0; k <= n; ++k) {
    Rational frequency(mpz_class(counts[k]), mpz_class(1) << bits);
    frequency.canonicalize();
    CHECK(frequency == law.masses[k]);
  }
}

TEST_CASE("sampled map trajectories are chi-square consistent with the walk") {
  const std::size_t n = 1024;
  const auto env = generate(figure2_markov(), n + 1, 2026);
  const std::size_t count = 3000;
  const auto cells = sample_trajectories(env, n, 8, 40, count);
  std::vector<std::size_t> counts(n + 1, 0);
  for (auto c : cells) ++counts[c];
  const Pmf pmf = walk_pmf(env, n);
  std::vector<double> masses(n + 1);
  for (std::size_t k = 0; k <= n; ++k) masses[k] = pmf.at(k);
  const auto chi = testing::chi_square(counts, masses, count);
  INFO("chi2 = " << chi.statistic << " dof = " << chi.dof);
  CHECK(chi.p_value > 1e-3);
}
