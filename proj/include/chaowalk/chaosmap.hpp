#pragma once

// The piecewise-affine map on [0, inf): inside cell [k, k+1) the point moves
// by k + U(x - k), where U sends [0, 1-w) onto [0,1) and [1-w, 1) onto [1,2)
// affinely (w = omega_k). Everything here is exact rational arithmetic; float
// orbits are not offered because the slopes exceed one.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "chaowalk/env.hpp"
#include "chaowalk/rational.hpp"

namespace chaowalk {

inline constexpr std::size_t kDefaultPushforwardCap = 16;

class ExactPoint {
 public:
  explicit ExactPoint(Rational x);
  const Rational& value() const noexcept { return x_; }
  // floor(x)
  std::size_t cell() const;

  friend bool operator==(const ExactPoint&, const ExactPoint&) = default;

 private:
  Rational x_;
};

ExactPoint apply_map(const ExactPoint& x, const Environment& env);

struct Piece {
  Rational lo;
  Rational hi;
  Rational density;
};

// Piecewise-constant density on [0, inf) with total mass one. Pieces are
// sorted, disjoint, and never straddle an integer.
class IntervalMeasure {
 public:
  explicit IntervalMeasure(std::vector<Piece> pieces);

  static IntervalMeasure uniform_unit();

  const std::vector<Piece>& pieces() const noexcept { return pieces_; }
  Rational total_mass() const;

  // {"pieces":[{"lo":"p/q","hi":"p/q","density":"p/q"}, ...]}
  std::string to_json() const;

 private:
  std::vector<Piece> pieces_;
};

// Exact image of a measure under one application of the map.
IntervalMeasure push_once(const IntervalMeasure& m, const Environment& env);

// Image of Uniform[0,1) under n applications. Refuses n > cap.
IntervalMeasure pushforward(const Environment& env, std::size_t n,
                            std::size_t cap = kDefaultPushforwardCap);

struct CellLaw {
  std::vector<Rational> masses;  // mass of [k, k+1)
  std::vector<bool> uniform;     // density constant across the whole cell

  bool all_uniform() const;
};

CellLaw cell_law(const IntervalMeasure& m);

// Draws x_0 = j / 2^bits with j uniform on {0, .., 2^bits - 1}, iterates the
// map exactly n times and returns floor(x_n).
std::size_t sample_trajectory(const Environment& env, std::size_t n, std::uint64_t seed,
                              unsigned bits);

// Same as sample_trajectory for a given starting atom j (x_0 = j / 2^bits).
std::size_t trajectory_cell(const Environment& env, std::size_t n, const mpz_class& atom,
                            unsigned bits);

// `count` draws; draw i uses stream streams::kMapSampleBase + i.
std::vector<std::size_t> sample_trajectories(const Environment& env, std::size_t n,
                                             std::uint64_t seed, unsigned bits,
                                             std::size_t count);

}  // namespace chaowalk
