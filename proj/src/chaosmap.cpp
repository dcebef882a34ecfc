#include "chaowalk/chaosmap.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

#include "chaowalk/error.hpp"
#include "chaowalk/rng.hpp"

namespace chaowalk {
namespace {

mpz_class floor_of(const Rational& x) {
  mpz_class f;
  mpz_fdiv_q(f.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
  return f;
}

std::size_t to_index(const mpz_class& z) {
  if (z < 0 || !z.fits_ulong_p()) throw BoundsError("cell index out of range");
  return static_cast<std::size_t>(z.get_ui());
}

}  // namespace

ExactPoint::ExactPoint(Rational x) : x_(std::move(x)) {
  x_.canonicalize();
  if (x_ < 0) throw ValidationError("map points must be non-negative");
}

std::size_t ExactPoint::cell() const { return to_index(floor_of(x_)); }

ExactPoint apply_map(const ExactPoint& x, const Environment& env) {
  const std::size_t k = x.cell();
  env.require_sites(k + 1, "apply_map");
  const Rational& w = env.exact()[k];
  const Rational u = x.value() - k;
  const Rational gap = 1 - w;
  // Half-open branches: u == 1 - w belongs to the upper branch.
  if (u < gap) return ExactPoint(Rational(k) + u / gap);
  return ExactPoint(Rational(k + 1) + (u - gap) / w);
}

IntervalMeasure::IntervalMeasure(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
  Rational mass = 0;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    auto& p = pieces_[i];
    p.lo.canonicalize();
    p.hi.canonicalize();
    p.density.canonicalize();
    if (p.lo < 0) throw ValidationError("measure pieces must lie in [0, inf)");
    if (!(p.lo < p.hi)) throw ValidationError("measure pieces need lo < hi");
    if (p.density < 0) throw ValidationError("measure densities must be non-negative");
    if (floor_of(p.lo) != floor_of(p.hi) && Rational(floor_of(p.lo) + 1) != p.hi)
      throw ValidationError("measure pieces must not straddle an integer");
    if (i > 0 && pieces_[i - 1].hi > p.lo)
      throw ValidationError("measure pieces must be sorted and disjoint");
    mass += p.density * (p.hi - p.lo);
  }
  if (mass != 1) throw ValidationError("measure must have total mass 1, got " + to_string(mass));
}

IntervalMeasure IntervalMeasure::uniform_unit() {
  return IntervalMeasure({Piece{Rational(0), Rational(1), Rational(1)}});
}

Rational IntervalMeasure::total_mass() const {
  Rational mass = 0;
  for (const auto& p : pieces_) mass += p.density * (p.hi - p.lo);
  return mass;
}

std::string IntervalMeasure::to_json() const {
  nlohmann::json pieces = nlohmann::json::array();
  for (const auto& p : pieces_)
    pieces.push_back(
        {{"lo", to_string(p.lo)}, {"hi", to_string(p.hi)}, {"density", to_string(p.density)}});
  return nlohmann::json{{"pieces", pieces}}.dump(2);
}

IntervalMeasure push_once(const IntervalMeasure& m, const Environment& env) {
  const auto omega = env.exact();
  // Sweep events: density jumps at each image endpoint. Overlapping images
  // (different source pieces landing on the same cell) add up.
  std::map<Rational, Rational> jumps;
  auto add_image = [&](const Rational& lo, const Rational& hi, const Rational& density) {
    if (!(lo < hi) || density == 0) return;
    jumps[lo] += density;
    jumps[hi] -= density;
  };
  for (const auto& p : m.pieces()) {
    const mpz_class cell = floor_of(p.lo);
    const std::size_t k = to_index(cell);
    if (k >= omega.size())
      throw BoundsError("push_once needs an environment of length >= " + std::to_string(k + 1));
    const Rational& w = omega[k];
    const Rational gap = 1 - w;
    const Rational base(cell);
    const Rational split = base + gap;
    // Lower branch, slope 1/(1-w): density scales by (1-w).
    if (p.lo < split) {
      const Rational hi = std::min(p.hi, split);
      add_image(base + (p.lo - base) / gap, base + (hi - base) / gap, p.density * gap);
    }
    // Upper branch, slope 1/w: density scales by w.
    if (p.hi > split) {
      const Rational lo = std::max(p.lo, split);
      add_image(base + 1 + (lo - split) / w, base + 1 + (p.hi - split) / w, p.density * w);
    }
  }
  std::vector<Piece> pieces;
  Rational running = 0;
  const Rational* prev = nullptr;
  for (const auto& [x, jump] : jumps) {
    if (prev && running != 0) pieces.push_back(Piece{*prev, x, running});
    running += jump;
    prev = &x;
  }
  return IntervalMeasure(std::move(pieces));
}

IntervalMeasure pushforward(const Environment& env, std::size_t n, std::size_t cap) {
  if (n > cap)
    throw CapExceeded("pushforward depth " + std::to_string(n) + " exceeds cap " +
                      std::to_string(cap) + " (piece count may grow like 2^n)");
  env.require_sites(n + 1, "pushforward");
  env.exact();
  IntervalMeasure m = IntervalMeasure::uniform_unit();
  for (std::size_t t = 0; t < n; ++t) m = push_once(m, env);
  return m;
}

bool CellLaw::all_uniform() const {
  return std::all_of(uniform.begin(), uniform.end(), [](bool b) { return b; });
}

CellLaw cell_law(const IntervalMeasure& m) {
  CellLaw law;
  if (m.pieces().empty()) return law;
  const std::size_t cells = to_index(floor_of(m.pieces().back().lo)) + 1;
  law.masses.assign(cells, Rational(0));
  law.uniform.assign(cells, true);
  // Per cell: covered length and the first density seen.
  std::vector<Rational> covered(cells, Rational(0));
  std::vector<const Rational*> density(cells, nullptr);
  for (const auto& p : m.pieces()) {
    const std::size_t k = to_index(floor_of(p.lo));
    law.masses[k] += p.density * (p.hi - p.lo);
    covered[k] += p.hi - p.lo;
    if (density[k] == nullptr)
      density[k] = &p.density;
    else if (*density[k] != p.density)
      law.uniform[k] = false;
  }
  // A cell with partial coverage has density zero on the gap, so it is only
  // uniform when nothing at all lands there.
  for (std::size_t k = 0; k < cells; ++k)
    if (density[k] != nullptr && covered[k] != 1 && *density[k] != 0) law.uniform[k] = false;
  return law;
}

std::size_t trajectory_cell(const Environment& env, std::size_t n, const mpz_class& atom,
                            unsigned bits) {
  if (bits < 1) throw ValidationError("trajectory precision needs at least one bit");
  env.require_sites(n + 1, "sample_trajectory");
  const auto omega = env.exact();
  // u = num / den is the position inside the current cell; den is left
  // unreduced between periodic gcd passes. With w = p/q:
  //   lower branch  u < (q-p)/q : u' = u q / (q-p)
  //   upper branch             : u' = (u q - (q-p)) / p, cell + 1
  mpz_class den = mpz_class(1) << bits;
  mpz_class num = atom;
  if (num < 0 || num >= den) throw ValidationError("atom index out of range");
  std::size_t cell = 0;
  mpz_class lhs;
  mpz_class rhs;
  for (std::size_t t = 0; t < n; ++t) {
    const Rational& w = omega[cell];
    const mpz_class& p = w.get_num();
    const mpz_class& q = w.get_den();
    const mpz_class gap = q - p;
    lhs = num * q;
    rhs = gap * den;
    if (lhs < rhs) {
      num = lhs;
      den *= gap;
    } else {
      num = lhs - rhs;
      den *= p;
      ++cell;
    }
    if ((t & 31) == 31) {
      mpz_class g;
      mpz_gcd(g.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
      if (g > 1) {
        num /= g;
        den /= g;
      }
    }
  }
  return cell;
}

namespace {

mpz_class draw_atom(StreamRng& rng, unsigned bits) {
  mpz_class atom = 0;
  unsigned remaining = bits;
  while (remaining > 0) {
    const unsigned take = std::min(remaining, 64u);
    std::uint64_t word = rng();
    if (take < 64) word &= (std::uint64_t{1} << take) - 1;
    atom <<= take;
    // mpz_class has no uint64 constructor on every platform; split the word.
    atom += mpz_class(static_cast<unsigned long>(word >> 32)) << 32;
    atom += mpz_class(static_cast<unsigned long>(word & 0xffffffffu));
    remaining -= take;
  }
  return atom;
}

}  // namespace

std::size_t sample_trajectory(const Environment& env, std::size_t n, std::uint64_t seed,
                              unsigned bits) {
  StreamRng rng(seed, streams::kMapSampleBase);
  return trajectory_cell(env, n, draw_atom(rng, bits), bits);
}

std::vector<std::size_t> sample_trajectories(const Environment& env, std::size_t n,
                                             std::uint64_t seed, unsigned bits,
                                             std::size_t count) {
  std::vector<std::size_t> cells(count);
  for (std::size_t i = 0; i < count; ++i) {
    StreamRng rng(seed, streams::kMapSampleBase + i);
    cells[i] = trajectory_cell(env, n, draw_atom(rng, bits), bits);
  }
  return cells;
}

}  // namespace chaowalk
