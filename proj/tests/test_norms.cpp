#include <cmath>
#include <random>

#include "cclab/norms.hpp"
#include "support.hpp"

using namespace cclab;

namespace {

SpaceTimeField sample(const Lattice& lat, const std::vector<double>& times,
                      const std::function<double(const Vec&, double)>& f) {
  SpaceTimeField u{lat, times, {}};
  for (double t : times) {
    std::vector<double> v(lat.size());
    for (std::size_t z = 0; z < lat.size(); ++z) v[z] = f(lat.point(z), t);
    u.values.push_back(std::move(v));
  }
  return u;
}

SpaceTimeField random_field(const Lattice& lat, const std::vector<double>& times, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> n;
  return sample(lat, times, [&](const Vec&, double) { return n(g); });
}

HolderOptions fixed_pairs() {
  HolderOptions o;
  o.pairs = 2000;
  o.seed = 3;
  return o;
}

}  // namespace

TEST_CASE("parabolic distance") {
  const EpsFrame e(builtin_frame("heisenberg1"), 0.4);
  const Vec x = vec({0.1, -0.2, 0.3});
  CHECK(parabolic_dist(e, {x, 0.5}, {x, 0.5}) == 0.0);
  CHECK(parabolic_dist(e, {x, 0.5}, {x, 0.54}) == doctest::Approx(0.2));
  const EpsFrame e2(builtin_frame("euclidean2"), 0.0);
  const Vec a = vec({0.0, 0.0}), b = vec({0.3, 0.4});
  CHECK(parabolic_dist(e2, {a, 0.0}, {b, 0.01}) == doctest::Approx(0.5));
  CHECK(parabolic_dist(e2, {a, 0.0}, {b, 0.49}) == doctest::Approx(0.7));
  CHECK(parabolic_dist(e2, {a, 0.0}, {b, 0.01}, DistanceMethod::LatticeDijkstra) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("holder norm of constants and of x1") {
  const EpsFrame e(builtin_frame("euclidean3"), 0.0);
  const Lattice lat = Lattice::cube(3, -0.5, 0.5, 9);
  const std::vector<double> times{0.0, 0.25};
  const HolderReport c = holder_norm(sample(lat, times, [](const Vec&, double) { return 2.0; }), 0.5, e);
  CHECK(c.seminorm == 0.0);
  CHECK(c.sup_norm == 2.0);

  const SpaceTimeField u = sample(lat, times, [](const Vec& x, double) { return x[0]; });
  HolderOptions all;
  all.exhaustive = true;
  const HolderReport h = holder_norm(u, 0.5, e, all);
  // independent enumeration of every pair
  double oracle = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k)
    for (std::size_t l = 0; l < times.size(); ++l)
      for (std::size_t a = 0; a < lat.size(); ++a)
        for (std::size_t b = 0; b < lat.size(); ++b) {
          const double d = std::max((lat.point(a) - lat.point(b)).norm(), std::sqrt(std::abs(times[k] - times[l])));
          if (d > 0) oracle = std::max(oracle, std::abs(lat.coord(a, 0) - lat.coord(b, 0)) / std::sqrt(d));
        }
  CHECK(h.seminorm == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(oracle == doctest::Approx(1.0));  // attained at the largest separation along x1
  CHECK(h.pairs == (lat.size() * 2) * (lat.size() * 2 - 1) / 2);
  CHECK(holder_norm(u, 0.5, e, fixed_pairs()).seminorm <= h.seminorm);
}

TEST_CASE("holder norm parameter checks") {
  const EpsFrame e(builtin_frame("euclidean2"), 0.0);
  const Lattice lat = Lattice::cube(2, -1, 1, 5);
  const SpaceTimeField u = random_field(lat, {0.0}, 1);
  CHECK_ERROR_KIND(holder_norm(u, 1.0, e), InvalidParameter);
  HolderOptions few;
  few.pairs = 10;
  CHECK_ERROR_KIND(holder_norm(u, 0.5, e, few), InvalidParameter);
}

TEST_CASE("norms are homogeneous and subadditive") {
  const EpsFrame e(builtin_frame("heisenberg1"), 0.3);
  const Lattice lat = Lattice::cube(3, -1, 1, 9);
  const std::vector<double> times{0.0, 0.1};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SpaceTimeField u = random_field(lat, times, seed), v = random_field(lat, times, seed + 100);
    SpaceTimeField cu = u, sum = u;
    const double c = -2.5;
    for (std::size_t k = 0; k < times.size(); ++k)
      for (std::size_t z = 0; z < lat.size(); ++z) {
        cu.values[k][z] = c * u.values[k][z];
        sum.values[k][z] = u.values[k][z] + v.values[k][z];
      }
    const double hu = holder_norm(u, 0.5, e, fixed_pairs()).total();
    const double hv = holder_norm(v, 0.5, e, fixed_pairs()).total();
    CHECK(holder_norm(cu, 0.5, e, fixed_pairs()).total() == doctest::Approx(std::abs(c) * hu).epsilon(1e-12));
    CHECK(holder_norm(sum, 0.5, e, fixed_pairs()).total() <= hu + hv + 1e-12);

    for (double p : {1.0, 2.0, double(INFINITY)}) {
      const double su = sobolev_norm(lat, u.values[0], 2, p, e), sv = sobolev_norm(lat, v.values[0], 2, p, e);
      CHECK(sobolev_norm(lat, cu.values[0], 2, p, e) == doctest::Approx(std::abs(c) * su).epsilon(1e-12));
      CHECK(sobolev_norm(lat, sum.values[0], 2, p, e) <= su + sv + 1e-12 * (su + sv));
    }
  }
}

TEST_CASE("holder seminorm grows with the sample count") {
  const EpsFrame e(builtin_frame("heisenberg1"), 0.3);
  const Lattice lat = Lattice::cube(3, -1, 1, 11);
  const SpaceTimeField u = random_field(lat, {0.0, 0.1, 0.2}, 42);
  double prev = 0.0;
  for (std::size_t n : {1000, 2000, 4000, 8000}) {
    HolderOptions o;
    o.pairs = n;
    o.nearest = false;
    const double s = holder_norm(u, 0.5, e, o).seminorm;
    CHECK(s >= prev);
    prev = s;
  }
}

TEST_CASE("sobolev norm of x1") {
  const EpsFrame e(builtin_frame("heisenberg1"), 0.5);
  const Lattice lat = Lattice::cube(3, -0.5, 0.5, 11);
  std::vector<double> x1(lat.size()), zero(lat.size(), 0.0);
  for (std::size_t z = 0; z < lat.size(); ++z) x1[z] = lat.coord(z, 0);
  CHECK(sobolev_norm(lat, zero, 2, 2.0, e) == 0.0);
  const SobolevReport r = sobolev_terms(lat, x1, 1, 2.0, e);
  REQUIRE(r.words.size() == 4);
  const double volume = static_cast<double>(r.nodes) * lat.cell_volume();
  CHECK(r.words[1] == "1");
  CHECK(r.terms[1] == doctest::Approx(std::sqrt(volume)));
  CHECK(r.terms[2] == doctest::Approx(0.0));
  CHECK(r.terms[3] == doctest::Approx(0.0));
  CHECK(r.total == doctest::Approx(r.terms[0] + r.terms[1]));

  const Lattice tiny = Lattice::cube(3, -0.5, 0.5, 3);
  CHECK_ERROR_KIND(sobolev_norm(tiny, std::vector<double>(tiny.size(), 1.0), 2, 2.0, e), OutOfDomain);
}

TEST_CASE("schauder ratio") {
  SchauderSetup s;
  s.lat = Lattice::cube(3, -1, 1, 15);
  s.times = {0.0, 0.05, 0.1, 0.15, 0.2};
  const Frame h = builtin_frame("heisenberg1");

  const SchauderReport lin = schauder_ratio(EpsFrame(h, 0.5), {}, [](const Vec& x, double) { return x[0]; }, s);
  CHECK(lin.ratio <= 0.1);

  double lo = INFINITY, hi = 0.0;
  for (double eps : {1.0, 0.5, 0.2, 0.05}) {
    const SchauderReport r =
        schauder_ratio(EpsFrame(h, eps), {}, [](const Vec& x, double) { return x[0] * x[0] + x[1] * x[1]; }, s);
    CHECK(std::isfinite(r.ratio));
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
  }
  CHECK(hi <= 3 * lo);

  SchauderSetup small = s;
  small.lat = Lattice::cube(3, -1, 1, 5);
  CHECK_ERROR_KIND(schauder_ratio(EpsFrame(h, 0.5), {}, [](const Vec& x, double) { return x[0]; }, small), OutOfDomain);
  CHECK_ERROR_KIND(schauder_ratio(EpsFrame(h, 0.5), {}, [](const Vec&, double) { return 0.0; }, s),
                   DegenerateDenominator);
}
