#include <cmath>
#include <random>

#include "cclab/geodesy.hpp"
#include "support.hpp"

using namespace cclab;

namespace {

const Frame& h1() {
  static const Frame f = builtin_frame("heisenberg1");
  return f;
}

}  // namespace

TEST_CASE("heisenberg gauges") {
  CHECK(gauge_heis(vec({1, 0, 0})) == doctest::Approx(1.0));
  CHECK(gauge_heis(vec({0, 0, 3})) == doctest::Approx(std::sqrt(3.0)));
  CHECK(gauge_heis_eps(vec({0, 0, 4}), 1.0) == doctest::Approx(2.0));
  // both branches of min(|x3|, x3^2 / eps^2) agree at |x3| = eps^2
  CHECK(gauge_heis_eps(vec({0, 0, 0.25}), 0.5) == doctest::Approx(0.5));
  // d_G(x, x) = 0 and left invariance
  const Vec x = vec({0.3, -0.2, 0.5}), y = vec({-0.1, 0.4, 0.2});
  CHECK(heis_gauge_distance(x, x, 0.3) == 0.0);
  CHECK(heis_gauge_distance(x, vec({0, 0, 0}), 0.0) == doctest::Approx(gauge_heis_eps(x, 0.0)));
  CHECK(heis_left_difference(y, x).norm() > 0.0);
}

TEST_CASE("exponential coordinates on heisenberg") {
  const ExpCoords a = exp_coords(h1(), Vec::Zero(3), vec({0.4, -0.7, 0.0}));
  CHECK(a.coords[0] == doctest::Approx(0.4));
  CHECK(a.coords[1] == doctest::Approx(-0.7));
  CHECK(a.coords[2] == doctest::Approx(0.0).epsilon(1e-10));

  const Vec x0 = vec({0.2, 0.1, -0.3});
  const ExpCoords id = exp_coords(h1(), x0, x0);
  CHECK(id.coords.norm() == 0.0);
  CHECK(id.residual == 0.0);

  const ExpCoords v = exp_coords(h1(), Vec::Zero(3), vec({0, 0, 0.8}));
  CHECK(v.coords[0] == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(v.coords[1] == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(v.coords[2] == doctest::Approx(0.4));

  // exp_map inverts exp_coords
  const Vec target = vec({0.3, -0.2, 0.6});
  const ExpCoords c = exp_coords(h1(), x0, target);
  CHECK((exp_map(h1(), c.basis, x0, c.coords) - target).norm() < 1e-8);
}

TEST_CASE("equiregular quasi-norm and box balls") {
  for (double eps : {0.0, 0.2, 1.0})
    CHECK(quasi_norm_equiregular(h1(), Vec::Zero(3), vec({1, 0, 0}), eps) == doctest::Approx(1.0));
  CHECK(quasi_norm_equiregular(h1(), Vec::Zero(3), vec({0, 0, 1}), 0.0) == doctest::Approx(std::sqrt(0.5)));
  CHECK_FALSE(box_ball_membership(h1(), Vec::Zero(3), vec({0, 0, 1}), 0.5, 0.0));
  CHECK(box_ball_membership(h1(), Vec::Zero(3), vec({0, 0, 1}), 0.8, 0.0));
  const Vec x0 = vec({0.1, 0.2, 0.3});
  CHECK(box_ball_membership(h1(), x0, x0, 1e-6, 0.5));
}

TEST_CASE("control shooting") {
  const EpsFrame e0(h1(), 0.0);
  const DistanceResult a = dist_control(e0, Vec::Zero(3), vec({1, 0, 0}), 8);
  CHECK(a.value == doctest::Approx(1.0).epsilon(0.01));
  CHECK(a.converged);

  const EpsFrame e2(builtin_frame("euclidean2"), 0.0);
  const Vec x = vec({0.3, -0.5}), y = vec({-0.4, 0.6});
  CHECK(std::abs(dist_control(e2, x, y, 8).value - (x - y).norm()) <= 1e-3);

  // planar projection lower bound
  std::mt19937_64 g(9);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (int s = 0; s < 5; ++s) {
    const Vec p = vec({u(g), u(g), u(g)}), q = vec({u(g), u(g), u(g)});
    const double d = dist_control(e0, p, q, 8).value;
    CHECK(d >= 0.99 * (p.head(2) - q.head(2)).norm());
  }
}

TEST_CASE("lattice distances") {
  const Lattice lat = Lattice::cube(3, -1.3, 1.3, 27);
  const EpsFrame e0(h1(), 0.0);
  const DistanceField df = distance_field(e0, lat, Vec::Zero(3));
  CHECK(df.value_at(vec({1, 0, 0})) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(df.value_at(Vec::Zero(3)) == 0.0);
  const DistanceResult same = dist_lattice(e0, lat, vec({0.2, 0.1, 0}), vec({0.2, 0.1, 0}));
  CHECK(same.value == 0.0);

  // vertical point: the lattice and the shooting solver bound the same distance
  const double dl = df.value_at(vec({0, 0, 1}));
  const double dc = dist_control(e0, Vec::Zero(3), vec({0, 0, 1}), 8).value;
  CHECK(std::abs(dl - dc) <= 0.1 * dc);

  CHECK_ERROR_KIND(dist_lattice(e0, lat, Vec::Zero(3), vec({2, 0, 0})), OutOfDomain);
}

TEST_CASE("lattice distance invariants") {
  const Lattice lat = Lattice::cube(3, -1.2, 1.2, 25);
  const double h = lat.h(0);
  const Vec a = vec({-0.3, 0.2, 0.1}), b = vec({0.25, -0.1, -0.2});
  std::vector<Vec> targets;
  std::mt19937_64 g(21);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int s = 0; s < 30; ++s) targets.push_back(vec({u(g), u(g), u(g)}));

  std::vector<double> prev;
  double prev_edge = 0.0;
  for (double eps : {0.0, 0.3, 1.0}) {
    const EpsFrame ef(h1(), eps);
    const DistanceField fa = distance_field(ef, lat, a);
    const DistanceField fb = distance_field(ef, lat, b);
    const double slack = 2 * std::max(fa.max_edge_cost(), fb.max_edge_cost());
    CHECK(std::abs(fa.value_at(b) - fb.value_at(a)) <= slack);
    std::vector<double> cur;
    for (const Vec& z : targets) {
      CHECK(fa.value_at(z) <= fa.value_at(b) + fb.value_at(z) + 3 * h + slack);
      cur.push_back(fa.value_at(z));
    }
    // d_eps decreases in eps
    for (std::size_t k = 0; k < prev.size(); ++k) CHECK(cur[k] <= prev[k] + 2 * std::max(prev_edge, slack / 2));
    prev = cur;
    prev_edge = fa.max_edge_cost();
  }
}

TEST_CASE("euclidean lattice distances") {
  const EpsFrame ef(builtin_frame("euclidean2"), 0.0);
  const Lattice lat = Lattice::cube(2, -1, 1, 41);
  const DistanceField df = distance_field(ef, lat, Vec::Zero(2));
  double worst = 0.0;
  for (std::size_t z = 0; z < lat.size(); ++z) {
    const Vec x = lat.point(z);
    if (x.norm() < 0.9) worst = std::max(worst, std::abs(df.value_at(x) - x.norm()));
  }
  CHECK(worst <= 2 * lat.h(0));
}

TEST_CASE("gauge proxy picks the frame's surrogate") {
  const EpsFrame e(h1(), 0.2);
  const Vec x = vec({0.1, 0.2, 0.3}), y = vec({-0.2, 0.1, 0.0});
  CHECK(dist_gauge_proxy(e, x, y).value == doctest::Approx(heis_gauge_distance(x, y, 0.2)));
  const EpsFrame e3(builtin_frame("euclidean3"), 0.0);
  CHECK(dist_gauge_proxy(e3, x, y).value == doctest::Approx((x - y).norm()));
}
