#include <cmath>

#include "cclab/measure.hpp"
#include "support.hpp"

using namespace cclab;

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

TEST_CASE("lambda determinants") {
  const Frame f = builtin_frame("heisenberg1");
  const Vec x = vec({0.4, -0.9, 0.3});
  CHECK(lambda_det(EpsFrame(f, 1.0), {0, 1, 2}, x) == doctest::Approx(2.0));
  CHECK(lambda_det(EpsFrame(f, 1.0), {0, 1, 3}, x) == doctest::Approx(2.0));
  CHECK(lambda_det(EpsFrame(f, 1.0), {0, 0, 2}, x) == 0.0);
  CHECK(lambda_det(EpsFrame(f, 0.5), {0, 1, 2}, x) == doctest::Approx(1.0));
  CHECK(lambda_det(EpsFrame(f, 0.0), {0, 1, 2}, x) == 0.0);
}

TEST_CASE("NSW polynomial") {
  const Frame h = builtin_frame("heisenberg1");
  const EpsFrame e0(h, 0.0);
  const NswPolynomial p = nsw_polynomial(e0, Vec::Zero(3));
  REQUIRE(p.terms.size() == 1);
  CHECK(p.terms[0].degree == 4);
  CHECK(nsw_volume(e0, Vec::Zero(3), 0.5) == doctest::Approx(0.125));

  for (int n : {1, 2, 3}) {
    const EpsFrame e(builtin_frame("euclidean" + std::to_string(n)), 0.7);
    for (double r : {0.1, 0.5, 2.0}) CHECK(nsw_volume(e, Vec::Zero(n), r) == doctest::Approx(std::pow(r, n)));
  }

  // eps > 0: Riemannian tuple wins for r < eps, the vertical one beyond
  const EpsFrame e(h, 0.5);
  const auto small = best_tuple(e, Vec::Zero(3), 0.05);
  const auto large = best_tuple(e, Vec::Zero(3), 2.0);
  CHECK(small == std::vector<int>{0, 1, 2});
  CHECK(large == std::vector<int>{0, 1, 3});
}

TEST_CASE("euclidean ball volume and doubling") {
  const EpsFrame e(builtin_frame("euclidean3"), 0.0);
  VolumeOptions o;
  o.samples = 200000;
  o.seed = 4;
  o.nodes = 31;
  const VolumeEstimate v = ball_volume_mc(e, Vec::Zero(3), 0.5, o);
  const double exact = 4.0 / 3.0 * kPi * 0.125;
  CHECK(std::abs(v.volume - exact) <= 3 * v.stderr_ + 0.01 * exact);
  CHECK(doubling_ratio(e, Vec::Zero(3), 0.3, o) == doctest::Approx(8.0).epsilon(0.1));
}

TEST_CASE("monte-carlo volume is deterministic and thread independent") {
  const EpsFrame e(builtin_frame("heisenberg1"), 0.3);
  const Lattice lat = Lattice::cube(3, -0.8, 0.8, 21);
  set_num_threads(1);
  const VolumeEstimate a = ball_volume_mc(e, lat, Vec::Zero(3), 0.5, 20000, 17);
  set_num_threads(3);
  const VolumeEstimate b = ball_volume_mc(e, lat, Vec::Zero(3), 0.5, 20000, 17);
  set_num_threads(1);
  CHECK(a.volume == b.volume);
  const VolumeEstimate c = ball_volume_mc(e, lat, Vec::Zero(3), 0.5, 20000, 18);
  CHECK(c.volume != a.volume);
}

TEST_CASE("log-log slope of a power law") {
  std::vector<double> r{0.1, 0.2, 0.4, 0.8}, v;
  for (double x : r) v.push_back(3.0 * std::pow(x, 4));
  const SlopeFit f = loglog_slope(r, v);
  CHECK(f.slope == doctest::Approx(4.0));
  CHECK(f.intercept == doctest::Approx(std::log(3.0)));
  CHECK_ERROR_KIND(loglog_slope({1.0}, {1.0}), InsufficientData);
}

TEST_CASE("poincare ratio") {
  const EpsFrame e(builtin_frame("euclidean2"), 0.0);
  const Lattice lat = Lattice::cube(2, -0.6, 0.6, 61);
  std::vector<TestFunction> tests{{"one", [](const Vec&) { return 1.0; }},
                                  {"x1", [](const Vec& x) { return x[0]; }}};
  const PoincareReport p = poincare_ratio(e, lat, Vec::Zero(2), 0.25, tests);
  CHECK(std::isnan(p.per_function[0]));
  CHECK(p.argmax == "x1");
  CHECK(p.ratio > 0.0);
  CHECK(p.ratio <= 1.0);

  const auto defaults = default_test_functions(2, Vec::Zero(2), 0.25, 1);
  CHECK(defaults.size() >= 6);
  const PoincareReport q = poincare_ratio(e, lat, Vec::Zero(2), 0.25, defaults);
  CHECK(std::isfinite(q.ratio));
  CHECK(q.ratio >= 0.999 * p.ratio);
}
