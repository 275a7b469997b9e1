#include <algorithm>
#include <cmath>
#include <random>

#include "cclab/flows.hpp"
#include "support.hpp"

using namespace cclab;

namespace {

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

ScalarFn bump(const Vec& c, double amp) {
  return [c, amp](const Vec& x) { return amp * std::exp(-4.0 * (x - c).squaredNorm()); };
}

}  // namespace

TEST_CASE("constant data is stationary") {
  const EpsFrame ef(builtin_frame("heisenberg1"), 0.3);
  const Lattice lat = Lattice::cube(3, -1, 1, 11);
  for (FlowKind kind : {FlowKind::MeanCurvature, FlowKind::TotalVariation}) {
    const FlowState s0 = make_flow_state(lat, 0.3, kind, [](const Vec&) { return 1.7; });
    const FlowRun r = run_flow(ef, s0, 0.05);
    CHECK(sup_diff(r.final.u, s0.u) == 0.0);
  }
}

TEST_CASE("affine data is stationary for euclidean mean curvature flow") {
  const EpsFrame ef(builtin_frame("euclidean2"), 0.0);
  const Lattice lat = Lattice::cube(2, -1, 1, 21);
  const FlowState s0 =
      make_flow_state(lat, 0.0, FlowKind::MeanCurvature, [](const Vec& x) { return 0.3 * x[0] - 0.8 * x[1] + 0.1; });
  const FlowRun r = run_flow(ef, s0, 0.05);
  CHECK(sup_diff(r.final.u, s0.u) <= 1e-14);
}

TEST_CASE("maximum principle and boundary exactness") {
  const Frame f = builtin_frame("heisenberg1");
  const Lattice lat = Lattice::cube(3, -1, 1, 13);
  for (double eps : {1.0, 0.1}) {
    const EpsFrame ef(f, eps);
    for (FlowKind kind : {FlowKind::MeanCurvature, FlowKind::TotalVariation}) {
      FlowState s = make_flow_state(lat, eps, kind, bump(vec({0.2, -0.1, 0.0}), 1.0));
      const double hi = *std::max_element(s.u.begin(), s.u.end());
      const double lo = *std::min_element(s.u.begin(), s.u.end());
      const double dt = 0.9 * flow_stability_bound(ef, lat);
      for (int k = 0; k < 30; ++k) {
        s = flow_step(ef, s, dt);
        for (std::size_t z = 0; z < lat.size(); ++z) {
          CHECK(s.u[z] <= hi);
          CHECK(s.u[z] >= lo);
          if (s.dirichlet[z]) CHECK(s.u[z] == s.boundary[z]);
        }
      }
    }
  }
}

TEST_CASE("discrete comparison principle") {
  const EpsFrame ef(builtin_frame("heisenberg1"), 0.5);
  const Lattice lat = Lattice::cube(3, -1, 1, 11);
  const double dt = 0.9 * flow_stability_bound(ef, lat);
  std::mt19937_64 g(2024);
  std::uniform_real_distribution<double> u(-0.5, 0.5), a(0.1, 1.0);
  for (int pair = 0; pair < 5; ++pair) {
    const Vec c = vec({u(g), u(g), u(g)});
    const double amp = a(g), lift = a(g) * 0.2;
    const ScalarFn low = bump(c, amp);
    const ScalarFn high = [low, lift](const Vec& x) { return low(x) + lift * (1.0 + x[0] * x[0]); };
    for (FlowKind kind : {FlowKind::MeanCurvature, FlowKind::TotalVariation}) {
      FlowState s = make_flow_state(lat, 0.5, kind, low);
      FlowState v = make_flow_state(lat, 0.5, kind, high);
      for (int k = 0; k < 20; ++k) {
        s = flow_step(ef, s, dt);
        v = flow_step(ef, v, dt);
        bool ordered = true;
        for (std::size_t z = 0; z < lat.size(); ++z) ordered = ordered && s.u[z] <= v.u[z];
        CHECK(ordered);
      }
    }
  }
}

TEST_CASE("step size above the stability bound") {
  const EpsFrame ef(builtin_frame("euclidean2"), 0.0);
  const Lattice lat = Lattice::cube(2, -1, 1, 11);
  const FlowState s = make_flow_state(lat, 0.0, FlowKind::MeanCurvature, bump(Vec::Zero(2), 1.0));
  CHECK_ERROR_KIND(flow_step(ef, s, 2.0 * flow_stability_bound(ef, lat)), StabilityError);
}

TEST_CASE("one-dimensional total variation flow relaxes to the affine interpolant") {
  const EpsFrame ef(builtin_frame("euclidean1"), 0.0);
  const Lattice lat = Lattice::cube(1, 0, 1, 32);
  FlowState s = make_flow_state(lat, 0.0, FlowKind::TotalVariation, [](const Vec& x) { return x[0] * x[0]; });
  std::vector<double> affine(lat.size());
  for (std::size_t z = 0; z < lat.size(); ++z) affine[z] = lat.coord(z, 0);
  const double dt = 0.9 * flow_stability_bound(ef, lat);
  double prev = sup_diff(s.u, affine);
  const double first = prev;
  for (int k = 0; k < 2000; ++k) {
    s = flow_step(ef, s, dt);
    const double d = sup_diff(s.u, affine);
    CHECK(d <= prev + 1e-15);
    prev = d;
  }
  CHECK(prev < 0.05 * first);
}

TEST_CASE("energy and gradient diagnostics") {
  const EpsFrame ef(builtin_frame("heisenberg1"), 0.2);
  const Lattice lat = Lattice::cube(3, -1, 1, 13);
  const ScalarFn phi = [](const Vec& x) { return x[0] * x[0] + 0.5 * std::sin(2 * x[1]) * x[2]; };

  const FlowRun tv = run_flow(ef, make_flow_state(lat, 0.2, FlowKind::TotalVariation, phi, true), 0.05);
  for (std::size_t k = 1; k < tv.history.size(); ++k) CHECK(tv.history[k].energy <= tv.history[k - 1].energy + 1e-8);

  const FlowRun mcf = run_flow(ef, make_flow_state(lat, 0.2, FlowKind::MeanCurvature, phi, true), 0.05);
  const double g0 = mcf.history.front().sup_grad1;
  double parabolic = g0;
  for (const FlowDiagnostics& d : mcf.history) parabolic = std::max(parabolic, d.sup_grad1_edge + d.sup_dudt);
  for (const FlowDiagnostics& d : mcf.history) CHECK(d.sup_grad1 <= parabolic + 0.05 * g0);
}

TEST_CASE("eps convergence study of constant data") {
  const Lattice lat = Lattice::cube(3, -1, 1, 9);
  const ConvergenceStudy st = eps_convergence_study(builtin_frame("heisenberg1"), lat, FlowKind::MeanCurvature,
                                                    [](const Vec&) { return 2.0; }, {1.0, 0.5, 0.25}, 0.02);
  REQUIRE(st.gaps.size() == 2);
  CHECK(st.gaps[0] == 0.0);
  CHECK(st.gaps[1] == 0.0);
  CHECK(st.monotone);
}

TEST_CASE("flow kind names") {
  CHECK(parse_flow_kind("tv") == FlowKind::TotalVariation);
  CHECK(parse_flow_kind("mcf") == FlowKind::MeanCurvature);
  CHECK_ERROR_KIND(parse_flow_kind("heat"), InvalidParameter);
}
