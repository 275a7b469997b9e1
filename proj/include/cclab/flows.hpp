#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cclab/frames.hpp"
#include "cclab/lattice.hpp"

namespace cclab {

enum class FlowKind { TotalVariation, MeanCurvature };
const char* to_string(FlowKind k);
FlowKind parse_flow_kind(const std::string& s);

/// Graph height on a lattice box. Non-interior nodes are Dirichlet nodes and
/// always carry phi.
struct FlowState {
  Lattice lat;
  std::vector<double> u;
  std::vector<double> boundary;  // phi at every node; used on Dirichlet nodes
  std::vector<char> dirichlet;
  double t = 0.0;
  double eps = 0.0;
  FlowKind kind = FlowKind::MeanCurvature;
};

using ScalarFn = std::function<double(const Vec&)>;

/// u(0) = phi at every node. With extend_from_boundary the interior is
/// instead filled by 200 Jacobi sweeps of the lattice Laplacian.
FlowState make_flow_state(const Lattice& lat, double eps, FlowKind kind, const ScalarFn& phi,
                          bool extend_from_boundary = false);

/// a_ij(xi) = delta_ij - xi_i xi_j / (1 + |xi|^2), divided by W for the TV flow.
Eigen::MatrixXd flow_coefficients(FlowKind kind, const Control& xi);

/// Step bound valid for every state: 1 / max_x 2 sum_ij (Y_i^eps)_j^2 / h_j^2.
double flow_stability_bound(const EpsFrame& ef, const Lattice& lat);

/// One explicit step with coefficients frozen at the current gradient. Each
/// interior node moves to a convex combination of interpolated values along
/// the flows of the columns of a^{1/2}, so the step is monotone.
FlowState flow_step(const EpsFrame& ef, const FlowState& s, double dt);

struct FlowDiagnostics {
  long long step = 0;
  double t = 0.0;
  double sup_u = 0.0;
  double inf_u = 0.0;
  double sup_grad1 = 0.0;       // full Riemannian (eps = 1) gradient, interior nodes
  double sup_grad1_edge = 0.0;  // same, on nodes next to the Dirichlet layer
  double sup_dudt = 0.0;        // max |u(t) - u(t - dt)| / dt
  double energy = 0.0;          // sum of W_eps over interior nodes times cell volume
};

FlowDiagnostics flow_diagnostics(const EpsFrame& ef, const FlowState& s);

struct FlowRun {
  FlowState final;
  std::vector<FlowDiagnostics> history;  // one entry per step, plus t = 0
};

/// dt = 0 picks 0.9 of flow_stability_bound.
FlowRun run_flow(const EpsFrame& ef, const FlowState& initial, double t_end, double dt = 0.0);

struct ConvergenceStudy {
  std::vector<double> eps;
  std::vector<double> gaps;  // sup |u_eps_k - u_eps_{k+1}| on the sub-box
  bool monotone = false;     // gaps non-increasing within the tolerance
  double violation_rate = 0.0;  // probes with gap_{k+1} > 2 gap_k + tol
  double tolerance = 1e-3;
  std::vector<FlowState> states;
};

/// Runs the flow for every eps on a shared lattice and time step, then
/// compares consecutive solutions on the central sub-box (half the width).
ConvergenceStudy eps_convergence_study(const Frame& frame, const Lattice& lat, FlowKind kind, const ScalarFn& phi,
                                       const std::vector<double>& eps_list, double t_probe, double dt = 0.0,
                                       double tolerance = 1e-3);

}  // namespace cclab
