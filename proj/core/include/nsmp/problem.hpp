#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nsmp/types.hpp"

namespace nsmp {

/// System dynamics f(t, x, u) with optional analytic Jacobians.
struct Dynamics {
  std::function<Vec(double, const Vec&, const Vec&)> value;
  std::function<Mat(double, const Vec&, const Vec&)> jac_x;  // n x n, optional
  std::function<Mat(double, const Vec&, const Vec&)> jac_u;  // n x k, optional
};

/// Endpoint cost l(x_a, x_b), locally Lipschitz.
struct EndpointCost {
  std::function<double(const Vec&, const Vec&)> value;
  std::function<Vec(const Vec&, const Vec&)> grad_a;  // optional
  std::function<Vec(const Vec&, const Vec&)> grad_b;  // optional
};

/// Running cost L(t, x, u).
struct RunningCost {
  std::function<double(double, const Vec&, const Vec&)> value;
  std::function<Vec(double, const Vec&, const Vec&)> grad_x;  // optional
  std::function<Vec(double, const Vec&, const Vec&)> grad_u;  // optional
};

/// Scalar state constraint h(t, x); the path condition is h <= 0.
struct StateConstraint {
  std::function<double(double, const Vec&)> value;
  std::function<Vec(double, const Vec&)> grad_x;  // optional
};

/// One inequality g_j(t, x, u) <= 0 of the mixed-constraint set S(t).
/// When the row is a plain control bound (g = u_c - hi or lo - u_c) the
/// box fields let the solver enforce it by projection.
struct MixedConstraint {
  std::function<double(double, const Vec&, const Vec&)> value;
  std::function<Vec(double, const Vec&, const Vec&)> grad_x;  // optional
  std::function<Vec(double, const Vec&, const Vec&)> grad_u;  // optional
  // Box structure: component index in u, bound value, side.
  bool is_control_bound = false;
  int bound_comp = -1;
  double bound_value = 0.0;
  bool bound_is_upper = true;
  std::string name;
};

enum class EndpointKind { Point, Box, Affine, Free };

/// Endpoint set descriptor for x(a) or x(b).
struct EndpointDescriptor {
  EndpointKind kind = EndpointKind::Free;
  Vec point;            // Point
  Vec lower, upper;     // Box
  Vec offset;           // Affine: {offset + basis * theta}
  Mat basis;            // Affine, full column rank

  static EndpointDescriptor make_point(const Vec& p);
  static EndpointDescriptor make_box(const Vec& lo, const Vec& hi);
  static EndpointDescriptor make_affine(const Vec& offset, const Mat& basis);
  static EndpointDescriptor make_free();

  /// Euclidean distance from y to the described set.
  double distance(const Vec& y) const;
  /// True when y is within tol of the set.
  bool contains(const Vec& y, double tol) const;
};

/// Problem data of (P) (and of (C) when running_cost is present).
struct OCProblem {
  double t0 = 0.0, t1 = 1.0;  // horizon [a, b]
  int n = 1;                  // state dimension
  int k = 1;                  // control dimension

  Dynamics dynamics;
  EndpointCost endpoint_cost;
  std::optional<RunningCost> running_cost;
  StateConstraint state_constraint;
  std::vector<MixedConstraint> mixed_constraints;
  EndpointDescriptor endpoint_a, endpoint_b;
  double tube_radius = 0.5;  // strong-local-minimum radius epsilon

  /// Sampling box for controls (used by the oracle, the Weierstrass
  /// sampler and the audits). When absent it is probed numerically.
  std::optional<Vec> control_lo, control_hi;

  std::string name;

  // Finite-difference fallbacks for missing Jacobians/gradients.
  double fd_step = 1e-7;
  Mat dynamics_jac_x(double t, const Vec& x, const Vec& u) const;
  Mat dynamics_jac_u(double t, const Vec& x, const Vec& u) const;
  Vec state_constraint_grad(double t, const Vec& x) const;
  Vec mixed_grad_x(int j, double t, const Vec& x, const Vec& u) const;
  Vec mixed_grad_u(int j, double t, const Vec& x, const Vec& u) const;
  Vec endpoint_cost_grad_a(const Vec& xa, const Vec& xb) const;
  Vec endpoint_cost_grad_b(const Vec& xa, const Vec& xb) const;
  Vec running_cost_grad_x(double t, const Vec& x, const Vec& u) const;
  Vec running_cost_grad_u(double t, const Vec& x, const Vec& u) const;

  /// Control sampling box; probes feasibility along axes when the box
  /// was not declared. `x` anchors the probe (typically on the tube).
  std::pair<Vec, Vec> control_sampling_box(double t, const Vec& x) const;
};

/// Time grid with states at nodes and piecewise-constant controls.
struct Process {
  Vec grid;                  // N+1 strictly increasing times, grid[0]=a, grid[N]=b
  std::vector<Vec> states;   // N+1
  std::vector<Vec> controls; // N

  int steps() const { return static_cast<int>(controls.size()); }
  double dt(int m) const { return grid[m + 1] - grid[m]; }

  /// Max Euler defect |x_{m+1} - x_m - dt f(t_m, x_m, u_m)| over steps.
  double max_dynamics_defect(const OCProblem& prob) const;
};

struct Defect {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Defect> defects;
  bool ok() const { return defects.empty(); }
};

/// Structural validation: dimensions, horizon order, evaluator presence,
/// boundedness of the control set on the tube. Defects are data, not errors.
ValidationReport validate_problem(const OCProblem& prob);

struct MixedResidual {
  Vec values;      // g_j(t, x, u) for each j
  double max_value;  // max_j g_j; membership in S(t) iff <= 0
};

/// Evaluates every mixed-constraint row at (t, x, u).
MixedResidual mixed_residual(const OCProblem& prob, double t, const Vec& x, const Vec& u);

}  // namespace nsmp
