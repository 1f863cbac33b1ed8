#pragma once

// Shared ad-hoc problems and helpers for the test suites.

#include <cmath>

#include "nsmp/problem.hpp"
#include "nsmp/reference_problems.hpp"

namespace nsmp::testing {

inline MixedConstraint bound_upper(int comp, double hi) {
  MixedConstraint g;
  g.value = [comp, hi](double, const Vec&, const Vec& u) { return u[comp] - hi; };
  g.grad_x = [](double, const Vec& x, const Vec&) { return Vec(Vec::Zero(x.size())); };
  g.grad_u = [comp](double, const Vec&, const Vec& u) {
    Vec v = Vec::Zero(u.size());
    v[comp] = 1.0;
    return v;
  };
  g.is_control_bound = true;
  g.bound_comp = comp;
  g.bound_value = hi;
  g.bound_is_upper = true;
  return g;
}

inline MixedConstraint bound_lower(int comp, double lo) {
  MixedConstraint g;
  g.value = [comp, lo](double, const Vec&, const Vec& u) { return lo - u[comp]; };
  g.grad_x = [](double, const Vec& x, const Vec&) { return Vec(Vec::Zero(x.size())); };
  g.grad_u = [comp](double, const Vec&, const Vec& u) {
    Vec v = Vec::Zero(u.size());
    v[comp] = -1.0;
    return v;
  };
  g.is_control_bound = true;
  g.bound_comp = comp;
  g.bound_value = lo;
  g.bound_is_upper = false;
  return g;
}

/// Planar problem with a curved velocity set {(u, c u^2) : |u| <= 1}; the
/// [C] audit must reject it (the velocity set is a parabola arc).
inline OCProblem parabola_velocity_problem(double curvature) {
  OCProblem p;
  p.name = "parabola";
  p.t0 = 0.0;
  p.t1 = 1.0;
  p.n = 2;
  p.k = 1;
  p.dynamics.value = [curvature](double, const Vec&, const Vec& u) {
    Vec f(2);
    f << u[0], curvature * u[0] * u[0];
    return f;
  };
  p.dynamics.jac_x = [](double, const Vec&, const Vec&) { return Mat(Mat::Zero(2, 2)); };
  p.dynamics.jac_u = [curvature](double, const Vec&, const Vec& u) {
    Mat J(2, 1);
    J << 1.0, 2.0 * curvature * u[0];
    return J;
  };
  p.endpoint_cost.value = [](const Vec&, const Vec& xb) { return xb[0]; };
  p.endpoint_cost.grad_a = [](const Vec&, const Vec&) { return Vec(Vec::Zero(2)); };
  p.endpoint_cost.grad_b = [](const Vec&, const Vec&) {
    Vec g(2);
    g << 1.0, 0.0;
    return g;
  };
  p.state_constraint.value = [](double, const Vec&) { return -1.0; };
  p.state_constraint.grad_x = [](double, const Vec&) { return Vec(Vec::Zero(2)); };
  p.mixed_constraints = {bound_upper(0, 1.0), bound_lower(0, -1.0)};
  p.endpoint_a = EndpointDescriptor::make_point(Vec::Zero(2));
  p.endpoint_b = EndpointDescriptor::make_free();
  p.tube_radius = 0.5;
  p.control_lo = Vec::Constant(1, -1.0);
  p.control_hi = Vec::Constant(1, 1.0);
  return p;
}

inline Process constant_process(const OCProblem& prob, int N, const Vec& x, const Vec& u) {
  Process proc;
  proc.grid.resize(N + 1);
  const double dt = (prob.t1 - prob.t0) / N;
  for (int m = 0; m <= N; ++m) proc.grid[m] = prob.t0 + m * dt;
  proc.states.assign(static_cast<size_t>(N + 1), x);
  proc.controls.assign(static_cast<size_t>(N), u);
  return proc;
}

/// S(t, x) = {u : u <= 1000 x} inside a control box. Along xbar = 0 the
/// feasible controls are [-0.5, 0]; a downward state perturbation empties
/// the set, so x -> S(t, x) is not lower semicontinuous there and the
/// [H2] audit must fail.
inline OCProblem h2_violating_problem() {
  OCProblem p;
  p.name = "h2-violator";
  p.t0 = 0.0;
  p.t1 = 1.0;
  p.n = p.k = 1;
  p.dynamics.value = [](double, const Vec&, const Vec& u) { return u; };
  p.dynamics.jac_x = [](double, const Vec&, const Vec&) { return Mat(Mat::Zero(1, 1)); };
  p.dynamics.jac_u = [](double, const Vec&, const Vec&) { return Mat(Mat::Identity(1, 1)); };
  p.endpoint_cost.value = [](const Vec&, const Vec& xb) { return xb[0] * xb[0]; };
  p.endpoint_cost.grad_a = [](const Vec&, const Vec&) { return Vec(Vec::Zero(1)); };
  p.endpoint_cost.grad_b = [](const Vec&, const Vec& xb) {
    return Vec(Vec::Constant(1, 2.0 * xb[0]));
  };
  p.state_constraint.value = [](double, const Vec&) { return -1.0; };
  p.state_constraint.grad_x = [](double, const Vec&) { return Vec(Vec::Zero(1)); };
  MixedConstraint steep;  // u - 1000 x <= 0
  steep.value = [](double, const Vec& x, const Vec& u) { return u[0] - 1000.0 * x[0]; };
  steep.grad_x = [](double, const Vec&, const Vec&) { return Vec(Vec::Constant(1, -1000.0)); };
  steep.grad_u = [](double, const Vec&, const Vec&) { return Vec(Vec::Ones(1)); };
  p.mixed_constraints = {bound_upper(0, 0.5), bound_lower(0, -0.5), steep};
  p.endpoint_a = EndpointDescriptor::make_point(Vec::Zero(1));
  p.endpoint_b = EndpointDescriptor::make_free();
  p.tube_radius = 0.1;
  p.control_lo = Vec::Constant(1, -0.5);
  p.control_hi = Vec::Constant(1, 0.5);
  return p;
}

}  // namespace nsmp::testing
