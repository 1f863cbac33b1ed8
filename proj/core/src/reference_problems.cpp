#include "nsmp/reference_problems.hpp"

#include <cmath>

namespace nsmp {

namespace {

MixedConstraint control_upper_bound(int comp, double hi, const std::string& name) {
  MixedConstraint g;
  g.value = [comp, hi](double, const Vec&, const Vec& u) { return u[comp] - hi; };
  g.grad_x = [](double, const Vec& x, const Vec&) { return Vec(Vec::Zero(x.size())); };
  g.grad_u = [comp](double, const Vec&, const Vec& u) {
    Vec g0 = Vec::Zero(u.size());
    g0[comp] = 1.0;
    return g0;
  };
  g.is_control_bound = true;
  g.bound_comp = comp;
  g.bound_value = hi;
  g.bound_is_upper = true;
  g.name = name;
  return g;
}

MixedConstraint control_lower_bound(int comp, double lo, const std::string& name) {
  MixedConstraint g;
  g.value = [comp, lo](double, const Vec&, const Vec& u) { return lo - u[comp]; };
  g.grad_x = [](double, const Vec& x, const Vec&) { return Vec(Vec::Zero(x.size())); };
  g.grad_u = [comp](double, const Vec&, const Vec& u) {
    Vec g0 = Vec::Zero(u.size());
    g0[comp] = -1.0;
    return g0;
  };
  g.is_control_bound = true;
  g.bound_comp = comp;
  g.bound_value = lo;
  g.bound_is_upper = false;
  g.name = name;
  return g;
}

Dynamics single_integrator() {
  Dynamics f;
  f.value = [](double, const Vec&, const Vec& u) { return u; };
  f.jac_x = [](double, const Vec& x, const Vec&) { return Mat(Mat::Zero(x.size(), x.size())); };
  f.jac_u = [](double, const Vec& x, const Vec& u) {
    return Mat(Mat::Identity(x.size(), u.size()));
  };
  return f;
}

StateConstraint constant_state_constraint(double c) {
  StateConstraint h;
  h.value = [c](double, const Vec&) { return c; };
  h.grad_x = [](double, const Vec& x) { return Vec(Vec::Zero(x.size())); };
  return h;
}

Process sample_uniform(const OCProblem& prob, int N, const std::function<Vec(double)>& xbar,
                       const std::function<Vec(double)>& ubar) {
  Process proc;
  proc.grid.resize(N + 1);
  const double dt = (prob.t1 - prob.t0) / N;
  for (int m = 0; m <= N; ++m) proc.grid[m] = prob.t0 + m * dt;
  proc.states.resize(static_cast<size_t>(N + 1));
  proc.controls.resize(static_cast<size_t>(N));
  for (int m = 0; m <= N; ++m) proc.states[static_cast<size_t>(m)] = xbar(proc.grid[m]);
  for (int m = 0; m < N; ++m) proc.controls[static_cast<size_t>(m)] = ubar(proc.grid[m]);
  return proc;
}

ReferenceProblem make_ref_a() {
  ReferenceProblem ref;
  OCProblem& p = ref.problem;
  p.name = "REF-A";
  p.t0 = 0.0;
  p.t1 = 1.0;
  p.n = p.k = 1;
  p.dynamics = single_integrator();
  p.endpoint_cost.value = [](const Vec&, const Vec& xb) { return xb[0]; };
  p.endpoint_cost.grad_a = [](const Vec& xa, const Vec&) { return Vec(Vec::Zero(xa.size())); };
  p.endpoint_cost.grad_b = [](const Vec&, const Vec&) { return Vec(Vec::Ones(1)); };
  p.state_constraint = constant_state_constraint(-1.0);
  p.mixed_constraints = {control_upper_bound(0, 1.0, "u<=1"), control_lower_bound(0, -1.0, "u>=-1")};
  p.endpoint_a = EndpointDescriptor::make_point(Vec::Zero(1));
  p.endpoint_b = EndpointDescriptor::make_free();
  p.tube_radius = 0.5;
  p.control_lo = Vec::Constant(1, -1.0);
  p.control_hi = Vec::Constant(1, 1.0);

  ref.solution.state = [](double t) { return Vec(Vec::Constant(1, -t)); };
  ref.solution.control = [](double) { return Vec(Vec::Constant(1, -1.0)); };
  ref.solution.optimal_cost = -1.0;
  ref.solution.pack = [](const Process& proc) {
    const int N = proc.steps();
    MultiplierPack pack;
    pack.lambda0 = 1.0;
    pack.p.assign(static_cast<size_t>(N + 1), Vec::Constant(1, -1.0));
    pack.gamma.assign(static_cast<size_t>(N + 1), Vec::Zero(1));
    pack.measure.weights = Vec::Zero(N + 1);
    pack.measure.endpoint_atom = 0.0;
    reconstruct_q(pack);
    return pack;
  };
  return ref;
}

ReferenceProblem make_ref_b() {
  ReferenceProblem ref;
  OCProblem& p = ref.problem;
  p.name = "REF-B";
  p.t0 = 0.0;
  p.t1 = 2.0;
  p.n = p.k = 1;
  p.dynamics = single_integrator();
  p.endpoint_cost.value = [](const Vec&, const Vec& xb) { return xb[0]; };
  p.endpoint_cost.grad_a = [](const Vec& xa, const Vec&) { return Vec(Vec::Zero(xa.size())); };
  p.endpoint_cost.grad_b = [](const Vec&, const Vec&) { return Vec(Vec::Ones(1)); };
  p.state_constraint.value = [](double, const Vec& x) { return -x[0]; };
  p.state_constraint.grad_x = [](double, const Vec&) { return Vec(Vec::Constant(1, -1.0)); };
  p.mixed_constraints = {control_upper_bound(0, 1.0, "u<=1"), control_lower_bound(0, -1.0, "u>=-1")};
  p.endpoint_a = EndpointDescriptor::make_point(Vec::Ones(1));
  p.endpoint_b = EndpointDescriptor::make_free();
  p.tube_radius = 0.5;
  p.control_lo = Vec::Constant(1, -1.0);
  p.control_hi = Vec::Constant(1, 1.0);

  ref.solution.state = [](double t) { return Vec(Vec::Constant(1, std::max(1.0 - t, 0.0))); };
  ref.solution.control = [](double t) { return Vec(Vec::Constant(1, t < 1.0 ? -1.0 : 0.0)); };
  ref.solution.optimal_cost = 0.0;
  ref.solution.pack = [](const Process& proc) {
    const int N = proc.steps();
    MultiplierPack pack;
    pack.lambda0 = 1.0;
    pack.p.assign(static_cast<size_t>(N + 1), Vec::Zero(1));
    pack.gamma.assign(static_cast<size_t>(N + 1), Vec::Constant(1, -1.0));
    pack.measure.weights = Vec::Zero(N + 1);
    pack.measure.endpoint_atom = 1.0;  // unit atom at t = 2
    reconstruct_q(pack);
    return pack;
  };
  return ref;
}

ReferenceProblem make_ref_c() {
  ReferenceProblem ref;
  OCProblem& p = ref.problem;
  p.name = "REF-C";
  p.t0 = 0.0;
  p.t1 = 1.0;
  p.n = p.k = 1;
  p.dynamics = single_integrator();
  p.endpoint_cost.value = [](const Vec&, const Vec& xb) { return -xb[0]; };
  p.endpoint_cost.grad_a = [](const Vec& xa, const Vec&) { return Vec(Vec::Zero(xa.size())); };
  p.endpoint_cost.grad_b = [](const Vec&, const Vec&) { return Vec(Vec::Constant(1, -1.0)); };
  p.state_constraint = constant_state_constraint(-1.0);
  MixedConstraint coupled;  // u + x - 1 <= 0
  coupled.value = [](double, const Vec& x, const Vec& u) { return u[0] + x[0] - 1.0; };
  coupled.grad_x = [](double, const Vec&, const Vec&) { return Vec(Vec::Ones(1)); };
  coupled.grad_u = [](double, const Vec&, const Vec&) { return Vec(Vec::Ones(1)); };
  coupled.name = "u+x<=1";
  p.mixed_constraints = {coupled, control_lower_bound(0, 0.0, "u>=0")};
  p.endpoint_a = EndpointDescriptor::make_point(Vec::Zero(1));
  p.endpoint_b = EndpointDescriptor::make_free();
  p.tube_radius = 0.25;  // keeps the S-corner (x,u)=(1,0) outside the tube
  p.control_lo = Vec::Constant(1, 0.0);
  p.control_hi = Vec::Constant(1, 1.0);

  ref.solution.state = [](double t) { return Vec(Vec::Constant(1, 1.0 - std::exp(-t))); };
  ref.solution.control = [](double t) { return Vec(Vec::Constant(1, std::exp(-t))); };
  ref.solution.optimal_cost = -(1.0 - std::exp(-1.0));
  ref.solution.pack = [](const Process& proc) {
    const int N = proc.steps();
    MultiplierPack pack;
    pack.lambda0 = 1.0;
    pack.p.resize(static_cast<size_t>(N + 1));
    for (int m = 0; m <= N; ++m)
      pack.p[static_cast<size_t>(m)] = Vec::Constant(1, std::exp(proc.grid[m] - 1.0));
    pack.gamma.assign(static_cast<size_t>(N + 1), Vec::Zero(1));
    pack.measure.weights = Vec::Zero(N + 1);
    pack.measure.endpoint_atom = 0.0;
    reconstruct_q(pack);
    return pack;
  };
  return ref;
}

}  // namespace

Process ReferenceSolution::sample(const OCProblem& prob, int N) const {
  return sample_uniform(prob, N, state, control);
}

bool is_reference_id(const std::string& id) {
  return id == "REF-A" || id == "REF-B" || id == "REF-C";
}

ReferenceProblem load_reference_problem(const std::string& id) {
  if (id == "REF-A") return make_ref_a();
  if (id == "REF-B") return make_ref_b();
  if (id == "REF-C") return make_ref_c();
  throw Error("unknown reference problem id: " + id);
}

}  // namespace nsmp
