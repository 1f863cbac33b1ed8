#include "nsmp/problem.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace nsmp {

EndpointDescriptor EndpointDescriptor::make_point(const Vec& p) {
  EndpointDescriptor d;
  d.kind = EndpointKind::Point;
  d.point = p;
  return d;
}

EndpointDescriptor EndpointDescriptor::make_box(const Vec& lo, const Vec& hi) {
  EndpointDescriptor d;
  d.kind = EndpointKind::Box;
  d.lower = lo;
  d.upper = hi;
  return d;
}

EndpointDescriptor EndpointDescriptor::make_affine(const Vec& offset, const Mat& basis) {
  EndpointDescriptor d;
  d.kind = EndpointKind::Affine;
  d.offset = offset;
  d.basis = basis;
  return d;
}

EndpointDescriptor EndpointDescriptor::make_free() { return EndpointDescriptor{}; }

double EndpointDescriptor::distance(const Vec& y) const {
  switch (kind) {
    case EndpointKind::Point:
      return (y - point).norm();
    case EndpointKind::Box: {
      Vec proj = y.cwiseMax(lower).cwiseMin(upper);
      return (y - proj).norm();
    }
    case EndpointKind::Affine: {
      // Project onto offset + span(basis).
      Vec r = y - offset;
      Vec theta = basis.colPivHouseholderQr().solve(r);
      return (r - basis * theta).norm();
    }
    case EndpointKind::Free:
      return 0.0;
  }
  return 0.0;
}

bool EndpointDescriptor::contains(const Vec& y, double tol) const {
  return distance(y) <= tol;
}

namespace {

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& at, double step) {
  Vec f0 = f(at);
  Mat J(f0.size(), at.size());
  Vec z = at;
  for (int i = 0; i < at.size(); ++i) {
    double save = z[i];
    z[i] = save + step;
    Vec fp = f(z);
    z[i] = save - step;
    Vec fm = f(z);
    z[i] = save;
    J.col(i) = (fp - fm) / (2.0 * step);
  }
  return J;
}

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& at, double step) {
  Vec g(at.size());
  Vec z = at;
  for (int i = 0; i < at.size(); ++i) {
    double save = z[i];
    z[i] = save + step;
    double fp = f(z);
    z[i] = save - step;
    double fm = f(z);
    z[i] = save;
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

}  // namespace

Mat OCProblem::dynamics_jac_x(double t, const Vec& x, const Vec& u) const {
  if (dynamics.jac_x) return dynamics.jac_x(t, x, u);
  return fd_jacobian([&](const Vec& xx) { return dynamics.value(t, xx, u); }, x, fd_step);
}

Mat OCProblem::dynamics_jac_u(double t, const Vec& x, const Vec& u) const {
  if (dynamics.jac_u) return dynamics.jac_u(t, x, u);
  return fd_jacobian([&](const Vec& uu) { return dynamics.value(t, x, uu); }, u, fd_step);
}

Vec OCProblem::state_constraint_grad(double t, const Vec& x) const {
  if (state_constraint.grad_x) return state_constraint.grad_x(t, x);
  return fd_gradient([&](const Vec& xx) { return state_constraint.value(t, xx); }, x, fd_step);
}

Vec OCProblem::mixed_grad_x(int j, double t, const Vec& x, const Vec& u) const {
  const auto& g = mixed_constraints[static_cast<size_t>(j)];
  if (g.grad_x) return g.grad_x(t, x, u);
  return fd_gradient([&](const Vec& xx) { return g.value(t, xx, u); }, x, fd_step);
}

Vec OCProblem::mixed_grad_u(int j, double t, const Vec& x, const Vec& u) const {
  const auto& g = mixed_constraints[static_cast<size_t>(j)];
  if (g.grad_u) return g.grad_u(t, x, u);
  return fd_gradient([&](const Vec& uu) { return g.value(t, x, uu); }, u, fd_step);
}

Vec OCProblem::endpoint_cost_grad_a(const Vec& xa, const Vec& xb) const {
  if (endpoint_cost.grad_a) return endpoint_cost.grad_a(xa, xb);
  return fd_gradient([&](const Vec& z) { return endpoint_cost.value(z, xb); }, xa, fd_step);
}

Vec OCProblem::endpoint_cost_grad_b(const Vec& xa, const Vec& xb) const {
  if (endpoint_cost.grad_b) return endpoint_cost.grad_b(xa, xb);
  return fd_gradient([&](const Vec& z) { return endpoint_cost.value(xa, z); }, xb, fd_step);
}

Vec OCProblem::running_cost_grad_x(double t, const Vec& x, const Vec& u) const {
  if (running_cost->grad_x) return running_cost->grad_x(t, x, u);
  return fd_gradient([&](const Vec& xx) { return running_cost->value(t, xx, u); }, x, fd_step);
}

Vec OCProblem::running_cost_grad_u(double t, const Vec& x, const Vec& u) const {
  if (running_cost->grad_u) return running_cost->grad_u(t, x, u);
  return fd_gradient([&](const Vec& uu) { return running_cost->value(t, x, uu); }, u, fd_step);
}

std::pair<Vec, Vec> OCProblem::control_sampling_box(double t, const Vec& x) const {
  if (control_lo && control_hi) return {*control_lo, *control_hi};
  // Probe a feasible range per axis by doubling outward from 0 until the
  // axis point leaves S(t, x), then refine by bisection.
  Vec lo = Vec::Constant(k, -1.0), hi = Vec::Constant(k, 1.0);
  auto feasible = [&](const Vec& u) {
    for (const auto& g : mixed_constraints)
      if (g.value(t, x, u) > 0) return false;
    return true;
  };
  for (int c = 0; c < k; ++c) {
    for (int sgn = 0; sgn < 2; ++sgn) {
      double dir = sgn == 0 ? 1.0 : -1.0;
      double r = 1.0;
      Vec u = Vec::Zero(k);
      int grow = 0;
      while (grow < 24) {
        u[c] = dir * r;
        if (!feasible(u)) break;
        r *= 2.0;
        ++grow;
      }
      if (sgn == 0)
        hi[c] = r;
      else
        lo[c] = -r;
    }
  }
  return {lo, hi};
}

double Process::max_dynamics_defect(const OCProblem& prob) const {
  double worst = 0.0;
  for (int m = 0; m < steps(); ++m) {
    Vec d = states[static_cast<size_t>(m + 1)] - states[static_cast<size_t>(m)] -
            dt(m) * prob.dynamics.value(grid[m], states[static_cast<size_t>(m)],
                                        controls[static_cast<size_t>(m)]);
    worst = std::max(worst, d.lpNorm<Eigen::Infinity>());
  }
  return worst;
}

ValidationReport validate_problem(const OCProblem& prob) {
  ValidationReport rep;
  auto add = [&](const std::string& code, const std::string& msg) {
    rep.defects.push_back({code, msg});
  };

  if (!(prob.t0 < prob.t1)) add("horizon", "horizon not increasing");
  if (prob.n < 1) add("state_dim", "state dimension must be >= 1");
  if (prob.k < 1) add("control_dim", "control dimension must be >= 1");
  if (!(prob.tube_radius > 0)) add("tube_radius", "tube radius must be positive");
  if (!prob.dynamics.value) add("dynamics", "dynamics evaluator missing");
  if (!prob.endpoint_cost.value) add("endpoint_cost", "endpoint cost evaluator missing");
  if (!prob.state_constraint.value) add("state_constraint", "state constraint evaluator missing");
  if (prob.running_cost && !prob.running_cost->value)
    add("running_cost", "running cost present but evaluator missing");
  for (size_t j = 0; j < prob.mixed_constraints.size(); ++j)
    if (!prob.mixed_constraints[j].value)
      add("mixed_constraint", "mixed constraint " + std::to_string(j) + " evaluator missing");

  if (prob.endpoint_a.kind == EndpointKind::Box || prob.endpoint_b.kind == EndpointKind::Box) {
    const EndpointDescriptor* descs[2] = {&prob.endpoint_a, &prob.endpoint_b};
    for (const auto* d : descs) {
      if (d->kind != EndpointKind::Box) continue;
      for (int i = 0; i < d->lower.size(); ++i)
        if (d->lower[i] > d->upper[i]) add("endpoint_box", "box bounds not ordered");
    }
  }
  const EndpointDescriptor* descs[2] = {&prob.endpoint_a, &prob.endpoint_b};
  for (const auto* d : descs) {
    if (d->kind != EndpointKind::Affine) continue;
    Eigen::ColPivHouseholderQR<Mat> qr(d->basis);
    if (qr.rank() < d->basis.cols()) add("endpoint_affine", "affine basis rank-deficient");
  }

  if (rep.ok()) {
    // [CS*eps] needs a bounded control set on the tube; probe along rays.
    bool unbounded = prob.mixed_constraints.empty();
    if (!unbounded) {
      const double t = 0.5 * (prob.t0 + prob.t1);
      const Vec x = Vec::Zero(prob.n);
      const double big = 1e7;
      auto feasible = [&](const Vec& u) {
        for (const auto& g : prob.mixed_constraints)
          if (g.value(t, x, u) > 0) return false;
        return true;
      };
      for (int c = 0; c < prob.k && !unbounded; ++c) {
        Vec u = Vec::Zero(prob.k);
        u[c] = big;
        if (feasible(u)) unbounded = true;
        u[c] = -big;
        if (feasible(u)) unbounded = true;
      }
    }
    if (unbounded)
      add("control_unbounded", "control set unbounded on tube ([CS*eps] unverifiable)");
  }
  return rep;
}

MixedResidual mixed_residual(const OCProblem& prob, double t, const Vec& x, const Vec& u) {
  MixedResidual r;
  r.values.resize(static_cast<Eigen::Index>(prob.mixed_constraints.size()));
  r.max_value = -std::numeric_limits<double>::infinity();
  for (size_t j = 0; j < prob.mixed_constraints.size(); ++j) {
    double v;
    try {
      v = prob.mixed_constraints[j].value(t, x, u);
    } catch (const std::exception& e) {
      throw Error("evaluation failure at (t,x,u), constraint " + std::to_string(j) + ": " +
                  e.what());
    }
    if (!std::isfinite(v))
      throw Error("evaluation failure at (t,x,u): constraint " + std::to_string(j) +
                  " returned non-finite value");
    r.values[static_cast<Eigen::Index>(j)] = v;
    r.max_value = std::max(r.max_value, v);
  }
  if (prob.mixed_constraints.empty()) r.max_value = 0.0;
  return r;
}

}  // namespace nsmp
