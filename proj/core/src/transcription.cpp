#include "nsmp/transcription.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace nsmp {

Vec DiscreteNLP::defect(const Vec& z, int m) const {
  const double t = layout.time(m);
  Vec x = state(z, m), u = control(z, m);
  return state(z, m + 1) - x - layout.dt * prob->dynamics.value(t, x, u);
}

double DiscreteNLP::ineq_value(const Vec& z, const IneqRow& row) const {
  const double t = layout.time(row.node);
  if (row.kind == IneqRow::Kind::HSlack)
    return prob->state_constraint.value(t, state(z, row.node)) - slack(z, row.node);
  return prob->mixed_constraints[static_cast<size_t>(row.j)].value(t, state(z, row.node),
                                                                   control(z, row.node));
}

Process DiscreteNLP::to_process(const Vec& z) const {
  Process proc;
  proc.grid.resize(layout.N + 1);
  for (int m = 0; m <= layout.N; ++m) proc.grid[m] = layout.time(m);
  proc.states.resize(static_cast<size_t>(layout.N + 1));
  proc.controls.resize(static_cast<size_t>(layout.N));
  for (int m = 0; m <= layout.N; ++m) proc.states[static_cast<size_t>(m)] = state(z, m);
  for (int m = 0; m < layout.N; ++m) proc.controls[static_cast<size_t>(m)] = control(z, m);
  return proc;
}

Vec DiscreteNLP::from_process(const Process& proc) const {
  Vec z = Vec::Zero(layout.dim());
  for (int m = 0; m <= layout.N; ++m)
    z.segment(layout.x_offset(m), layout.n) = proc.states[static_cast<size_t>(m)];
  for (int m = 0; m < layout.N; ++m)
    z.segment(layout.u_offset(m), layout.k) = proc.controls[static_cast<size_t>(m)];
  for (int m = 0; m <= layout.N; ++m)
    z[layout.s_offset(m)] =
        std::max(0.0, prob->state_constraint.value(layout.time(m), state(z, m)));
  return z;
}

DiscreteNLP discretize(const OCProblem& prob, int N) {
  if (N < 2) throw Error("discretize: need at least 2 steps");
  DiscreteNLP nlp;
  nlp.prob = &prob;
  nlp.layout.N = N;
  nlp.layout.n = prob.n;
  nlp.layout.k = prob.k;
  nlp.layout.t0 = prob.t0;
  nlp.layout.dt = (prob.t1 - prob.t0) / N;

  nlp.quad_weights = Vec::Constant(N + 1, nlp.layout.dt);
  nlp.quad_weights[0] = 0.5 * nlp.layout.dt;
  nlp.quad_weights[N] = 0.5 * nlp.layout.dt;

  const double inf = std::numeric_limits<double>::infinity();
  nlp.lower = Vec::Constant(nlp.layout.dim(), -inf);
  nlp.upper = Vec::Constant(nlp.layout.dim(), inf);

  // Slacks are nonnegative.
  for (int m = 0; m <= N; ++m) nlp.lower[nlp.layout.s_offset(m)] = 0.0;

  // Control-bound rows become projection bounds.
  for (size_t j = 0; j < prob.mixed_constraints.size(); ++j) {
    const auto& g = prob.mixed_constraints[j];
    if (!g.is_control_bound) continue;
    nlp.box_mixed_rows.push_back(static_cast<int>(j));
    for (int m = 0; m < N; ++m) {
      int idx = nlp.layout.u_offset(m) + g.bound_comp;
      if (g.bound_is_upper)
        nlp.upper[idx] = std::min(nlp.upper[idx], g.bound_value);
      else
        nlp.lower[idx] = std::max(nlp.lower[idx], g.bound_value);
    }
  }

  // Endpoint descriptors: points and boxes by projection, affine by AL rows.
  auto apply_endpoint = [&](const EndpointDescriptor& d, int node, bool is_a) {
    const int off = nlp.layout.x_offset(node);
    switch (d.kind) {
      case EndpointKind::Point:
        for (int i = 0; i < prob.n; ++i) {
          nlp.lower[off + i] = d.point[i];
          nlp.upper[off + i] = d.point[i];
        }
        break;
      case EndpointKind::Box:
        for (int i = 0; i < prob.n; ++i) {
          nlp.lower[off + i] = std::max(nlp.lower[off + i], d.lower[i]);
          nlp.upper[off + i] = std::min(nlp.upper[off + i], d.upper[i]);
        }
        break;
      case EndpointKind::Affine: {
        Eigen::HouseholderQR<Mat> qr(d.basis);
        Mat Q = qr.householderQ() * Mat::Identity(prob.n, prob.n);
        const int rank = static_cast<int>(d.basis.cols());
        Mat normals = Q.rightCols(prob.n - rank);
        if (is_a) {
          nlp.has_affine_a = true;
          nlp.affine_a_normals = normals;
          nlp.affine_a_rhs = normals.transpose() * d.offset;
        } else {
          nlp.has_affine_b = true;
          nlp.affine_b_normals = normals;
          nlp.affine_b_rhs = normals.transpose() * d.offset;
        }
        break;
      }
      case EndpointKind::Free:
        break;
    }
  };
  apply_endpoint(prob.endpoint_a, 0, true);
  apply_endpoint(prob.endpoint_b, N, false);

  // AL rows: h-slack at every node, non-box mixed rows at control nodes.
  for (int m = 0; m <= N; ++m) nlp.al_rows.push_back({IneqRow::Kind::HSlack, m, -1});
  for (size_t j = 0; j < prob.mixed_constraints.size(); ++j) {
    if (prob.mixed_constraints[j].is_control_bound) continue;
    for (int m = 0; m < N; ++m)
      nlp.al_rows.push_back({IneqRow::Kind::Mixed, m, static_cast<int>(j)});
  }
  return nlp;
}

namespace {

double running_quad(const DiscreteNLP& nlp, const Vec& z) {
  if (!nlp.prob->running_cost) return 0.0;
  // Trapezoid in (t, x) with the control frozen per interval.
  double total = 0.0;
  for (int m = 0; m < nlp.layout.N; ++m) {
    const Vec u = nlp.control(z, m);
    double l0 = nlp.prob->running_cost->value(nlp.layout.time(m), nlp.state(z, m), u);
    double l1 = nlp.prob->running_cost->value(nlp.layout.time(m + 1), nlp.state(z, m + 1), u);
    total += 0.5 * nlp.layout.dt * (l0 + l1);
  }
  return total;
}

double anchor_term(const DiscreteNLP& nlp, const Vec& z) {
  if (!nlp.anchor || nlp.anchor_weight == 0.0) return 0.0;
  double total = 0.0;
  for (int m = 0; m < nlp.layout.N; ++m)
    total += (nlp.control(z, m) - (*nlp.anchor)[static_cast<size_t>(m)]).lpNorm<1>() *
             nlp.layout.dt;
  return nlp.anchor_weight * total;
}

}  // namespace

double penalized_objective(const DiscreteNLP& nlp, const Vec& z) {
  double val = nlp.prob->endpoint_cost.value(nlp.state(z, 0), nlp.state(z, nlp.layout.N));
  val += running_quad(nlp, z);
  for (int m = 0; m <= nlp.layout.N; ++m) {
    double h = nlp.prob->state_constraint.value(nlp.layout.time(m), nlp.state(z, m));
    val += nlp.penalty_index * nlp.quad_weights[m] * std::max(0.0, h);
  }
  val += anchor_term(nlp, z);
  return val;
}

double solver_objective(const DiscreteNLP& nlp, const Vec& z) {
  double val = nlp.prob->endpoint_cost.value(nlp.state(z, 0), nlp.state(z, nlp.layout.N));
  val += running_quad(nlp, z);
  for (int m = 0; m <= nlp.layout.N; ++m)
    val += nlp.penalty_index * nlp.quad_weights[m] * nlp.slack(z, m);
  val += anchor_term(nlp, z);
  return val;
}

void solver_objective_grad(const DiscreteNLP& nlp, const Vec& z, Vec& grad) {
  const auto& L = nlp.layout;
  grad.setZero(L.dim());
  const Vec xa = nlp.state(z, 0), xb = nlp.state(z, L.N);
  grad.segment(L.x_offset(0), L.n) += nlp.prob->endpoint_cost_grad_a(xa, xb);
  grad.segment(L.x_offset(L.N), L.n) += nlp.prob->endpoint_cost_grad_b(xa, xb);

  if (nlp.prob->running_cost) {
    for (int m = 0; m < L.N; ++m) {
      const Vec u = nlp.control(z, m);
      const double t0 = L.time(m), t1 = L.time(m + 1);
      grad.segment(L.x_offset(m), L.n) +=
          0.5 * L.dt * nlp.prob->running_cost_grad_x(t0, nlp.state(z, m), u);
      grad.segment(L.x_offset(m + 1), L.n) +=
          0.5 * L.dt * nlp.prob->running_cost_grad_x(t1, nlp.state(z, m + 1), u);
      grad.segment(L.u_offset(m), L.k) +=
          0.5 * L.dt *
          (nlp.prob->running_cost_grad_u(t0, nlp.state(z, m), u) +
           nlp.prob->running_cost_grad_u(t1, nlp.state(z, m + 1), u));
    }
  }
  for (int m = 0; m <= L.N; ++m)
    grad[L.s_offset(m)] += nlp.penalty_index * nlp.quad_weights[m];

  if (nlp.anchor && nlp.anchor_weight != 0.0) {
    for (int m = 0; m < L.N; ++m) {
      Vec d = nlp.control(z, m) - (*nlp.anchor)[static_cast<size_t>(m)];
      for (int c = 0; c < L.k; ++c) {
        double s = (d[c] > 0) ? 1.0 : (d[c] < 0 ? -1.0 : 0.0);
        grad[L.u_offset(m) + c] += nlp.anchor_weight * L.dt * s;
      }
    }
  }
}

}  // namespace nsmp
