#include "nsmp/multipliers.hpp"

#include <algorithm>
#include <cmath>

#include "nsmp/nonsmooth.hpp"
#include "nsmp/solver.hpp"

namespace nsmp {

std::vector<int> GridMeasure::support(double tol) const {
  std::vector<int> s;
  const int N = static_cast<int>(weights.size()) - 1;
  for (int m = 0; m <= N; ++m)
    if (weights[m] > tol) s.push_back(m);
  if (endpoint_atom > tol && (s.empty() || s.back() != N)) s.push_back(N);
  return s;
}

double MultiplierPack::p_inf_norm() const {
  double v = 0.0;
  for (const auto& pm : p) v = std::max(v, pm.norm());
  return v;
}

double MultiplierPack::scale() const {
  return (p.empty() ? 0.0 : p.front().norm()) + measure.total() + lambda0;
}

std::vector<Vec> extract_costate(const OCProblem& prob, const SolveResult& sol, double lambda0) {
  (void)prob;
  const auto& lam = sol.defect_multipliers;
  const int N = static_cast<int>(lam.size());
  if (N < 1) throw Error("extract_costate: missing defect multipliers");
  std::vector<Vec> nodes(static_cast<size_t>(N + 1));
  // The multiplier of defect m is the costate on (t_m, t_{m+1}); node m
  // carries the left limit, node 0 is extrapolated backward. The AL sign
  // convention (grad F + J^T lambda = 0) already matches the maximum
  // principle, so no flip is applied.
  for (int m = 1; m <= N; ++m) nodes[static_cast<size_t>(m)] = lambda0 * lam[static_cast<size_t>(m - 1)];
  nodes[0] = (N >= 2) ? Vec(lambda0 * (2.0 * lam[0] - lam[1])) : Vec(lambda0 * lam[0]);
  return nodes;
}

GridMeasure extract_measure(const OCProblem& prob, const SolveResult& sol, double penalty_index,
                            double lambda0, double activity_tol) {
  (void)prob;
  (void)penalty_index;
  (void)activity_tol;
  const int N = static_cast<int>(sol.hslack_multipliers.size()) - 1;
  if (N < 1) throw Error("extract_measure: missing h-slack multipliers");
  GridMeasure mu;
  mu.weights = Vec::Zero(N + 1);
  // Stationarity in the slack s_m gives nu_m = i * lambda0_raw * alpha_m * wq_m
  // with alpha_m in [0,1]; the h-slack multiplier is the node mass directly.
  for (int m = 0; m <= N; ++m) {
    double w = lambda0 * sol.hslack_multipliers[m];
    if (w < 0) throw Error("extract_measure: negative weight (internal error)");
    mu.weights[m] = w;
  }
  // Mass on the final node lives at t = b: fold it into the endpoint atom
  // so that q(b) - q(b-) = gamma(b) * atom holds exactly.
  mu.endpoint_atom = mu.weights[N];
  mu.weights[N] = 0.0;
  return mu;
}

std::vector<Vec> extract_gamma(const OCProblem& prob, const Process& process,
                               const GridMeasure& measure, const std::vector<Vec>& targets,
                               unsigned seed) {
  const int N = process.steps();
  std::vector<Vec> gamma(static_cast<size_t>(N + 1));
  std::vector<int> support = measure.support(0.0);
  std::vector<bool> on_support(static_cast<size_t>(N + 1), false);
  for (int m : support) on_support[static_cast<size_t>(m)] = true;

  for (int m = 0; m <= N; ++m) {
    SubdiffOptions opts;
    opts.seed = seed + static_cast<unsigned>(m);
    GradientBundle bundle =
        state_constraint_subdiff(prob, process.grid[m], process.states[static_cast<size_t>(m)], opts);
    if (bundle.generators.size() == 1) {
      gamma[static_cast<size_t>(m)] = bundle.generators.front();
      continue;
    }
    // Nonsmooth h: on the support pick the hull point closest to the
    // target direction implied by the adjoint rows; elsewhere the choice
    // is immaterial, use the hull point nearest the centroid.
    Vec target;
    if (on_support[static_cast<size_t>(m)] && static_cast<size_t>(m) < targets.size() &&
        targets[static_cast<size_t>(m)].size() == prob.n) {
      target = targets[static_cast<size_t>(m)];
    } else {
      target = Vec::Zero(prob.n);
      for (const auto& g : bundle.generators) target += g;
      target /= static_cast<double>(bundle.generators.size());
    }
    HullDistanceResult proj = hull_distance(target, bundle);
    Vec sel = Vec::Zero(prob.n);
    for (size_t i = 0; i < bundle.generators.size(); ++i)
      sel += proj.weights_a[static_cast<Eigen::Index>(i)] * bundle.generators[i];
    gamma[static_cast<size_t>(m)] = sel;
  }
  return gamma;
}

void reconstruct_q(MultiplierPack& pack) {
  const int N = pack.nodes() - 1;
  pack.q.assign(static_cast<size_t>(N + 1), Vec());
  Vec cum = Vec::Zero(pack.p.front().size());
  for (int m = 0; m <= N; ++m) {
    pack.q[static_cast<size_t>(m)] = pack.p[static_cast<size_t>(m)] + cum;  // half-open: node m excluded
    cum += pack.gamma[static_cast<size_t>(m)] * pack.measure.weights[m];
  }
  pack.q_b = pack.p[static_cast<size_t>(N)] + cum +
             pack.gamma[static_cast<size_t>(N)] * pack.measure.endpoint_atom;
}

namespace {

// Transversality residual of (p(a), -q_b) against N_E^L + lambda0 * dl.
double transversality_gap(const OCProblem& prob, const Process& process, const Vec& p_a,
                          const Vec& q_b, double lambda0) {
  const Vec& xa = process.states.front();
  const Vec& xb = process.states.back();
  Vec point(2 * prob.n);
  point << p_a, -q_b;
  Vec dl(2 * prob.n);
  dl << prob.endpoint_cost_grad_a(xa, xb), prob.endpoint_cost_grad_b(xa, xb);
  GradientBundle A = GradientBundle::single(lambda0 * dl);
  double tol = 1e-6 * (1.0 + xa.norm() + xb.norm());
  ConeBundle cone = ConeBundle::product(endpoint_normal_cone(prob.endpoint_a, xa, tol),
                                        endpoint_normal_cone(prob.endpoint_b, xb, tol));
  return hull_distance(point, A, cone.negated()).distance;
}

}  // namespace

MultiplierPack extract_pack(const OCProblem& prob, const Process& process, const SolveResult& sol,
                            double penalty_index, double activity_tol) {
  MultiplierPack pack;
  pack.lambda0 = 1.0;
  std::vector<Vec> q_nodes = extract_costate(prob, sol, 1.0);
  pack.measure = extract_measure(prob, sol, penalty_index, 1.0, activity_tol);
  const int N = static_cast<int>(q_nodes.size()) - 1;

  // Targets for the gamma selection from the adjoint rows (only used when
  // the h-bundle does not collapse to a single gradient).
  std::vector<Vec> targets(static_cast<size_t>(N + 1));
  const auto& lam = sol.defect_multipliers;
  for (int m = 1; m < N; ++m) {
    double w = sol.hslack_multipliers[m];
    if (w <= 1e-10) continue;
    const double t = process.grid[m];
    const Vec& x = process.states[static_cast<size_t>(m)];
    const Vec& u = process.controls[static_cast<size_t>(m)];
    Vec v = lam[static_cast<size_t>(m)] - lam[static_cast<size_t>(m - 1)] +
            process.dt(m) * prob.dynamics_jac_x(t, x, u).transpose() * lam[static_cast<size_t>(m)];
    for (int j = 0; j < sol.mixed_multipliers.cols(); ++j) {
      double nu = sol.mixed_multipliers(m, j);
      if (nu > 0) v -= nu * prob.mixed_grad_x(j, t, x, u);
    }
    if (prob.running_cost)
      v -= 0.5 * process.dt(m) * (prob.running_cost_grad_x(t, x, u) +
                                  prob.running_cost_grad_x(t, x, process.controls[static_cast<size_t>(m - 1)]));
    targets[static_cast<size_t>(m)] = v / w;
  }
  if (pack.measure.endpoint_atom > 1e-10) {
    const Vec& xa = process.states.front();
    const Vec& xb = process.states.back();
    Vec v = -(lam[static_cast<size_t>(N - 1)] + prob.endpoint_cost_grad_b(xa, xb));
    if (sol.affine_b_multipliers.size() > 0) {
      // handled inside the checker via the endpoint cone; skip refinement
    }
    targets[static_cast<size_t>(N)] = v / pack.measure.endpoint_atom;
  }

  pack.gamma = extract_gamma(prob, process, pack.measure, targets, sol.hslack_multipliers.size());

  // p = q - cumulative measure (half-open), then rebuild q from p.
  pack.p.assign(static_cast<size_t>(N + 1), Vec());
  Vec cum = Vec::Zero(prob.n);
  for (int m = 0; m <= N; ++m) {
    pack.p[static_cast<size_t>(m)] = q_nodes[static_cast<size_t>(m)] - cum;
    cum += pack.gamma[static_cast<size_t>(m)] * pack.measure.weights[m];
  }
  reconstruct_q(pack);

  // Endpoint-atom seeding: when h is active at t = b, grow the atom along
  // gamma(b) if that closes the transversality gap further.
  double h_b = prob.state_constraint.value(process.grid[N], process.states.back());
  if (h_b >= -activity_tol && pack.gamma[static_cast<size_t>(N)].norm() > 1e-12) {
    auto gap = [&](double extra) {
      Vec qb = pack.q_b + extra * pack.gamma[static_cast<size_t>(N)];
      return transversality_gap(prob, process, pack.p.front(), qb, pack.lambda0);
    };
    double g0 = gap(0.0);
    // Golden-section over [0, span]; the gap is convex along the ray.
    double lo = 0.0, hi = std::max(1.0, 4.0 * pack.scale());
    const double phi = 0.6180339887498949;
    double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
    double fa = gap(a), fb = gap(b);
    for (int it = 0; it < 80; ++it) {
      if (fa <= fb) {
        hi = b;
        b = a;
        fb = fa;
        a = hi - phi * (hi - lo);
        fa = gap(a);
      } else {
        lo = a;
        a = b;
        fa = fb;
        b = lo + phi * (hi - lo);
        fb = gap(b);
      }
    }
    double extra = 0.5 * (lo + hi);
    if (extra > 1e-12 && gap(extra) < g0 - 1e-12) {
      pack.measure.endpoint_atom += extra;
      reconstruct_q(pack);
    }
  }
  return pack;
}

void normalize_pack(MultiplierPack& pack) {
  double s = pack.scale();
  if (s <= 0) return;
  MultiplierPack scaled = scale_pack(pack, 1.0 / s);
  pack = std::move(scaled);
}

MultiplierPack scale_pack(const MultiplierPack& pack, double c) {
  if (!(c > 0)) throw Error("scale_pack: scale must be positive");
  MultiplierPack out = pack;
  out.lambda0 *= c;
  for (auto& v : out.p) v *= c;
  for (auto& v : out.q) v *= c;
  out.q_b *= c;
  out.measure.weights *= c;
  out.measure.endpoint_atom *= c;
  return out;
}

}  // namespace nsmp
