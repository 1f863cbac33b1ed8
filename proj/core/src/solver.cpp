#include "nsmp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <limits>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace nsmp {

namespace {

struct AlState {
  std::vector<Vec> lambda;  // defect multipliers
  Vec nu;                   // AL inequality multipliers (al_rows order)
  Vec mu_a, mu_b;           // affine endpoint equality multipliers
  double rho = 10.0;
};

struct AlWork {
  std::vector<Vec> defects;   // cached per step
  std::vector<Mat> jac_x, jac_u;
};

double al_value_grad(const DiscreteNLP& nlp, const AlState& st, const Vec& z, Vec& grad,
                     AlWork& work) {
  const auto& L = nlp.layout;
  double val = solver_objective(nlp, z);
  solver_objective_grad(nlp, z, grad);

  // Dynamics defects.
  for (int m = 0; m < L.N; ++m) {
    const double t = L.time(m);
    const Vec x = nlp.state(z, m), u = nlp.control(z, m);
    Vec f = nlp.prob->dynamics.value(t, x, u);
    Vec c = nlp.state(z, m + 1) - x - L.dt * f;
    work.defects[static_cast<size_t>(m)] = c;
    Vec v = st.lambda[static_cast<size_t>(m)] + st.rho * c;
    val += st.lambda[static_cast<size_t>(m)].dot(c) + 0.5 * st.rho * c.squaredNorm();
    Mat Jx = nlp.prob->dynamics_jac_x(t, x, u);
    Mat Ju = nlp.prob->dynamics_jac_u(t, x, u);
    grad.segment(L.x_offset(m + 1), L.n) += v;
    grad.segment(L.x_offset(m), L.n) -= v + L.dt * (Jx.transpose() * v);
    grad.segment(L.u_offset(m), L.k) -= L.dt * (Ju.transpose() * v);
  }

  // General inequality rows.
  for (size_t r = 0; r < nlp.al_rows.size(); ++r) {
    const IneqRow& row = nlp.al_rows[r];
    const double t = L.time(row.node);
    double g = nlp.ineq_value(z, row);
    double w = st.nu[static_cast<Eigen::Index>(r)] + st.rho * g;
    if (w > 0) {
      val += (w * w - st.nu[static_cast<Eigen::Index>(r)] * st.nu[static_cast<Eigen::Index>(r)])
             / (2.0 * st.rho);
      if (row.kind == IneqRow::Kind::HSlack) {
        grad.segment(L.x_offset(row.node), L.n) +=
            w * nlp.prob->state_constraint_grad(t, nlp.state(z, row.node));
        grad[L.s_offset(row.node)] -= w;
      } else {
        grad.segment(L.x_offset(row.node), L.n) +=
            w * nlp.prob->mixed_grad_x(row.j, t, nlp.state(z, row.node), nlp.control(z, row.node));
        grad.segment(L.u_offset(row.node), L.k) +=
            w * nlp.prob->mixed_grad_u(row.j, t, nlp.state(z, row.node), nlp.control(z, row.node));
      }
    } else {
      val -= st.nu[static_cast<Eigen::Index>(r)] * st.nu[static_cast<Eigen::Index>(r)] /
             (2.0 * st.rho);
    }
  }

  // Affine endpoint rows.
  if (nlp.has_affine_a) {
    Vec c = nlp.affine_a_normals.transpose() * nlp.state(z, 0) - nlp.affine_a_rhs;
    Vec v = st.mu_a + st.rho * c;
    val += st.mu_a.dot(c) + 0.5 * st.rho * c.squaredNorm();
    grad.segment(L.x_offset(0), L.n) += nlp.affine_a_normals * v;
  }
  if (nlp.has_affine_b) {
    Vec c = nlp.affine_b_normals.transpose() * nlp.state(z, L.N) - nlp.affine_b_rhs;
    Vec v = st.mu_b + st.rho * c;
    val += st.mu_b.dot(c) + 0.5 * st.rho * c.squaredNorm();
    grad.segment(L.x_offset(L.N), L.n) += nlp.affine_b_normals * v;
  }
  return val;
}

Vec clamp_to_bounds(const DiscreteNLP& nlp, const Vec& z) {
  return z.cwiseMax(nlp.lower).cwiseMin(nlp.upper);
}

double criticality(const DiscreteNLP& nlp, const Vec& z, const Vec& grad) {
  return (clamp_to_bounds(nlp, z - grad) - z).lpNorm<Eigen::Infinity>();
}

double max_violation(const DiscreteNLP& nlp, const Vec& z, AlWork& work) {
  double v = 0.0;
  for (int m = 0; m < nlp.layout.N; ++m)
    v = std::max(v, work.defects[static_cast<size_t>(m)].lpNorm<Eigen::Infinity>());
  for (const auto& row : nlp.al_rows) v = std::max(v, nlp.ineq_value(z, row));
  if (nlp.has_affine_a)
    v = std::max(v, (nlp.affine_a_normals.transpose() * nlp.state(z, 0) - nlp.affine_a_rhs)
                        .lpNorm<Eigen::Infinity>());
  if (nlp.has_affine_b)
    v = std::max(v,
                 (nlp.affine_b_normals.transpose() * nlp.state(z, nlp.layout.N) - nlp.affine_b_rhs)
                     .lpNorm<Eigen::Infinity>());
  return v;
}

// Gauss-Newton model of the augmented Lagrangian from first-order data:
// rho J^T J over defects, active inequality rows and affine rows, plus
// Levenberg damping. Exact for affine problem data.
void assemble_gn_hessian(const DiscreteNLP& nlp, const AlState& st, const Vec& z, double damping,
                         Eigen::SparseMatrix<double>& H) {
  const auto& L = nlp.layout;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(L.dim()) * 8);
  auto add_block = [&](int r0, int c0, const Mat& B) {
    for (int r = 0; r < B.rows(); ++r)
      for (int c = 0; c < B.cols(); ++c)
        if (B(r, c) != 0.0) trip.emplace_back(r0 + r, c0 + c, B(r, c));
  };

  for (int m = 0; m < L.N; ++m) {
    const double t = L.time(m);
    const Vec x = nlp.state(z, m), u = nlp.control(z, m);
    Mat A = -Mat::Identity(L.n, L.n) - L.dt * nlp.prob->dynamics_jac_x(t, x, u);
    Mat B = -L.dt * nlp.prob->dynamics_jac_u(t, x, u);
    const int xm = L.x_offset(m), um = L.u_offset(m), xn = L.x_offset(m + 1);
    add_block(xm, xm, st.rho * (A.transpose() * A));
    add_block(um, um, st.rho * (B.transpose() * B));
    add_block(xm, um, st.rho * (A.transpose() * B));
    add_block(um, xm, st.rho * (B.transpose() * A));
    add_block(xn, xn, st.rho * Mat::Identity(L.n, L.n));
    add_block(xn, xm, st.rho * A);
    add_block(xm, xn, st.rho * A.transpose());
    add_block(xn, um, st.rho * B);
    add_block(um, xn, st.rho * B.transpose());
  }

  for (size_t r = 0; r < nlp.al_rows.size(); ++r) {
    const IneqRow& row = nlp.al_rows[r];
    double g = nlp.ineq_value(z, row);
    if (st.nu[static_cast<Eigen::Index>(r)] + st.rho * g <= 0) continue;  // inactive branch
    const double t = L.time(row.node);
    if (row.kind == IneqRow::Kind::HSlack) {
      Vec hx = nlp.prob->state_constraint_grad(t, nlp.state(z, row.node));
      const int x0 = L.x_offset(row.node), s0 = L.s_offset(row.node);
      add_block(x0, x0, st.rho * (hx * hx.transpose()));
      for (int i = 0; i < L.n; ++i) {
        if (hx[i] == 0.0) continue;
        trip.emplace_back(x0 + i, s0, -st.rho * hx[i]);
        trip.emplace_back(s0, x0 + i, -st.rho * hx[i]);
      }
      trip.emplace_back(s0, s0, st.rho);
    } else {
      Vec gx = nlp.prob->mixed_grad_x(row.j, t, nlp.state(z, row.node), nlp.control(z, row.node));
      Vec gu = nlp.prob->mixed_grad_u(row.j, t, nlp.state(z, row.node), nlp.control(z, row.node));
      const int x0 = L.x_offset(row.node), u0 = L.u_offset(row.node);
      add_block(x0, x0, st.rho * (gx * gx.transpose()));
      add_block(u0, u0, st.rho * (gu * gu.transpose()));
      add_block(x0, u0, st.rho * (gx * gu.transpose()));
      add_block(u0, x0, st.rho * (gu * gx.transpose()));
    }
  }
  if (nlp.has_affine_a)
    add_block(L.x_offset(0), L.x_offset(0),
              st.rho * (nlp.affine_a_normals * nlp.affine_a_normals.transpose()));
  if (nlp.has_affine_b)
    add_block(L.x_offset(L.N), L.x_offset(L.N),
              st.rho * (nlp.affine_b_normals * nlp.affine_b_normals.transpose()));
  for (int i = 0; i < L.dim(); ++i) trip.emplace_back(i, i, damping);

  H.resize(L.dim(), L.dim());
  H.setFromTriplets(trip.begin(), trip.end());
}

// Damped Gauss-Newton step on the free variables (active bounds fixed).
bool gauss_newton_direction(const DiscreteNLP& nlp, const AlState& st, const Vec& z,
                            const Vec& grad, double damping, Vec& dir) {
  const int dim = nlp.layout.dim();
  std::vector<int> free_idx;
  free_idx.reserve(static_cast<size_t>(dim));
  std::vector<int> map(static_cast<size_t>(dim), -1);
  const double eps = 1e-12;
  for (int i = 0; i < dim; ++i) {
    bool at_lo = z[i] <= nlp.lower[i] + eps && grad[i] > 0;
    bool at_hi = z[i] >= nlp.upper[i] - eps && grad[i] < 0;
    bool pinned = nlp.lower[i] == nlp.upper[i];
    if (at_lo || at_hi || pinned) continue;
    map[static_cast<size_t>(i)] = static_cast<int>(free_idx.size());
    free_idx.push_back(i);
  }
  dir = Vec::Zero(dim);
  if (free_idx.empty()) return false;

  Eigen::SparseMatrix<double> H;
  assemble_gn_hessian(nlp, st, z, damping, H);

  std::vector<Eigen::Triplet<double>> trip;
  for (int col = 0; col < H.outerSize(); ++col) {
    if (map[static_cast<size_t>(col)] < 0) continue;
    for (Eigen::SparseMatrix<double>::InnerIterator it(H, col); it; ++it) {
      int r = static_cast<int>(it.row());
      if (map[static_cast<size_t>(r)] < 0) continue;
      trip.emplace_back(map[static_cast<size_t>(r)], map[static_cast<size_t>(col)], it.value());
    }
  }
  Eigen::SparseMatrix<double> Hff(static_cast<int>(free_idx.size()),
                                  static_cast<int>(free_idx.size()));
  Hff.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Hff);
  if (ldlt.info() != Eigen::Success) return false;
  Vec gf(static_cast<Eigen::Index>(free_idx.size()));
  for (size_t i = 0; i < free_idx.size(); ++i)
    gf[static_cast<Eigen::Index>(i)] = grad[free_idx[i]];
  Vec df = ldlt.solve(-gf);
  if (ldlt.info() != Eigen::Success || !df.allFinite()) return false;
  for (size_t i = 0; i < free_idx.size(); ++i) dir[free_idx[i]] = df[static_cast<Eigen::Index>(i)];
  return true;
}

// Inner minimizer: projected gradient (Barzilai-Borwein spectral steps,
// nonmonotone Armijo) with a Gauss-Newton polish step each iteration. The
// GN step fixes the slow tail of first-order iterations on the long Euler
// defect chain; the spectral step keeps global progress cheap and covers
// nonsmooth leftovers (the L1 anchor term).
long inner_minimize(const DiscreteNLP& nlp, const AlState& st, Vec& z, double tol, int cap,
                    AlWork& work) {
  Vec grad(nlp.layout.dim()), grad_new(nlp.layout.dim());
  z = clamp_to_bounds(nlp, z);
  double f = al_value_grad(nlp, st, z, grad, work);
  std::deque<double> recent = {f};
  double step = 1.0 / std::max(1.0, grad.lpNorm<Eigen::Infinity>());
  double damping = 1e-9;
  const double fscale = 1.0 + std::abs(f);
  long evals = 0;

  for (int it = 0; it < cap; ++it) {
    if (criticality(nlp, z, grad) <= tol) break;

    bool moved = false;
    // Gauss-Newton attempt with projected backtracking.
    Vec dir;
    if (gauss_newton_direction(nlp, st, z, grad, damping, dir) &&
        dir.lpNorm<Eigen::Infinity>() > 0) {
      double alpha = 1.0;
      for (int bt = 0; bt < 12; ++bt) {
        Vec z_new = clamp_to_bounds(nlp, z + alpha * dir);
        Vec d_eff = z_new - z;
        double gd = grad.dot(d_eff);
        if (gd < 0) {
          double f_new = al_value_grad(nlp, st, z_new, grad_new, work);
          ++evals;
          if (f_new <= f + 1e-4 * gd || f_new < f - 1e-16 * fscale) {
            z = z_new;
            f = f_new;
            grad = grad_new;
            moved = true;
            damping = std::max(1e-12, damping * 0.25);
            break;
          }
        }
        alpha *= 0.25;
      }
      if (!moved) damping = std::min(1e6, damping * 100.0);
    }

    if (!moved) {
      // Spectral projected-gradient fallback.
      Vec d = clamp_to_bounds(nlp, z - step * grad) - z;
      if (d.lpNorm<Eigen::Infinity>() <= 1e-18 * (1.0 + z.lpNorm<Eigen::Infinity>())) break;
      double gd = grad.dot(d);
      if (gd > 0) {
        d = clamp_to_bounds(nlp, z - grad / std::max(1.0, grad.norm())) - z;
        gd = grad.dot(d);
        if (gd >= 0) break;
      }
      double f_ref = *std::max_element(recent.begin(), recent.end());
      double lambda = 1.0;
      Vec z_new;
      double f_new = 0.0;
      bool accepted = false;
      for (int bt = 0; bt < 40; ++bt) {
        z_new = z + lambda * d;
        f_new = al_value_grad(nlp, st, z_new, grad_new, work);
        ++evals;
        if (f_new <= f_ref + 1e-4 * lambda * gd) {
          accepted = true;
          break;
        }
        lambda *= 0.5;
      }
      if (!accepted) break;
      Vec s = z_new - z, y = grad_new - grad;
      double sy = s.dot(y);
      step = (sy > 1e-300) ? s.squaredNorm() / sy : 1.0;
      step = std::clamp(step, 1e-12, 1e12);
      z = z_new;
      f = f_new;
      grad = grad_new;
    }
    recent.push_back(f);
    if (recent.size() > 8) recent.pop_front();
  }
  return evals;
}

void recover_box_multipliers(const DiscreteNLP& nlp, const AlState& st, const Vec& z,
                             SolveResult& res, AlWork& work) {
  // Multipliers of the projected control-bound rows from stationarity:
  // at an active lower bound (g = lo - u_c) nu = +dL/du_c, at an active
  // upper bound (g = u_c - hi) nu = -dL/du_c.
  const auto& L = nlp.layout;
  Vec grad(L.dim());
  al_value_grad(nlp, st, z, grad, work);
  const double act_tol = 1e-9;
  for (int jb : nlp.box_mixed_rows) {
    const auto& g = nlp.prob->mixed_constraints[static_cast<size_t>(jb)];
    for (int m = 0; m < L.N; ++m) {
      int idx = L.u_offset(m) + g.bound_comp;
      double gv = g.bound_is_upper ? (z[idx] - g.bound_value) : (g.bound_value - z[idx]);
      double nu = 0.0;
      if (std::abs(gv) <= act_tol)
        nu = g.bound_is_upper ? std::max(0.0, -grad[idx]) : std::max(0.0, grad[idx]);
      res.mixed_multipliers(m, jb) = nu;
    }
  }
}

}  // namespace

SolveResult solve_penalized(const DiscreteNLP& nlp, const Vec& init, const SolveOptions& opts) {
  const auto& L = nlp.layout;
  if (init.size() != L.dim()) throw Error("solve_penalized: init does not match layout");

  AlState st;
  st.lambda.assign(static_cast<size_t>(L.N), Vec::Zero(L.n));
  st.nu = Vec::Zero(static_cast<Eigen::Index>(nlp.al_rows.size()));
  if (nlp.has_affine_a) st.mu_a = Vec::Zero(nlp.affine_a_normals.cols());
  if (nlp.has_affine_b) st.mu_b = Vec::Zero(nlp.affine_b_normals.cols());

  AlWork work;
  work.defects.assign(static_cast<size_t>(L.N), Vec::Zero(L.n));

  Vec z = clamp_to_bounds(nlp, init);
  SolveResult res;
  res.mixed_multipliers =
      Mat::Zero(L.N, static_cast<Eigen::Index>(nlp.prob->mixed_constraints.size()));

  // A pointwise subgradient oracle cannot push the criticality below the
  // kink jump of the L1 anchor term; iterates hovering at the anchor see
  // +-anchor_weight*dt per control coordinate.
  const double kink_floor =
      (nlp.anchor && nlp.anchor_weight > 0) ? 2.0 * nlp.anchor_weight * L.dt : 0.0;
  const double stat_tol = opts.stationarity_tol + kink_floor;
  double inner_tol = std::max(stat_tol, 1e-4);
  double prev_feas = std::numeric_limits<double>::infinity();
  long inner_total = 0;
  int outer = 0;
  bool ok = false;

  for (; outer < opts.outer_cap; ++outer) {
    inner_total += inner_minimize(nlp, st, z, inner_tol, opts.inner_cap, work);

    Vec grad(L.dim());
    al_value_grad(nlp, st, z, grad, work);
    double feas = max_violation(nlp, z, work);
    double crit = criticality(nlp, z, grad);
    if (std::getenv("NSMP_SOLVER_TRACE"))
      std::fprintf(stderr, "outer %d rho %.1e feas %.3e crit %.3e inner %ld tol %.1e\n", outer,
                   st.rho, feas, crit, inner_total, inner_tol);

    // First-order multiplier update.
    for (int m = 0; m < L.N; ++m)
      st.lambda[static_cast<size_t>(m)] += st.rho * work.defects[static_cast<size_t>(m)];
    for (size_t r = 0; r < nlp.al_rows.size(); ++r) {
      double g = nlp.ineq_value(z, nlp.al_rows[r]);
      st.nu[static_cast<Eigen::Index>(r)] =
          std::max(0.0, st.nu[static_cast<Eigen::Index>(r)] + st.rho * g);
    }
    if (nlp.has_affine_a)
      st.mu_a += st.rho * (nlp.affine_a_normals.transpose() * nlp.state(z, 0) - nlp.affine_a_rhs);
    if (nlp.has_affine_b)
      st.mu_b +=
          st.rho * (nlp.affine_b_normals.transpose() * nlp.state(z, L.N) - nlp.affine_b_rhs);

    if (feas <= opts.feasibility_tol && crit <= std::max(stat_tol, inner_tol)) {
      if (inner_tol <= stat_tol) {
        ok = true;
        ++outer;
        break;
      }
    }
    // Grow the penalty only while infeasible; conditioning stays moderate.
    if (feas > opts.feasibility_tol && feas > 0.25 * prev_feas)
      st.rho = std::min(st.rho * 5.0, 1e10);
    prev_feas = feas;
    inner_tol = std::max(stat_tol, inner_tol * 0.1);
  }

  // Final diagnostics at the returned iterate.
  Vec grad(L.dim());
  al_value_grad(nlp, st, z, grad, work);
  res.z = z;
  res.converged = ok;
  res.feasibility = max_violation(nlp, z, work);
  res.stationarity = criticality(nlp, z, grad);
  res.objective = penalized_objective(nlp, z);
  res.outer_iterations = outer;
  res.inner_iterations = inner_total;
  res.defect_multipliers = st.lambda;
  res.hslack_multipliers = Vec::Zero(L.N + 1);
  for (size_t r = 0; r < nlp.al_rows.size(); ++r) {
    const IneqRow& row = nlp.al_rows[r];
    if (row.kind == IneqRow::Kind::HSlack)
      res.hslack_multipliers[row.node] = st.nu[static_cast<Eigen::Index>(r)];
    else
      res.mixed_multipliers(row.node, row.j) = st.nu[static_cast<Eigen::Index>(r)];
  }
  if (nlp.has_affine_a) res.affine_a_multipliers = st.mu_a;
  if (nlp.has_affine_b) res.affine_b_multipliers = st.mu_b;
  recover_box_multipliers(nlp, st, z, res, work);
  if (!ok)
    res.message = "not converged: feasibility " + std::to_string(res.feasibility) +
                  ", stationarity " + std::to_string(res.stationarity);
  return res;
}

namespace {

double max_hplus(const DiscreteNLP& nlp, const Vec& z) {
  double v = 0.0;
  for (int m = 0; m <= nlp.layout.N; ++m)
    v = std::max(v, nlp.prob->state_constraint.value(nlp.layout.time(m), nlp.state(z, m)));
  return std::max(0.0, v);
}

double l1_control_distance(const DiscreteNLP& nlp, const Vec& z, const Process& cand) {
  double total = 0.0;
  for (int m = 0; m < nlp.layout.N; ++m)
    total += (nlp.control(z, m) - cand.controls[static_cast<size_t>(m)]).lpNorm<1>() *
             nlp.layout.dt;
  return total;
}

}  // namespace

ContinuationTrace penalty_continuation(const OCProblem& prob, int N, const SolveOptions& opts,
                                       const Process* candidate) {
  ContinuationTrace trace;
  DiscreteNLP nlp = discretize(prob, N);

  Vec z = Vec::Zero(nlp.layout.dim());
  if (candidate) z = nlp.from_process(*candidate);
  z = z.cwiseMax(nlp.lower).cwiseMin(nlp.upper);
  bool warm = false;

  for (double i = 1.0; i <= opts.penalty_max; i *= 2.0) {
    nlp.penalty_index = i;
    Vec init = warm ? z : z;  // warm start chains schedule entries
    SolveResult sol = solve_penalized(nlp, init, opts);

    ContinuationRecord rec;
    rec.penalty_index = i;
    rec.objective = sol.objective;
    rec.max_hplus = max_hplus(nlp, sol.z);
    rec.converged = sol.converged;
    rec.feasibility = sol.feasibility;
    rec.stationarity = sol.stationarity;
    rec.outer_iterations = sol.outer_iterations;
    rec.inner_iterations = sol.inner_iterations;

    if (candidate) {
      Vec zc = nlp.from_process(*candidate);
      double j_cand = penalized_objective(nlp, zc);
      rec.eps_hat = j_cand - sol.objective;
      rec.l1_distance = l1_control_distance(nlp, sol.z, *candidate);
      rec.ekeland_bound_ok =
          *rec.l1_distance <= std::sqrt(std::max(0.0, *rec.eps_hat)) + 1e-6;
      if (opts.ekeland_replay) {
        DiscreteNLP anchored = nlp;
        anchored.anchor = std::vector<Vec>();
        anchored.anchor->reserve(static_cast<size_t>(nlp.layout.N));
        for (int m = 0; m < nlp.layout.N; ++m) anchored.anchor->push_back(nlp.control(sol.z, m));
        anchored.anchor_weight = std::sqrt(std::max(0.0, *rec.eps_hat));
        SolveResult replay = solve_penalized(anchored, sol.z, opts);
        double drift = 0.0;
        for (int m = 0; m < nlp.layout.N; ++m)
          drift += (anchored.control(replay.z, m) - (*anchored.anchor)[static_cast<size_t>(m)])
                       .lpNorm<1>() *
                   nlp.layout.dt;
        rec.replay_drift = drift;
      }
    }
    trace.records.push_back(rec);
    trace.final = sol;
    trace.final_penalty_index = i;

    if (!sol.converged) {
      trace.truncated = true;
      break;
    }
    z = sol.z;
    warm = true;
    if (opts.stop_on_feasible && rec.max_hplus <= opts.hplus_stop_tol) break;
  }
  return trace;
}

OracleResult brute_force_oracle(const OCProblem& prob, const OracleOptions& opts) {
  if (prob.endpoint_a.kind != EndpointKind::Point)
    throw Error("brute_force_oracle: requires a point initial endpoint set");
  const int N = opts.steps;
  const int k = prob.k;
  auto [lo, hi] = prob.control_sampling_box(prob.t0, prob.endpoint_a.point);

  std::vector<double> grid;
  grid.reserve(static_cast<size_t>(opts.grid_per_dim));
  // Per-dimension values; dimensions share the count, not the range.
  const int G = opts.grid_per_dim;
  double total_choices = std::pow(static_cast<double>(G), static_cast<double>(k) * N);
  if (total_choices > static_cast<double>(opts.enumeration_cap))
    throw Error("brute_force_oracle: enumeration budget exceeded");

  const double dt = (prob.t1 - prob.t0) / N;
  std::vector<int> idx(static_cast<size_t>(k) * N, 0);
  OracleResult out;
  double best = std::numeric_limits<double>::infinity();

  auto grid_value = [&](int c, int g) {
    if (G == 1) return 0.5 * (lo[c] + hi[c]);
    return lo[c] + (hi[c] - lo[c]) * g / (G - 1);
  };

  std::vector<Vec> xs(static_cast<size_t>(N + 1));
  std::vector<Vec> us(static_cast<size_t>(N));
  while (true) {
    ++out.enumerated;
    xs[0] = prob.endpoint_a.point;
    bool feasible = prob.state_constraint.value(prob.t0, xs[0]) <= opts.feas_tol;
    double run_cost = 0.0;
    for (int m = 0; feasible && m < N; ++m) {
      Vec u(k);
      for (int c = 0; c < k; ++c) u[c] = grid_value(c, idx[static_cast<size_t>(m * k + c)]);
      us[static_cast<size_t>(m)] = u;
      const double t = prob.t0 + m * dt;
      if (mixed_residual(prob, t, xs[static_cast<size_t>(m)], u).max_value > opts.feas_tol) {
        feasible = false;
        break;
      }
      Vec f = prob.dynamics.value(t, xs[static_cast<size_t>(m)], u);
      xs[static_cast<size_t>(m + 1)] = xs[static_cast<size_t>(m)] + dt * f;
      if (prob.state_constraint.value(t + dt, xs[static_cast<size_t>(m + 1)]) > opts.feas_tol) {
        feasible = false;
        break;
      }
      if (prob.running_cost) {
        run_cost += 0.5 * dt *
                    (prob.running_cost->value(t, xs[static_cast<size_t>(m)], u) +
                     prob.running_cost->value(t + dt, xs[static_cast<size_t>(m + 1)], u));
      }
    }
    if (feasible && prob.endpoint_b.contains(xs[static_cast<size_t>(N)], opts.feas_tol)) {
      ++out.feasible;
      double cost = prob.endpoint_cost.value(xs[0], xs[static_cast<size_t>(N)]) + run_cost;
      if (cost < best) {  // strict: lexicographically first sequence wins ties
        best = cost;
        out.found = true;
        out.best.grid.resize(N + 1);
        for (int m = 0; m <= N; ++m) out.best.grid[m] = prob.t0 + m * dt;
        out.best.states = xs;
        out.best.controls = us;
        out.cost = cost;
      }
    }
    // Odometer increment (lexicographic order).
    int pos = static_cast<int>(idx.size()) - 1;
    while (pos >= 0) {
      if (++idx[static_cast<size_t>(pos)] < G) break;
      idx[static_cast<size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  if (!out.found) throw Error("brute_force_oracle: no feasible sequence");
  return out;
}

}  // namespace nsmp
