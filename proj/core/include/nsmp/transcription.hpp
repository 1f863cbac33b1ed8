#pragma once

#include <optional>
#include <vector>

#include "nsmp/problem.hpp"
#include "nsmp/types.hpp"

namespace nsmp {

/// Decision-vector layout of the discretized penalized problem:
///   z = [ x_0 .. x_N | u_0 .. u_{N-1} | s_0 .. s_N ]
/// where the s are epigraph slacks for h+ (s_m >= 0, s_m >= h(t_m, x_m)),
/// so the penalty i * integral(h+) becomes the linear term i * sum wq_m s_m
/// and every kink moves into constraints the solver can carry multipliers
/// for.
struct GridLayout {
  int N = 0, n = 0, k = 0;
  double t0 = 0.0, dt = 0.0;

  int x_offset(int m) const { return m * n; }
  int u_offset(int m) const { return (N + 1) * n + m * k; }
  int s_offset(int m) const { return (N + 1) * n + N * k + m; }
  int dim() const { return (N + 1) * n + N * k + (N + 1); }
  double time(int m) const { return t0 + m * dt; }
};

/// One general inequality row handled by the augmented Lagrangian.
struct IneqRow {
  enum class Kind { HSlack, Mixed } kind = Kind::Mixed;
  int node = 0;  // grid node
  int j = -1;    // mixed-constraint index (Kind::Mixed)
};

struct DiscreteNLP {
  const OCProblem* prob = nullptr;
  GridLayout layout;
  double penalty_index = 0.0;  // the i of (Q_i)
  Vec quad_weights;            // trapezoidal: dt*(1/2, 1, ..., 1, 1/2)

  // Ekeland anchor (diagnostic, default off): adds
  // anchor_weight * sum_m |u_m - anchor_m| * dt to the objective.
  std::optional<std::vector<Vec>> anchor;
  double anchor_weight = 0.0;

  // Simple bounds enforced by projection (controls with box rows,
  // slacks >= 0, pinned/boxed endpoint states).
  Vec lower, upper;

  std::vector<IneqRow> al_rows;          // rows handled by the AL
  std::vector<int> box_mixed_rows;       // mixed-constraint indices that became bounds
  bool has_affine_a = false, has_affine_b = false;
  Mat affine_a_normals, affine_b_normals;  // orthonormal complement bases
  Vec affine_a_rhs, affine_b_rhs;          // normals^T * offset

  int defect_count() const { return layout.N * layout.n; }
  int affine_count() const {
    return (has_affine_a ? static_cast<int>(affine_a_normals.cols()) : 0) +
           (has_affine_b ? static_cast<int>(affine_b_normals.cols()) : 0);
  }

  Vec state(const Vec& z, int m) const { return z.segment(layout.x_offset(m), layout.n); }
  Vec control(const Vec& z, int m) const { return z.segment(layout.u_offset(m), layout.k); }
  double slack(const Vec& z, int m) const { return z[layout.s_offset(m)]; }

  /// Euler defect x_{m+1} - x_m - dt f(t_m, x_m, u_m).
  Vec defect(const Vec& z, int m) const;
  double ineq_value(const Vec& z, const IneqRow& row) const;

  Process to_process(const Vec& z) const;
  Vec from_process(const Process& proc) const;
};

/// Uniform-grid explicit-Euler transcription with trapezoidal quadrature
/// for the h+ penalty and any running cost.
DiscreteNLP discretize(const OCProblem& prob, int N);

/// The (x,u)-space penalized objective of (Q_i):
///   l(x_0, x_N) [+ running-cost quadrature] + i * sum_m wq_m h+(t_m, x_m)
///   + anchor_weight * sum_m |u_m - anchor_m| * dt.
/// Independent of the slack variables.
double penalized_objective(const DiscreteNLP& nlp, const Vec& z);

/// Objective seen by the solver (slack form; equals penalized_objective
/// when the slacks sit at s = h+).
double solver_objective(const DiscreteNLP& nlp, const Vec& z);
void solver_objective_grad(const DiscreteNLP& nlp, const Vec& z, Vec& grad);

}  // namespace nsmp
