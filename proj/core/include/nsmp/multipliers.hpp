#pragma once

#include <vector>

#include "nsmp/problem.hpp"
#include "nsmp/types.hpp"

namespace nsmp {

struct SolveResult;  // solver.hpp

/// Nonnegative measure supported on the grid nodes, plus one explicit
/// atom exactly at t = b. Mass landing on the final node is always kept
/// in the atom so that q(b) - q(b-) = gamma(b) * atom holds exactly.
struct GridMeasure {
  Vec weights;              // N+1 node weights, >= 0
  double endpoint_atom = 0; // extra mass at t = b, >= 0

  double total() const { return weights.sum() + endpoint_atom; }
  /// Node indices with weight above tol; includes N when the atom is above tol.
  std::vector<int> support(double tol) const;
};

/// Multiplier objects of the maximum principle for one process.
struct MultiplierPack {
  double lambda0 = 1.0;
  std::vector<Vec> p;      // N+1 costate nodes
  std::vector<Vec> q;      // N+1 nodes, left limits; q[m] = p[m] + sum_{j<m} gamma_j w_j
  Vec q_b;                 // q(b) = p[N] + sum_{j<=N} gamma_j w_j + gamma_N * atom
  std::vector<Vec> gamma;  // N+1 selection nodes (subgradient of h in x)
  GridMeasure measure;

  int nodes() const { return static_cast<int>(p.size()); }
  double p_inf_norm() const;
  /// |p(a)| + |mu| + lambda0, the normalization functional.
  double scale() const;
};

/// Costate node values read off the converged defect multipliers
/// (sign convention of the maximum principle; node 0 extrapolated).
std::vector<Vec> extract_costate(const OCProblem& prob, const SolveResult& sol, double lambda0);

/// Grid measure from the penalty activity witness: w_m = i*lambda0*alpha_m*wq_m
/// with alpha in [0,1] taken from the h-slack multiplier; mass at the final
/// node goes to the endpoint atom. `activity_tol` classifies h values.
GridMeasure extract_measure(const OCProblem& prob, const SolveResult& sol, double penalty_index,
                            double lambda0, double activity_tol = 1e-6);

/// Selection gamma_m in the subdifferential hull of h(t_m, .) at x_m,
/// chosen on the measure support by least-squares against the target
/// directions implied by the adjoint/transversality rows; off-support
/// nodes carry the hull centroid (unused by the checker).
std::vector<Vec> extract_gamma(const OCProblem& prob, const Process& process,
                               const GridMeasure& measure, const std::vector<Vec>& targets,
                               unsigned seed = 0);

/// q nodes and q(b) per the bounded-variation formula: half-open sums for
/// t < b, full interval plus atom at t = b.
void reconstruct_q(MultiplierPack& pack);

/// Full extraction from a converged penalized solve (lambda0 = 1 scale).
MultiplierPack extract_pack(const OCProblem& prob, const Process& process, const SolveResult& sol,
                            double penalty_index, double activity_tol = 1e-6);

/// Rescales so |p(a)| + |mu| + lambda0 = 1 (gamma is a selection and is
/// left untouched). No-op on an all-zero pack.
void normalize_pack(MultiplierPack& pack);

/// Scales (lambda0, p, q, measure) by c > 0; homogeneity helper.
MultiplierPack scale_pack(const MultiplierPack& pack, double c);

}  // namespace nsmp
