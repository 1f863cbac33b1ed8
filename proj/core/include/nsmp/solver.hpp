#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nsmp/transcription.hpp"

namespace nsmp {

struct SolveOptions {
  int inner_cap = 5000;           // SPG iterations per outer pass
  int outer_cap = 40;             // augmented-Lagrangian passes
  double stationarity_tol = 1e-8; // projected-gradient criticality
  double feasibility_tol = 1e-8;  // defects, inequality violation
  double penalty_max = 16384.0;   // schedule doubles 1,2,...,penalty_max
  bool stop_on_feasible = true;   // stop continuation once max h+ <= tol
  double hplus_stop_tol = 1e-9;
  bool ekeland_replay = false;    // re-solve with the L1 anchor per entry
  unsigned seed = 0;
};

struct SolveResult {
  Vec z;
  bool converged = false;
  std::string message;

  // Multiplier estimates from the augmented Lagrangian.
  std::vector<Vec> defect_multipliers;  // N entries, one per Euler step
  Vec hslack_multipliers;               // N+1, the h+ activity witnesses
  Mat mixed_multipliers;                // N x (#mixed rows); box rows recovered
  Vec affine_a_multipliers, affine_b_multipliers;

  double objective = 0.0;       // penalized objective at z
  double feasibility = 0.0;     // max constraint violation
  double stationarity = 0.0;    // projected criticality
  int outer_iterations = 0;
  long inner_iterations = 0;
};

/// Solves the discretized penalized problem from `init` (layout order).
/// Never silent: a non-converged run returns the best iterate with
/// converged = false and a message.
SolveResult solve_penalized(const DiscreteNLP& nlp, const Vec& init, const SolveOptions& opts);

struct ContinuationRecord {
  double penalty_index = 0.0;
  double objective = 0.0;   // J_i at the solution
  double max_hplus = 0.0;   // state-constraint violation along the solution
  bool converged = false;
  double feasibility = 0.0;
  double stationarity = 0.0;
  int outer_iterations = 0;
  long inner_iterations = 0;

  // Present when a candidate process was supplied.
  std::optional<double> eps_hat;     // J_i(candidate) - J_i(solution)
  std::optional<double> l1_distance; // ||u_i - u_candidate||_L1
  std::optional<bool> ekeland_bound_ok;  // l1 <= sqrt(max(eps_hat,0)) + tol
  std::optional<double> replay_drift;    // anchored re-solve drift (L1)
};

struct ContinuationTrace {
  std::vector<ContinuationRecord> records;
  double final_penalty_index = 0.0;
  SolveResult final;      // solve at the last schedule entry actually run
  bool truncated = false; // an entry failed to converge
};

/// Runs the doubling penalty schedule with warm starts. When `candidate`
/// is given, records the Ekeland gap estimate and the L1 control distance
/// per entry.
ContinuationTrace penalty_continuation(const OCProblem& prob, int N, const SolveOptions& opts,
                                       const Process* candidate = nullptr);

struct OracleOptions {
  int steps = 6;          // coarse grid steps (<= 8 at desk scale)
  int grid_per_dim = 5;   // control grid points per dimension (<= 7)
  double feas_tol = 1e-8;
  long enumeration_cap = 10'000'000;
};

struct OracleResult {
  bool found = false;
  double cost = 0.0;
  Process best;
  long enumerated = 0;
  long feasible = 0;
};

/// Exhaustive enumeration of piecewise-constant control sequences on a
/// coarse grid; Euler simulation; sequences violating the mixed rows, the
/// state constraint or the endpoint sets are discarded. Ties resolve to
/// the lexicographically smallest sequence.
OracleResult brute_force_oracle(const OCProblem& prob, const OracleOptions& opts);

}  // namespace nsmp
