#pragma once

#include <functional>
#include <string>

#include "nsmp/multipliers.hpp"
#include "nsmp/problem.hpp"

namespace nsmp {

/// Closed-form optimum of a reference problem, sampled on demand.
struct ReferenceSolution {
  std::function<Vec(double)> state;    // xbar(t)
  std::function<Vec(double)> control;  // ubar(t), value used on [t, t+dt)
  double optimal_cost = 0.0;

  /// Analytic process sampled on a uniform grid with N steps.
  Process sample(const OCProblem& prob, int N) const;

  /// Closed-form multiplier pack on the same grid (lambda0 = 1 scale).
  std::function<MultiplierPack(const Process&)> pack;
};

struct ReferenceProblem {
  OCProblem problem;
  ReferenceSolution solution;
};

/// Registered ids: "REF-A", "REF-B", "REF-C".
///
///   REF-A  min x(1),  xdot = u, -1 <= u <= 1, h = -1,   x(0) = 0, x(1) free
///   REF-B  min x(2),  xdot = u, -1 <= u <= 1, h = -x,   x(0) = 1, x(2) free
///   REF-C  min -x(1), xdot = u, 0 <= u <= 1-x, h = -1,  x(0) = 0, x(1) free
ReferenceProblem load_reference_problem(const std::string& id);

bool is_reference_id(const std::string& id);

}  // namespace nsmp
