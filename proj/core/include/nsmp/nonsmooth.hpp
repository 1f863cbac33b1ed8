#pragma once

#include <functional>
#include <vector>

#include "nsmp/problem.hpp"
#include "nsmp/types.hpp"

namespace nsmp {

/// Finite generator set whose convex hull approximates a Clarke
/// subdifferential at base_point.
struct GradientBundle {
  Vec base_point;
  std::vector<Vec> generators;
  double radius = 0.0;
  int samples = 0;
  unsigned seed = 0;

  /// Max pairwise generator distance.
  double hull_diameter() const;
  /// Scales every generator by c.
  GradientBundle scaled(double c) const;
  static GradientBundle single(const Vec& g);
};

/// Finitely generated cone {sum_r beta_r ray_r : beta_r >= 0}; an empty
/// ray list is the zero cone.
struct ConeBundle {
  Vec base_point;
  std::vector<Vec> rays;  // unit length (or absent)

  ConeBundle negated() const;
  static ConeBundle zero(const Vec& at);
  /// Product cone in (x_a, x_b)-space from two endpoint cones.
  static ConeBundle product(const ConeBundle& a, const ConeBundle& b);
};

/// Gradient-sampling estimate of the Clarke subdifferential of `func` at
/// `point`: central-difference gradients (step = radius/100) at the base
/// point and at `samples` points drawn uniformly from the radius-ball.
/// Deterministic given the seed.
GradientBundle subdiff_estimate(const std::function<double(const Vec&)>& func, const Vec& point,
                                double radius, int samples, unsigned seed);

struct ProjectionResult {
  double distance = 0.0;
  Vec nearest;  // in (x, u) stacked order
  bool converged = true;
};

/// Euclidean distance from (x, u) to S(t) = {g_j <= 0}, by multi-start
/// projected minimization of the squared distance. Returns 0 with
/// nearest = input when (x, u) is already feasible.
ProjectionResult distance_to_S(const OCProblem& prob, double t, const Vec& x, const Vec& u,
                               unsigned seed = 0);

/// Projection of u onto {u' : g_j(t, x, u') <= 0} with x held fixed
/// (used by the [H2] audit).
ProjectionResult project_control(const OCProblem& prob, double t, const Vec& x, const Vec& u,
                                 unsigned seed = 0);

/// Clarke normal cone to S(t) at (x, u): rays are the (x,u)-gradients of
/// the active rows (|g_j| <= activity_tol). Interior points give the zero
/// cone. Degenerate active gradients (norm < 1e-12) raise an Error.
ConeBundle normal_cone_S(const OCProblem& prob, double t, const Vec& x, const Vec& u,
                         double activity_tol);

struct HullDistanceResult {
  double distance = 0.0;
  Vec weights_a;  // simplex weights over A's generators
  Vec weights_b;  // nonnegative ray weights (cone) or simplex weights (hull)
  Vec witness;    // the attained a - b
  int iterations = 0;
};

/// min over a in hull(A), b in scale_b * B of |point - (a - b)| where B is
/// a cone (rays) or a hull (generators). Solved as a small convex QP by
/// pairwise Frank-Wolfe on the simplex block and exact coordinate descent
/// on the cone block; tolerance ~1e-12 on the optimality gap.
HullDistanceResult hull_distance(const Vec& point, const GradientBundle& A, const ConeBundle& B,
                                 double scale_b = 1.0);
HullDistanceResult hull_distance(const Vec& point, const GradientBundle& A,
                                 const GradientBundle& B, double scale_b = 1.0);
/// Distance from point to hull(A) alone.
HullDistanceResult hull_distance(const Vec& point, const GradientBundle& A);

/// Closed-form limiting normal cone of an endpoint descriptor at `point`
/// (must lie within tol of the set): point -> all of R^n, box -> active
/// faces, affine -> orthogonal complement, free -> {0}.
ConeBundle endpoint_normal_cone(const EndpointDescriptor& desc, const Vec& point, double tol);

/// Default sampling parameters: 32*dim samples at radius 1e-4.
struct SubdiffOptions {
  double radius = 1e-4;
  int samples_per_dim = 32;
  unsigned seed = 0;
};

/// Bundle for x -> h(t, x) at x (uses the analytic gradient when present,
/// collapsing the bundle to a single generator).
GradientBundle state_constraint_subdiff(const OCProblem& prob, double t, const Vec& x,
                                        const SubdiffOptions& opts = {});

}  // namespace nsmp
