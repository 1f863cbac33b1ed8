#include "nsmp/nonsmooth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace nsmp {

double GradientBundle::hull_diameter() const {
  double d = 0.0;
  for (size_t i = 0; i < generators.size(); ++i)
    for (size_t j = i + 1; j < generators.size(); ++j)
      d = std::max(d, (generators[i] - generators[j]).norm());
  return d;
}

GradientBundle GradientBundle::scaled(double c) const {
  GradientBundle out = *this;
  for (auto& g : out.generators) g *= c;
  return out;
}

GradientBundle GradientBundle::single(const Vec& g) {
  GradientBundle b;
  b.base_point = Vec::Zero(g.size());
  b.generators = {g};
  b.samples = 1;
  return b;
}

ConeBundle ConeBundle::negated() const {
  ConeBundle out = *this;
  for (auto& r : out.rays) r = -r;
  return out;
}

ConeBundle ConeBundle::zero(const Vec& at) {
  ConeBundle c;
  c.base_point = at;
  return c;
}

ConeBundle ConeBundle::product(const ConeBundle& a, const ConeBundle& b) {
  const int na = static_cast<int>(a.base_point.size());
  const int nb = static_cast<int>(b.base_point.size());
  ConeBundle out;
  out.base_point.resize(na + nb);
  out.base_point << a.base_point, b.base_point;
  for (const auto& r : a.rays) {
    Vec v = Vec::Zero(na + nb);
    v.head(na) = r;
    out.rays.push_back(v);
  }
  for (const auto& r : b.rays) {
    Vec v = Vec::Zero(na + nb);
    v.tail(nb) = r;
    out.rays.push_back(v);
  }
  return out;
}

GradientBundle subdiff_estimate(const std::function<double(const Vec&)>& func, const Vec& point,
                                double radius, int samples, unsigned seed) {
  if (!(radius > 0)) throw Error("subdiff_estimate: radius must be positive");
  if (samples < 1) throw Error("subdiff_estimate: need at least one sample");
  const double step = radius / 100.0;
  const int d = static_cast<int>(point.size());
  Rng rng(0x5eed0000ULL + seed);

  GradientBundle bundle;
  bundle.base_point = point;
  bundle.radius = radius;
  bundle.samples = samples;
  bundle.seed = seed;
  bundle.generators.reserve(static_cast<size_t>(samples));

  for (int s = 0; s < samples; ++s) {
    Vec y = (s == 0) ? point : rng.in_ball(point, radius);
    Vec g(d);
    Vec z = y;
    for (int i = 0; i < d; ++i) {
      double save = z[i];
      z[i] = save + step;
      double fp = func(z);
      z[i] = save - step;
      double fm = func(z);
      z[i] = save;
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        throw Error("subdiff_estimate: evaluation failure near sample " + std::to_string(s) +
                    " at coordinate " + std::to_string(i));
      }
      g[i] = (fp - fm) / (2.0 * step);
    }
    bundle.generators.push_back(std::move(g));
  }
  return bundle;
}

namespace {

// Augmented-Lagrangian projection of z0 onto {z : g_j(z) <= 0}. The
// subproblems are smooth and low-dimensional; spectral projected
// gradient with a nonmonotone Armijo safeguard is enough.
struct ProjectionProblem {
  std::function<double(const Vec&, int)> g;      // row value
  std::function<Vec(const Vec&, int)> g_grad;    // row gradient
  int rows = 0;
};

bool project_point(const ProjectionProblem& pp, const Vec& z0, const Vec& start, Vec& out,
                   double tol) {
  const int d = static_cast<int>(z0.size());
  Vec nu = Vec::Zero(pp.rows);
  double rho = 10.0;
  Vec z = start;

  auto al_value_grad = [&](const Vec& zz, Vec& grad) {
    grad = zz - z0;
    double val = 0.5 * (zz - z0).squaredNorm();
    for (int j = 0; j < pp.rows; ++j) {
      double gj = pp.g(zz, j);
      double t = nu[j] + rho * gj;
      if (t > 0) {
        val += (t * t - nu[j] * nu[j]) / (2.0 * rho);
        grad += t * pp.g_grad(zz, j);
      } else {
        val -= nu[j] * nu[j] / (2.0 * rho);
      }
    }
    return val;
  };

  for (int outer = 0; outer < 40; ++outer) {
    // Inner: Barzilai-Borwein descent.
    Vec grad(d), grad_prev(d), z_prev(d);
    double f = al_value_grad(z, grad);
    double step = 1.0 / std::max(1.0, grad.norm());
    double f_best = f;
    for (int it = 0; it < 400; ++it) {
      if (grad.lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + std::abs(f))) break;
      z_prev = z;
      grad_prev = grad;
      // Backtracking from the BB step.
      double a = step;
      for (int bt = 0; bt < 40; ++bt) {
        Vec zt = z - a * grad;
        Vec gt(d);
        double ft = al_value_grad(zt, gt);
        if (ft <= f - 1e-4 * a * grad.squaredNorm()) {
          z = zt;
          f = ft;
          grad = gt;
          break;
        }
        a *= 0.5;
      }
      if ((z - z_prev).norm() == 0) break;
      Vec sv = z - z_prev, yv = grad - grad_prev;
      double sy = sv.dot(yv);
      step = (sy > 1e-300) ? sv.squaredNorm() / sy : 1.0;
      step = std::clamp(step, 1e-12, 1e12);
      f_best = std::min(f_best, f);
    }
    // Multiplier update and feasibility check.
    double viol = 0.0;
    for (int j = 0; j < pp.rows; ++j) {
      double gj = pp.g(z, j);
      viol = std::max(viol, gj);
      nu[j] = std::max(0.0, nu[j] + rho * gj);
    }
    if (viol <= tol) {
      out = z;
      return true;
    }
    if (outer % 2 == 1) rho *= 5.0;
  }
  out = z;
  return false;
}

}  // namespace

ProjectionResult distance_to_S(const OCProblem& prob, double t, const Vec& x, const Vec& u,
                               unsigned seed) {
  const int n = prob.n, k = prob.k;
  Vec z0(n + k);
  z0 << x, u;

  MixedResidual res = mixed_residual(prob, t, x, u);
  ProjectionResult out;
  if (res.max_value <= 0) {
    out.distance = 0.0;
    out.nearest = z0;
    return out;
  }

  ProjectionProblem pp;
  pp.rows = static_cast<int>(prob.mixed_constraints.size());
  pp.g = [&](const Vec& z, int j) {
    return prob.mixed_constraints[static_cast<size_t>(j)].value(t, z.head(n), z.tail(k));
  };
  pp.g_grad = [&](const Vec& z, int j) {
    Vec g(n + k);
    g.head(n) = prob.mixed_grad_x(j, t, z.head(n), z.tail(k));
    g.tail(k) = prob.mixed_grad_u(j, t, z.head(n), z.tail(k));
    return g;
  };

  // Multi-start: the query point plus seeded perturbations.
  Rng rng(0xd157a2ceULL + seed);
  double best = std::numeric_limits<double>::infinity();
  Vec best_z;
  bool any = false;
  const int starts = 4;
  for (int s = 0; s < starts; ++s) {
    Vec start = (s == 0) ? z0 : rng.in_ball(z0, 0.5 * (1.0 + z0.norm()));
    Vec z;
    if (!project_point(pp, z0, start, z, 1e-12)) continue;
    double d = (z - z0).norm();
    if (d < best) {
      best = d;
      best_z = z;
      any = true;
    }
  }
  if (!any) {
    out.converged = false;
    out.distance = std::numeric_limits<double>::infinity();
    out.nearest = z0;
    return out;
  }
  out.distance = best;
  out.nearest = best_z;
  return out;
}

ProjectionResult project_control(const OCProblem& prob, double t, const Vec& x, const Vec& u,
                                 unsigned seed) {
  const int k = prob.k;
  MixedResidual res = mixed_residual(prob, t, x, u);
  ProjectionResult out;
  if (res.max_value <= 0) {
    out.distance = 0.0;
    out.nearest = u;
    return out;
  }

  ProjectionProblem pp;
  pp.rows = static_cast<int>(prob.mixed_constraints.size());
  pp.g = [&](const Vec& z, int j) {
    return prob.mixed_constraints[static_cast<size_t>(j)].value(t, x, z);
  };
  pp.g_grad = [&](const Vec& z, int j) { return prob.mixed_grad_u(j, t, x, z); };

  Rng rng(0xc0117a01ULL + seed);
  double best = std::numeric_limits<double>::infinity();
  Vec best_z;
  bool any = false;
  for (int s = 0; s < 4; ++s) {
    Vec start = (s == 0) ? u : rng.in_ball(u, 0.5 * (1.0 + u.norm()));
    Vec z;
    if (!project_point(pp, u, start, z, 1e-12)) continue;
    double d = (z - u).norm();
    if (d < best) {
      best = d;
      best_z = z;
      any = true;
    }
  }
  if (!any) {
    out.converged = false;
    out.distance = std::numeric_limits<double>::infinity();
    out.nearest = u;
    return out;
  }
  out.distance = best;
  out.nearest = best_z;
  return out;
}

ConeBundle normal_cone_S(const OCProblem& prob, double t, const Vec& x, const Vec& u,
                         double activity_tol) {
  const int n = prob.n, k = prob.k;
  Vec base(n + k);
  base << x, u;
  ConeBundle cone;
  cone.base_point = base;
  MixedResidual res = mixed_residual(prob, t, x, u);
  for (int j = 0; j < res.values.size(); ++j) {
    if (std::abs(res.values[j]) > activity_tol) continue;
    Vec g(n + k);
    g.head(n) = prob.mixed_grad_x(j, t, x, u);
    g.tail(k) = prob.mixed_grad_u(j, t, x, u);
    double nrm = g.norm();
    if (nrm < 1e-12)
      throw Error("normal_cone_S: degenerate active gradient for constraint " + std::to_string(j));
    cone.rays.push_back(g / nrm);
  }
  return cone;
}

namespace {

// Shared QP kernel: min over alpha in simplex, beta >= 0 (cone) or beta in
// simplex (hull) of |point - A alpha + R beta|^2.
HullDistanceResult hull_qp(const Vec& point, const std::vector<Vec>& A, const std::vector<Vec>& R,
                           bool beta_simplex) {
  const int sA = static_cast<int>(A.size());
  const int sB = static_cast<int>(R.size());
  if (sA == 0) throw Error("hull_distance: bundle A is empty");

  Vec alpha = Vec::Zero(sA);
  alpha[0] = 1.0;
  Vec beta = Vec::Zero(std::max(sB, 0));
  if (beta_simplex && sB > 0) beta[0] = 1.0;

  auto residual = [&]() {
    Vec r = point;
    for (int i = 0; i < sA; ++i)
      if (alpha[i] != 0.0) r -= alpha[i] * A[static_cast<size_t>(i)];
    for (int j = 0; j < sB; ++j)
      if (beta[j] != 0.0) r += beta[j] * R[static_cast<size_t>(j)];
    return r;
  };

  Vec r = residual();
  const int max_iter = std::max(60, 10 * (sA + sB));
  int it = 0;
  for (; it < max_iter; ++it) {
    double improved = 0.0;

    // Pairwise Frank-Wolfe step on the alpha simplex: F = 1/2 |r|^2,
    // dF/dalpha_i = -a_i . r; move mass from the worst active vertex to
    // the best vertex with exact line search.
    if (sA > 1) {
      int best = 0, worst = -1;
      double best_v = std::numeric_limits<double>::infinity();
      double worst_v = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < sA; ++i) {
        double v = -A[static_cast<size_t>(i)].dot(r);
        if (v < best_v) {
          best_v = v;
          best = i;
        }
        if (alpha[i] > 0 && v > worst_v) {
          worst_v = v;
          worst = i;
        }
      }
      if (worst >= 0 && worst != best) {
        Vec dir = A[static_cast<size_t>(worst)] - A[static_cast<size_t>(best)];  // r(gamma) = r + gamma*dir
        double denom = dir.squaredNorm();
        if (denom > 0) {
          double gamma = -r.dot(dir) / denom;
          gamma = std::clamp(gamma, 0.0, alpha[worst]);
          if (gamma > 0) {
            alpha[worst] -= gamma;
            alpha[best] += gamma;
            double f0 = 0.5 * r.squaredNorm();
            r += gamma * dir;
            improved += f0 - 0.5 * r.squaredNorm();
          }
        }
      }
    }

    // Cone block: exact cyclic coordinate descent with nonnegativity.
    if (sB > 0 && !beta_simplex) {
      for (int j = 0; j < sB; ++j) {
        const Vec& rr = R[static_cast<size_t>(j)];
        double denom = rr.squaredNorm();
        if (denom <= 0) continue;
        // r = c + beta_j * rr; minimize over beta_j >= 0.
        double cur = beta[j];
        double opt = cur - r.dot(rr) / denom;
        opt = std::max(0.0, opt);
        double delta = opt - cur;
        if (delta != 0.0) {
          double f0 = 0.5 * r.squaredNorm();
          beta[j] = opt;
          r += delta * rr;
          improved += f0 - 0.5 * r.squaredNorm();
        }
      }
    }
    if (sB > 1 && beta_simplex) {
      int best = 0, worst = -1;
      double best_v = std::numeric_limits<double>::infinity();
      double worst_v = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < sB; ++j) {
        double v = R[static_cast<size_t>(j)].dot(r);
        if (v < best_v) {
          best_v = v;
          best = j;
        }
        if (beta[j] > 0 && v > worst_v) {
          worst_v = v;
          worst = j;
        }
      }
      if (worst >= 0 && worst != best) {
        Vec dir = R[static_cast<size_t>(best)] - R[static_cast<size_t>(worst)];
        double denom = dir.squaredNorm();
        if (denom > 0) {
          double gamma = -r.dot(dir) / denom;
          gamma = std::clamp(gamma, 0.0, beta[worst]);
          if (gamma > 0) {
            beta[worst] -= gamma;
            beta[best] += gamma;
            double f0 = 0.5 * r.squaredNorm();
            r += gamma * dir;
            improved += f0 - 0.5 * r.squaredNorm();
          }
        }
      }
    }

    if (improved <= 1e-26 * (1.0 + r.squaredNorm())) break;
  }

  HullDistanceResult out;
  out.distance = r.norm();
  out.weights_a = alpha;
  out.weights_b = beta;
  out.witness = point - r;
  out.iterations = it;
  return out;
}

std::vector<Vec> scaled_generators(const std::vector<Vec>& gens, double c) {
  std::vector<Vec> out;
  out.reserve(gens.size());
  for (const auto& g : gens) out.push_back(c * g);
  return out;
}

}  // namespace

HullDistanceResult hull_distance(const Vec& point, const GradientBundle& A, const ConeBundle& B,
                                 double scale_b) {
  return hull_qp(point, A.generators, scaled_generators(B.rays, scale_b), false);
}

HullDistanceResult hull_distance(const Vec& point, const GradientBundle& A,
                                 const GradientBundle& B, double scale_b) {
  if (B.generators.empty()) return hull_qp(point, A.generators, {}, false);
  return hull_qp(point, A.generators, scaled_generators(B.generators, scale_b), true);
}

HullDistanceResult hull_distance(const Vec& point, const GradientBundle& A) {
  return hull_qp(point, A.generators, {}, false);
}

ConeBundle endpoint_normal_cone(const EndpointDescriptor& desc, const Vec& point, double tol) {
  if (!desc.contains(point, tol))
    throw Error("endpoint_normal_cone: point not in the endpoint set within tol");
  const int n = static_cast<int>(point.size());
  ConeBundle cone;
  cone.base_point = point;
  switch (desc.kind) {
    case EndpointKind::Point:
      for (int i = 0; i < n; ++i) {
        Vec e = Vec::Zero(n);
        e[i] = 1.0;
        cone.rays.push_back(e);
        cone.rays.push_back(-e);
      }
      break;
    case EndpointKind::Box:
      for (int i = 0; i < n; ++i) {
        Vec e = Vec::Zero(n);
        if (std::abs(point[i] - desc.lower[i]) <= tol) {
          e[i] = -1.0;
          cone.rays.push_back(e);
          e = Vec::Zero(n);
        }
        if (std::abs(point[i] - desc.upper[i]) <= tol) {
          e[i] = 1.0;
          cone.rays.push_back(e);
        }
      }
      break;
    case EndpointKind::Affine: {
      // Orthogonal complement of span(basis) via full QR.
      Eigen::HouseholderQR<Mat> qr(desc.basis);
      Mat Q = qr.householderQ() * Mat::Identity(n, n);
      const int rank = static_cast<int>(desc.basis.cols());
      for (int i = rank; i < n; ++i) {
        cone.rays.push_back(Q.col(i));
        cone.rays.push_back(-Q.col(i));
      }
      break;
    }
    case EndpointKind::Free:
      break;
  }
  return cone;
}

GradientBundle state_constraint_subdiff(const OCProblem& prob, double t, const Vec& x,
                                        const SubdiffOptions& opts) {
  if (prob.state_constraint.grad_x) {
    GradientBundle b = GradientBundle::single(prob.state_constraint.grad_x(t, x));
    b.base_point = x;
    return b;
  }
  const int samples = opts.samples_per_dim * static_cast<int>(x.size());
  return subdiff_estimate([&](const Vec& xx) { return prob.state_constraint.value(t, xx); }, x,
                          opts.radius, samples, opts.seed);
}

}  // namespace nsmp
