#include <algorithm>
#include <cmath>
#include <limits>

#include "nsmp/checker.hpp"

namespace nsmp {

namespace {

std::vector<int> audited_nodes(int N, int cap = 25) {
  std::vector<int> idx;
  int stride = std::max(1, N / cap);
  for (int m = 0; m < N; m += stride) idx.push_back(m);
  return idx;
}

bool feasible_u(const OCProblem& prob, double t, const Vec& x, const Vec& u) {
  return mixed_residual(prob, t, x, u).max_value <= 0;
}

// Velocity-set convexity [C]: midpoints of sampled velocity pairs must be
// close to some attainable velocity.
AuditRecord audit_convexity(const OCProblem& prob, const Process& process,
                            const std::vector<int>& nodes, int samples, unsigned seed) {
  AuditRecord rec;
  rec.name = "C";
  const int k = prob.k;
  const int grid_per_dim =
      std::clamp(static_cast<int>(std::floor(std::pow(2.0e5, 1.0 / k))), 3, 2001);
  Rng rng(0xc0471ULL + seed);
  double max_gap = 0.0;
  bool starved = true;

  for (int m : nodes) {
    const double t = process.grid[m];
    const Vec& x = process.states[static_cast<size_t>(m)];
    auto [lo, hi] = prob.control_sampling_box(t, x);

    // Attainable velocities on a dense feasible control grid.
    std::vector<Vec> velocities;
    std::vector<int> gidx(static_cast<size_t>(k), 0);
    while (true) {
      Vec u(k);
      for (int c = 0; c < k; ++c)
        u[c] = grid_per_dim == 1 ? 0.5 * (lo[c] + hi[c])
                                 : lo[c] + (hi[c] - lo[c]) * gidx[static_cast<size_t>(c)] /
                                               (grid_per_dim - 1);
      if (feasible_u(prob, t, x, u)) velocities.push_back(prob.dynamics.value(t, x, u));
      int pos = k - 1;
      while (pos >= 0) {
        if (++gidx[static_cast<size_t>(pos)] < grid_per_dim) break;
        gidx[static_cast<size_t>(pos)] = 0;
        --pos;
      }
      if (pos < 0) break;
    }
    if (velocities.empty()) continue;

    // Pairs: feasible box corners first (they witness nonconvexity of
    // curved velocity sets), then random feasible pairs.
    std::vector<Vec> pool;
    for (int corner = 0; corner < (1 << std::min(k, 10)); ++corner) {
      Vec u(k);
      for (int c = 0; c < k; ++c) u[c] = (corner >> c) & 1 ? hi[c] : lo[c];
      if (feasible_u(prob, t, x, u)) pool.push_back(u);
      if (pool.size() >= 8) break;
    }
    const int want = std::max(4, samples / 4);
    for (int a = 0; a < 50 * want && static_cast<int>(pool.size()) < want + 8; ++a) {
      Vec u(k);
      for (int c = 0; c < k; ++c) u[c] = rng.uniform(lo[c], hi[c]);
      if (feasible_u(prob, t, x, u)) pool.push_back(u);
    }
    if (pool.size() < 2) continue;
    starved = false;

    for (size_t i = 0; i < pool.size(); ++i) {
      for (size_t j = i + 1; j < pool.size(); ++j) {
        Vec mid = 0.5 * (prob.dynamics.value(t, x, pool[i]) + prob.dynamics.value(t, x, pool[j]));
        double gap = std::numeric_limits<double>::infinity();
        for (const auto& v : velocities) gap = std::min(gap, (mid - v).norm());
        if (gap > max_gap) {
          max_gap = gap;
          rec.worst_point.resize(1 + 2 * k);
          rec.worst_point[0] = t;
          rec.worst_point.segment(1, k) = pool[i];
          rec.worst_point.segment(1 + k, k) = pool[j];
        }
      }
    }
  }
  rec.constants["gap"] = max_gap;
  if (starved) {
    rec.verdict = Verdict::Fail;
    rec.note = "sampler starvation";
  }
  return rec;
}

AuditRecord audit_h1(const OCProblem& prob, const Process& process, const std::vector<int>& nodes,
                     int samples, unsigned seed) {
  AuditRecord rec;
  rec.name = "H1";
  Rng rng(0x481ULL + seed);
  const double eps = prob.tube_radius;
  double k_h = 0.0;

  for (int m : nodes) {
    const double t = process.grid[m];
    const Vec& xb = process.states[static_cast<size_t>(m)];
    for (int s = 0; s < std::max(4, samples / 4); ++s) {
      Vec x1 = rng.in_ball(xb, eps);
      Vec x2 = rng.in_ball(xb, eps);
      double dx = (x1 - x2).norm();
      if (dx < 1e-12) continue;
      k_h = std::max(k_h,
                     std::abs(prob.state_constraint.value(t, x1) -
                              prob.state_constraint.value(t, x2)) /
                         dx);
    }
  }

  // Continuity of t -> h(t, x) at fixed x, probed on the grid and at half
  // steps; a genuine jump does not shrink under refinement.
  auto max_jump = [&](int refine) {
    double jump = 0.0;
    const int N = process.steps();
    for (int s = 0; s < 4; ++s) {
      Vec x = rng.in_ball(process.states[static_cast<size_t>((s * N) / 4)], 0.5 * eps);
      double steps = N * refine;
      double dt = (process.grid[N] - process.grid[0]) / steps;
      double prev = prob.state_constraint.value(process.grid[0], x);
      for (int i = 1; i <= static_cast<int>(steps); ++i) {
        double cur = prob.state_constraint.value(process.grid[0] + i * dt, x);
        jump = std::max(jump, std::abs(cur - prev));
        prev = cur;
      }
    }
    return jump;
  };
  double jump_coarse = max_jump(1);
  double jump_fine = max_jump(2);

  rec.constants["k_h"] = k_h;
  rec.constants["t_jump"] = jump_coarse;
  rec.constants["t_jump_refined"] = jump_fine;
  bool continuous = jump_fine <= 0.75 * jump_coarse + 1e-9;
  rec.verdict = (std::isfinite(k_h) && continuous) ? Verdict::Pass : Verdict::Fail;
  if (!continuous) rec.note = "t -> h(t,x) jump does not shrink under refinement";
  return rec;
}

AuditRecord audit_h2(const OCProblem& prob, const Process& process, const std::vector<int>& nodes,
                     int samples, unsigned seed) {
  AuditRecord rec;
  rec.name = "H2";
  Rng rng(0x482ULL + seed);
  const double delta = prob.tube_radius / 8.0;
  double modulus = 0.0;
  bool starved = true;

  for (int m : nodes) {
    const double t = process.grid[m];
    const Vec& xb = process.states[static_cast<size_t>(m)];
    auto [lo, hi] = prob.control_sampling_box(t, xb);
    int got = 0;
    for (int a = 0; a < 40 * std::max(2, samples / 8) && got < std::max(2, samples / 8); ++a) {
      Vec u(prob.k);
      for (int c = 0; c < prob.k; ++c) u[c] = rng.uniform(lo[c], hi[c]);
      if (!feasible_u(prob, t, xb, u)) continue;
      ++got;
      starved = false;
      Vec x_pert = xb + delta * rng.direction(prob.n);
      ProjectionResult proj = project_control(prob, t, x_pert, u, seed);
      double ratio = proj.converged ? proj.distance / delta
                                    : std::numeric_limits<double>::infinity();
      if (ratio > modulus) {
        modulus = ratio;
        rec.worst_point.resize(1 + prob.k);
        rec.worst_point[0] = t;
        rec.worst_point.tail(prob.k) = u;
      }
    }
  }
  rec.constants["modulus"] = modulus;
  if (starved) {
    rec.verdict = Verdict::Fail;
    rec.note = "sampler starvation";
  }
  return rec;
}

AuditRecord audit_lipschitz(const OCProblem& prob, const Process& process,
                            const std::vector<int>& nodes, int samples, unsigned seed) {
  AuditRecord rec;
  rec.name = "L*eps";
  Rng rng(0x15cULL + seed);
  const double eps = prob.tube_radius;
  double kx_f = 0.0, ku_f = 0.0, bound_f = 0.0;
  double kx_L = 0.0, ku_L = 0.0;
  bool starved = true;

  for (int m : nodes) {
    const double t = process.grid[m];
    const Vec& xb = process.states[static_cast<size_t>(m)];
    auto [lo, hi] = prob.control_sampling_box(t, xb);
    auto rand_u = [&]() {
      Vec u(prob.k);
      for (int c = 0; c < prob.k; ++c) u[c] = rng.uniform(lo[c], hi[c]);
      return u;
    };
    const int want = std::max(4, samples / 4);
    for (int s = 0; s < 12 * want; ++s) {
      // x-pair with a control feasible at both points.
      Vec x1 = rng.in_ball(xb, eps), x2 = rng.in_ball(xb, eps);
      Vec u = rand_u();
      if (feasible_u(prob, t, x1, u) && feasible_u(prob, t, x2, u)) {
        double dx = (x1 - x2).norm();
        if (dx > 1e-10) {
          starved = false;
          kx_f = std::max(kx_f, (prob.dynamics.value(t, x1, u) - prob.dynamics.value(t, x2, u))
                                        .norm() /
                                    dx);
          if (prob.running_cost)
            kx_L = std::max(kx_L, std::abs(prob.running_cost->value(t, x1, u) -
                                           prob.running_cost->value(t, x2, u)) /
                                      dx);
        }
      }
      // u-pair at a common tube point.
      Vec x = rng.in_ball(xb, eps);
      Vec u1 = rand_u(), u2 = rand_u();
      if (feasible_u(prob, t, x, u1) && feasible_u(prob, t, x, u2)) {
        double du = (u1 - u2).norm();
        if (du > 1e-10) {
          starved = false;
          ku_f = std::max(ku_f, (prob.dynamics.value(t, x, u1) - prob.dynamics.value(t, x, u2))
                                        .norm() /
                                    du);
          if (prob.running_cost)
            ku_L = std::max(ku_L, std::abs(prob.running_cost->value(t, x, u1) -
                                           prob.running_cost->value(t, x, u2)) /
                                      du);
        }
      }
      // (boundoff): velocity bound along the candidate state.
      Vec uu = rand_u();
      if (feasible_u(prob, t, xb, uu))
        bound_f = std::max(bound_f, prob.dynamics.value(t, xb, uu).norm());
    }
  }
  rec.constants["kx_f"] = kx_f;
  rec.constants["ku_f"] = ku_f;
  rec.constants["bound_f"] = bound_f;
  if (prob.running_cost) {
    rec.constants["kx_L"] = kx_L;
    rec.constants["ku_L"] = ku_L;
  }
  rec.verdict = starved ? Verdict::Fail : Verdict::Pass;
  if (starved) rec.note = "sampler starvation";
  return rec;
}

AuditRecord audit_bounded_slope(const OCProblem& prob, const Process& process,
                                const std::vector<int>& nodes, int samples, unsigned seed) {
  AuditRecord rec;
  rec.name = "BS*eps";
  Rng rng(0xb5ULL + seed);
  const double eps = prob.tube_radius;
  double k_S = 0.0;
  bool starved = true;
  bool violated = false;

  for (int m : nodes) {
    const double t = process.grid[m];
    const Vec& xb = process.states[static_cast<size_t>(m)];
    auto [lo, hi] = prob.control_sampling_box(t, xb);
    const int want = std::max(4, samples / 4);
    int got = 0;
    for (int a = 0; a < 60 * want && got < want; ++a) {
      // Exterior point near the tube; its projection supplies a proximal
      // normal by construction.
      Vec x_e = rng.in_ball(xb, 0.9 * eps);
      Vec u_e(prob.k);
      for (int c = 0; c < prob.k; ++c) {
        double w = hi[c] - lo[c];
        u_e[c] = rng.uniform(lo[c] - 0.75 * w, hi[c] + 0.75 * w);
      }
      if (mixed_residual(prob, t, x_e, u_e).max_value <= 1e-8) continue;
      ProjectionResult proj = distance_to_S(prob, t, x_e, u_e, seed);
      if (!proj.converged || proj.distance <= 1e-10) continue;
      Vec x_p = proj.nearest.head(prob.n);
      if ((x_p - xb).norm() > eps) continue;  // outside S^eps_*
      Vec z_e(prob.n + prob.k);
      z_e << x_e, u_e;
      Vec normal = (z_e - proj.nearest) / proj.distance;
      double alpha = normal.head(prob.n).norm();
      double beta = normal.tail(prob.k).norm();
      ++got;
      starved = false;
      if (beta <= 1e-10) {
        if (alpha > 1e-8) {
          violated = true;
          rec.worst_point = proj.nearest;
        }
        continue;
      }
      if (alpha / beta > k_S) {
        k_S = alpha / beta;
        rec.worst_point = proj.nearest;
      }
    }
  }
  rec.constants["k_S_estimate"] = k_S;
  if (violated) {
    rec.verdict = Verdict::Fail;
    rec.note = "proximal normal with |beta| ~ 0 and |alpha| > 0";
  } else if (starved) {
    rec.verdict = Verdict::Fail;
    rec.note = "sampler starvation";
  } else {
    rec.verdict = Verdict::Pass;
  }
  return rec;
}

AuditRecord audit_compactness(const OCProblem& prob, const Process& process,
                              const std::vector<int>& nodes, int samples, unsigned seed) {
  AuditRecord rec;
  rec.name = "CS*eps";
  Rng rng(0xc5ULL + seed);
  const double eps = prob.tube_radius;
  double c_hat = 0.0;
  bool escaped = false;

  for (int m : nodes) {
    const double t = process.grid[m];
    const Vec& xb = process.states[static_cast<size_t>(m)];
    auto [lo, hi] = prob.control_sampling_box(t, xb);
    for (int s = 0; s < std::max(8, samples / 2); ++s) {
      Vec x = rng.in_ball(xb, eps);
      Vec u(prob.k);
      for (int c = 0; c < prob.k; ++c) u[c] = rng.uniform(lo[c], hi[c]);
      if (!feasible_u(prob, t, x, u)) continue;
      Vec z(prob.n + prob.k);
      z << x, u;
      c_hat = std::max(c_hat, z.norm());
    }
    // Escape probe: feasible controls far outside the search box defeat
    // the integrable bound c(t).
    for (int c = 0; c < prob.k; ++c) {
      for (int sgn = -1; sgn <= 1; sgn += 2) {
        Vec u = 0.5 * (lo + hi);
        u[c] = (sgn > 0 ? hi[c] : lo[c]) + sgn * 8.0 * std::max(1.0, hi[c] - lo[c]);
        if (feasible_u(prob, t, xb, u)) {
          escaped = true;
          rec.worst_point = u;
        }
      }
    }
  }
  rec.constants["c_hat"] = c_hat;
  rec.verdict = escaped ? Verdict::Fail : Verdict::Pass;
  if (escaped) rec.note = "feasible control escaped the search box";
  return rec;
}

}  // namespace

void apply_audit_thresholds(AuditResult& audits, const AuditThresholds& thr) {
  for (auto& rec : audits.records) {
    if (rec.name == "C" && rec.note.empty())
      rec.verdict = rec.constants["gap"] <= thr.convexity_gap ? Verdict::Pass : Verdict::Fail;
    if (rec.name == "H2" && rec.note.empty())
      rec.verdict = rec.constants["modulus"] <= thr.h2_modulus ? Verdict::Pass : Verdict::Fail;
  }
  audits.all_pass = true;
  for (const auto& rec : audits.records)
    if (rec.verdict == Verdict::Fail) audits.all_pass = false;
}

AuditResult audit_hypotheses(const OCProblem& prob, const Process& process, int samples,
                             unsigned seed) {
  AuditResult out;
  std::vector<int> nodes = audited_nodes(process.steps());
  out.records.push_back(audit_convexity(prob, process, nodes, samples, seed));
  out.records.push_back(audit_h1(prob, process, nodes, samples, seed));
  out.records.push_back(audit_h2(prob, process, nodes, samples, seed));
  out.records.push_back(audit_lipschitz(prob, process, nodes, samples, seed));
  out.records.push_back(audit_bounded_slope(prob, process, nodes, samples, seed));
  out.records.push_back(audit_compactness(prob, process, nodes, samples, seed));

  double k_S = 0.0, kx_f = 0.0, ku_f = 0.0;
  for (const auto& rec : out.records) {
    if (rec.name == "BS*eps") k_S = rec.constants.count("k_S_estimate") ? rec.constants.at("k_S_estimate") : 0.0;
    if (rec.name == "L*eps") {
      kx_f = rec.constants.count("kx_f") ? rec.constants.at("kx_f") : 0.0;
      ku_f = rec.constants.count("ku_f") ? rec.constants.at("ku_f") : 0.0;
    }
  }
  out.K_default = k_S * (kx_f + ku_f) + kx_f;
  apply_audit_thresholds(out, AuditThresholds{});
  return out;
}

}  // namespace nsmp
