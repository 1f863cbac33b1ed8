// Acceptance suite: end-to-end checks at pinned tolerances, one verdict
// line per criterion. Exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nsmp/checker.hpp"
#include "nsmp/io.hpp"
#include "nsmp/multipliers.hpp"
#include "nsmp/nonsmooth.hpp"
#include "nsmp/reference_problems.hpp"
#include "nsmp/solver.hpp"
#include "test_support.hpp"

using namespace nsmp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int id;
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<Outcome> outcomes;

void record(int id, const std::string& name, bool pass, const std::string& detail) {
  outcomes.push_back({id, name, pass, detail});
  std::printf("[%s] criterion %d (%s): %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct PipelineRun {
  Process process;
  MultiplierPack pack;  // normalized
  ContinuationTrace trace;
  double runtime = 0.0;
};

PipelineRun run_pipeline(const std::string& id, int N, double penalty_max = 16384.0,
                         bool stop_on_feasible = true) {
  auto t0 = std::chrono::steady_clock::now();
  auto ref = load_reference_problem(id);
  SolveOptions opts;
  opts.penalty_max = penalty_max;
  opts.stop_on_feasible = stop_on_feasible;
  PipelineRun run;
  run.trace = penalty_continuation(ref.problem, N, opts);
  DiscreteNLP nlp = discretize(ref.problem, N);
  run.process = nlp.to_process(run.trace.final.z);
  run.pack = extract_pack(ref.problem, run.process, run.trace.final,
                          run.trace.final_penalty_index);
  normalize_pack(run.pack);
  run.runtime = seconds_since(t0);
  return run;
}

void criterion_1_reference_recovery() {
  bool pass = true;
  std::string detail;
  struct Case {
    const char* id;
    int N;
  } cases[] = {{"REF-A", 50}, {"REF-C", 200}};
  for (const auto& c : cases) {
    auto ref = load_reference_problem(c.id);
    PipelineRun run = run_pipeline(c.id, c.N);
    double cost_err = std::abs(run.trace.final.objective - ref.solution.optimal_cost);
    double sup = 0.0;
    for (int m = 0; m <= c.N; ++m)
      sup = std::max(sup, (run.process.states[static_cast<size_t>(m)] -
                           ref.solution.state(run.process.grid[m]))
                              .lpNorm<Eigen::Infinity>());
    bool ok = run.trace.final.converged && cost_err <= 5e-3 && sup <= 1e-2 && run.runtime < 10.0;
    pass = pass && ok;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s cost err %.2e, sup err %.2e, %.2fs; ", c.id, cost_err,
                  sup, run.runtime);
    detail += buf;
  }
  record(1, "reference recovery", pass, detail);
}

void criterion_2_penalization_path() {
  auto t0 = std::chrono::steady_clock::now();
  auto ref = load_reference_problem("REF-B");
  SolveOptions opts;
  opts.penalty_max = 16384.0;  // schedule 1, 2, ..., 2^14
  opts.stop_on_feasible = false;
  ContinuationTrace trace = penalty_continuation(ref.problem, 200, opts);
  double rt = seconds_since(t0);

  bool monotone = true;
  double prev = -1e300;
  for (const auto& rec : trace.records) {
    if (rec.objective < prev - 1e-6) monotone = false;
    prev = rec.objective;
  }
  double final_h = trace.records.back().max_hplus;
  double final_j = std::abs(trace.records.back().objective);
  bool pass = !trace.truncated && trace.records.size() == 15 && monotone && final_h <= 1e-3 &&
              final_j <= 5e-3 && rt < 60.0;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "%zu entries, monotone %d, final max h+ %.2e, |J_final| %.2e, %.1fs",
                trace.records.size(), monotone, final_h, final_j, rt);
  record(2, "penalization path [IH]", pass, buf);
}

void criterion_3_measure_structure() {
  PipelineRun run = run_pipeline("REF-B", 200);
  auto ref = load_reference_problem("REF-B");
  CheckOptions opts;
  auto [sel, sup] = check_measure_conditions(ref.problem, run.process, run.pack, opts);
  double lambda0 = run.pack.lambda0;
  double atom = run.pack.measure.endpoint_atom;
  double jump = (run.pack.q_b - run.pack.q.back()).lpNorm<Eigen::Infinity>();
  double expect = std::abs(run.pack.gamma.back()[0] * atom);
  bool pass = sel.max_residual <= 1e-3 && sup.max_residual <= 1e-3 &&
              std::abs(atom - lambda0) <= 0.05 * lambda0 && std::abs(jump - expect) <= 1e-10;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "support %.2e, selection %.2e, atom %.4f vs lambda0 %.4f, jump defect %.1e",
                sup.max_residual, sel.max_residual, atom, lambda0, std::abs(jump - expect));
  record(3, "measure structure (v)/(vi)/q(b)", pass, buf);
}

void criterion_4_conditions_suite() {
  CheckOptions opts;
  bool pass = true;
  std::string detail;

  struct Case {
    const char* id;
    int N;
  } cases[] = {{"REF-A", 50}, {"REF-B", 200}, {"REF-C", 200}};
  for (const auto& c : cases) {
    auto ref = load_reference_problem(c.id);
    Process proc = ref.solution.sample(ref.problem, c.N);
    MultiplierPack pack = ref.solution.pack(proc);
    normalize_pack(pack);
    CheckReport rep = check_conditions(ref.problem, proc, pack, opts);
    bool ok = rep.conditions_pass;
    // Stated tolerances: 1e-3 normalized, 2e-2 for the discretization-
    // limited adjoint at N = 200.
    ok = ok && rep.find("adjoint")->max_residual <= 2e-2;
    ok = ok && rep.find("weierstrass")->max_residual <= 1e-3;
    ok = ok && rep.find("transversality")->max_residual <= 1e-3;
    ok = ok && rep.find("selection")->max_residual <= 1e-3;
    ok = ok && rep.find("support")->max_residual <= 1e-3;
    pass = pass && ok;
    detail += std::string(c.id) + (ok ? " ok; " : " FAIL; ");
  }

  auto count_failures = [](const CheckReport& rep, std::string& names) {
    int n = 0;
    for (const auto& c : rep.conditions)
      if (!c.informational && c.verdict == Verdict::Fail) {
        ++n;
        names += c.name + " ";
      }
    return n;
  };

  {  // corruption (a): flipped costate fails exactly the adjoint condition
    auto ref = load_reference_problem("REF-C");
    Process proc = ref.solution.sample(ref.problem, 200);
    MultiplierPack pack = ref.solution.pack(proc);
    normalize_pack(pack);
    for (auto& pm : pack.p) pm = -pm;
    std::string names;
    CheckReport rep = check_conditions(ref.problem, proc, pack, opts);
    bool ok = count_failures(rep, names) == 1 && names == "adjoint ";
    pass = pass && ok;
    detail += "flip-p -> {" + names + "}; ";
  }
  {  // corruption (b): mass off the boundary fails exactly the support condition
    auto ref = load_reference_problem("REF-B");
    Process proc = ref.solution.sample(ref.problem, 200);
    MultiplierPack pack = ref.solution.pack(proc);
    normalize_pack(pack);
    pack.measure.weights[50] = pack.measure.endpoint_atom;
    pack.measure.endpoint_atom = 0.0;
    std::string names;
    CheckReport rep = check_conditions(ref.problem, proc, pack, opts);
    bool ok = count_failures(rep, names) == 1 && names == "support ";
    pass = pass && ok;
    detail += "moved-mass -> {" + names + "}; ";
  }
  {  // corruption (c): all-zero multipliers fail exactly nontriviality
    auto ref = load_reference_problem("REF-A");
    Process proc = ref.solution.sample(ref.problem, 50);
    MultiplierPack pack = ref.solution.pack(proc);
    pack.lambda0 = 0.0;
    for (auto& pm : pack.p) pm.setZero();
    pack.measure.weights.setZero();
    pack.measure.endpoint_atom = 0.0;
    reconstruct_q(pack);
    std::string names;
    CheckReport rep = check_conditions(ref.problem, proc, pack, opts);
    bool ok = count_failures(rep, names) == 1 && names == "nontriviality ";
    pass = pass && ok;
    detail += "zero-pack -> {" + names + "}";
  }
  record(4, "conditions suite + corruptions", pass, detail);
}

void criterion_5_oracle_sandwich() {
  bool pass = true;
  std::string detail;
  struct Case {
    const char* id;
    int steps;
    int grid;
  } cases[] = {{"REF-A", 6, 5}, {"REF-B", 8, 5}, {"REF-C", 6, 6}};
  for (const auto& c : cases) {
    auto t0 = std::chrono::steady_clock::now();
    auto ref = load_reference_problem(c.id);
    OracleOptions oopts;
    oopts.steps = c.steps;
    oopts.grid_per_dim = c.grid;
    OracleResult oracle = brute_force_oracle(ref.problem, oopts);
    SolveOptions sopts;
    ContinuationTrace trace = penalty_continuation(ref.problem, c.steps, sopts);
    double rt = seconds_since(t0);
    bool ok = trace.final.converged && oracle.enumerated <= 10'000'000 &&
              oracle.cost >= trace.final.objective - 0.08 && rt < 30.0;
    pass = pass && ok;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s oracle %.4f vs solver %.4f (%ld seq, %.1fs); ", c.id,
                  oracle.cost, trace.final.objective, oracle.enumerated, rt);
    detail += buf;
  }
  record(5, "oracle sandwich", pass, detail);
}

void criterion_6_nonsmooth_kit() {
  bool pass = true;
  std::string detail;

  // Smooth collapse on a quadratic: central differences are exact, so the
  // hull shrinks with the sampling radius; at radius 3e-7 it must be below
  // 1e-6 in diameter.
  auto quad = [](const Vec& x) { return 0.5 * x[0] * x[0]; };
  double diam = subdiff_estimate(quad, Vec::Constant(1, 1.0), 3e-7, 64, 0).hull_diameter();
  bool ok = diam <= 1e-6;
  pass = pass && ok;
  detail += "quad diameter " + std::to_string(diam) + "; ";

  // |x| at 0 spans the interval subdifferential.
  auto absf = [](const Vec& x) { return std::abs(x[0]); };
  GradientBundle b = subdiff_estimate(absf, Vec::Zero(1), 1e-3, 64, 0);
  double lo = 1e300, hi = -1e300;
  for (const auto& g : b.generators) {
    lo = std::min(lo, g[0]);
    hi = std::max(hi, g[0]);
  }
  ok = lo <= -0.95 && hi >= 0.95;
  pass = pass && ok;
  char buf[120];
  std::snprintf(buf, sizeof(buf), "|x| hull [%.3f, %.3f]; ", lo, hi);
  detail += buf;

  // hull_distance exactness.
  GradientBundle seg;
  seg.generators = {Vec::Constant(1, 4.0), Vec::Constant(1, 6.0)};
  double d1 = hull_distance(Vec::Constant(1, 5.0), seg).distance;
  double d0 = hull_distance(Vec::Zero(1), GradientBundle::single(Vec::Zero(1)),
                            ConeBundle::zero(Vec::Zero(1)))
                  .distance;
  ok = d0 <= 1e-10 && d1 <= 1e-10;
  pass = pass && ok;
  std::snprintf(buf, sizeof(buf), "hull trivial %.1e interp %.1e; ", d0, d1);
  detail += buf;

  // Box-descriptor cone agreement with the inequality description.
  OCProblem p;
  p.n = p.k = 1;
  p.dynamics.value = [](double, const Vec&, const Vec& u) { return u; };
  p.state_constraint.value = [](double, const Vec&) { return -1.0; };
  MixedConstraint up_row, lo_row;
  up_row.value = [](double, const Vec& x, const Vec&) { return x[0] - 2.0; };
  up_row.grad_x = [](double, const Vec&, const Vec&) { return Vec(Vec::Ones(1)); };
  up_row.grad_u = [](double, const Vec&, const Vec&) { return Vec(Vec::Zero(1)); };
  lo_row.value = [](double, const Vec& x, const Vec&) { return -x[0]; };
  lo_row.grad_x = [](double, const Vec&, const Vec&) { return Vec(Vec::Constant(1, -1.0)); };
  lo_row.grad_u = [](double, const Vec&, const Vec&) { return Vec(Vec::Zero(1)); };
  p.mixed_constraints = {up_row, lo_row};
  auto box = EndpointDescriptor::make_box(Vec::Zero(1), Vec::Constant(1, 2.0));
  double worst = 0.0;
  for (double xv : {0.0, 1.0, 2.0}) {
    Vec x = Vec::Constant(1, xv);
    ConeBundle cb = endpoint_normal_cone(box, x, 1e-9);
    ConeBundle cs = normal_cone_S(p, 0.0, x, Vec::Zero(1), 1e-9);
    if (cb.rays.size() != cs.rays.size()) worst = 1.0;
    for (size_t i = 0; i < cb.rays.size() && i < cs.rays.size(); ++i)
      worst = std::max(worst, std::abs(cb.rays[i][0] - cs.rays[i][0]));
  }
  ok = worst <= 1e-10;
  pass = pass && ok;
  std::snprintf(buf, sizeof(buf), "box-cone agreement %.1e", worst);
  detail += buf;

  record(6, "nonsmooth-kit unit properties", pass, detail);
}

void criterion_7_hypothesis_audits() {
  bool pass = true;
  std::string detail;

  for (const char* id : {"REF-A", "REF-B", "REF-C"}) {
    auto ref = load_reference_problem(id);
    Process proc = ref.solution.sample(ref.problem, 200);
    AuditResult res = audit_hypotheses(ref.problem, proc, 64, 0);
    double gap = 0.0, modulus = 0.0;
    bool c_pass = false;
    for (const auto& rec : res.records) {
      if (rec.name == "C") {
        gap = rec.constants.at("gap");
        c_pass = rec.verdict == Verdict::Pass;
      }
      if (rec.name == "H2") modulus = rec.constants.at("modulus");
    }
    bool ok = c_pass && gap <= 1e-3 && std::isfinite(modulus);
    pass = pass && ok;
    char buf[120];
    std::snprintf(buf, sizeof(buf), "%s [C] gap %.1e, [H2] %.2f; ", id, gap, modulus);
    detail += buf;
  }

  {  // constructed parabola counterexample: velocity set {(u, 2u^2)}
    OCProblem steep = nsmp::testing::parabola_velocity_problem(2.0);
    Process proc = nsmp::testing::constant_process(steep, 50, Vec::Zero(2), Vec::Zero(1));
    AuditResult res = audit_hypotheses(steep, proc, 64, 0);
    double gap = 0.0;
    bool failed = false;
    for (const auto& rec : res.records)
      if (rec.name == "C") {
        gap = rec.constants.at("gap");
        failed = rec.verdict == Verdict::Fail;
      }
    bool ok = failed && gap >= 0.9;
    pass = pass && ok;
    char buf[120];
    std::snprintf(buf, sizeof(buf), "parabola gap %.3f (fail=%d); ", gap, failed);
    detail += buf;
  }
  {  // bounded slope on REF-C
    auto ref = load_reference_problem("REF-C");
    Process proc = ref.solution.sample(ref.problem, 200);
    AuditResult res = audit_hypotheses(ref.problem, proc, 64, 0);
    double ks = 0.0;
    for (const auto& rec : res.records)
      if (rec.name == "BS*eps") ks = rec.constants.at("k_S_estimate");
    bool ok = std::abs(ks - 1.0) <= 1e-6;
    pass = pass && ok;
    char buf[80];
    std::snprintf(buf, sizeof(buf), "REF-C k_S %.9f", ks);
    detail += buf;
  }
  record(7, "hypothesis audits", pass, detail);
}

void criterion_8_homogeneity_determinism() {
  bool pass = true;
  std::string detail;

  {  // pack scaling doubles the (ii)-(iv) residuals exactly
    auto ref = load_reference_problem("REF-A");
    Process proc = ref.solution.sample(ref.problem, 50);
    MultiplierPack pack = ref.solution.pack(proc);
    CheckOptions opts;
    CheckReport base = check_conditions(ref.problem, proc, pack, opts);
    CheckReport twice = check_conditions(ref.problem, proc, scale_pack(pack, 2.0), opts);
    double worst = 0.0;
    for (const char* name : {"adjoint", "weierstrass", "transversality"})
      worst = std::max(worst, std::abs(twice.find(name)->max_residual -
                                       2.0 * base.find(name)->max_residual));
    bool ok = worst <= 1e-9;
    pass = pass && ok;
    char buf[80];
    std::snprintf(buf, sizeof(buf), "scaling defect %.1e; ", worst);
    detail += buf;
  }
  {  // identical seeds give byte-identical artifacts
    fs::path d1 = fs::temp_directory_path() / "nsmp_acc_det1";
    fs::path d2 = fs::temp_directory_path() / "nsmp_acc_det2";
    fs::remove_all(d1);
    fs::remove_all(d2);
    std::string base = std::string(NSMP_CLI_PATH) +
                       " pipeline --ref REF-C --grid 100 --seed 3 --out ";
    int rc1 = std::system((base + d1.string() + " > /dev/null 2>&1").c_str());
    int rc2 = std::system((base + d2.string() + " > /dev/null 2>&1").c_str());
    auto slurp = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    bool ok = WEXITSTATUS(rc1) == 0 && WEXITSTATUS(rc2) == 0;
    for (const char* f : {"report.json", "pack.json", "solution.csv", "multipliers.csv",
                          "trace.json", "audit.json"})
      ok = ok && slurp(d1 / f) == slurp(d2 / f) && !slurp(d1 / f).empty();
    pass = pass && ok;
    detail += std::string("byte-identical reruns: ") + (ok ? "yes" : "NO");
  }
  record(8, "homogeneity and determinism", pass, detail);
}

}  // namespace

int main() {
  criterion_1_reference_recovery();
  criterion_2_penalization_path();
  criterion_3_measure_structure();
  criterion_4_conditions_suite();
  criterion_5_oracle_sandwich();
  criterion_6_nonsmooth_kit();
  criterion_7_hypothesis_audits();
  criterion_8_homogeneity_determinism();

  int failed = 0;
  for (const auto& o : outcomes)
    if (!o.pass) ++failed;
  std::printf("%zu/%zu criteria passed\n", outcomes.size() - static_cast<size_t>(failed),
              outcomes.size());
  return failed == 0 ? 0 : 1;
}
