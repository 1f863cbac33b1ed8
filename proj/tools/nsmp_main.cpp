// nsmp command-line driver: solve / check / audit / oracle / pipeline.
//
// Exit codes: 0 ok, 1 usage or I/O error, 2 invalid problem,
// 3 solver not converged, 4 conditions failed, 5 hypothesis audit failed.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nsmp/checker.hpp"
#include "nsmp/io.hpp"
#include "nsmp/multipliers.hpp"
#include "nsmp/reference_problems.hpp"
#include "nsmp/solver.hpp"

namespace {

struct CommonArgs {
  std::string problem_file;
  std::string ref_id;
  std::string pack_file;
  std::string out_dir = ".";
  int grid = 200;
  unsigned seed = 0;
  int samples = 64;
  std::string mode = "full";
  double penalty_max = 16384.0;
  bool sharp = false;
  bool fit_K = false;
  std::optional<double> K;
  nsmp::CheckTolerances tol;
  nsmp::AuditThresholds audit_thr;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_tols = true) {
  cmd->add_option("--problem", a.problem_file, "problem JSON file");
  cmd->add_option("--ref", a.ref_id, "reference problem id (REF-A, REF-B, REF-C)");
  cmd->add_option("--grid", a.grid, "grid steps N");
  cmd->add_option("--seed", a.seed, "RNG seed (appears in every output header)");
  cmd->add_option("--samples", a.samples, "sampling budget for checks and audits");
  cmd->add_option("--out", a.out_dir, "output directory");
  cmd->add_option("--penalty-max", a.penalty_max, "last penalty index of the doubling schedule");
  cmd->add_option("--mode", a.mode, "checker mode: full | mixed")
      ->check(CLI::IsMember({"full", "mixed"}));
  if (with_tols) {
    cmd->add_option("--tol-nontriviality", a.tol.nontriviality);
    cmd->add_option("--tol-adjoint", a.tol.adjoint);
    cmd->add_option("--tol-weierstrass", a.tol.weierstrass);
    cmd->add_option("--tol-transversality", a.tol.transversality);
    cmd->add_option("--tol-selection", a.tol.selection);
    cmd->add_option("--tol-support", a.tol.support);
    cmd->add_option("--tol-activity", a.tol.activity);
    cmd->add_option("--tol-c-gap", a.audit_thr.convexity_gap);
    cmd->add_option("--tol-h2-modulus", a.audit_thr.h2_modulus);
    cmd->add_flag("--sharp-adjoint", a.sharp, "also report the K|q| d_S adjoint form");
    cmd->add_flag("--fit-K", a.fit_K, "fit the smallest K closing the sharp inclusion");
    double kval;
    cmd->add_option_function<double>(
        "--K", [&a](const double& v) { a.K = v; }, "sharp-form constant override");
    (void)kval;
  }
}

nsmp::OCProblem load_problem(const CommonArgs& a) {
  if (!a.ref_id.empty()) return nsmp::load_reference_problem(a.ref_id).problem;
  if (!a.problem_file.empty()) return nsmp::load_problem_json(a.problem_file);
  throw nsmp::Error("need --problem or --ref");
}

nsmp::CheckOptions make_check_options(const CommonArgs& a, double K_default) {
  nsmp::CheckOptions opts;
  opts.tol = a.tol;
  opts.seed = a.seed;
  opts.weierstrass_samples = a.samples;
  opts.sharp_adjoint = a.sharp;
  opts.fit_K = a.fit_K;
  opts.K = a.K ? a.K : std::optional<double>(K_default);
  return opts;
}

std::string out_path(const CommonArgs& a, const std::string& name) {
  std::filesystem::create_directories(a.out_dir);
  return (std::filesystem::path(a.out_dir) / name).string();
}

int cmd_oracle(const CommonArgs& a, int steps, int grid_per_dim) {
  nsmp::OCProblem prob = load_problem(a);
  nsmp::OracleOptions opts;
  opts.steps = steps;
  opts.grid_per_dim = grid_per_dim;
  nsmp::OracleResult res = nsmp::brute_force_oracle(prob, opts);
  std::printf("oracle: cost %.12e over %ld sequences (%ld feasible)\n", res.cost, res.enumerated,
              res.feasible);
  nsmp::write_solution_csv(out_path(a, "oracle_solution.csv"), res.best, a.seed);
  return 0;
}

int run_solve(const CommonArgs& a, nsmp::ContinuationTrace& trace, nsmp::OCProblem& prob,
              nsmp::Process& process, nsmp::MultiplierPack& pack) {
  prob = load_problem(a);
  nsmp::ValidationReport val = nsmp::validate_problem(prob);
  if (!val.ok()) {
    for (const auto& d : val.defects)
      std::fprintf(stderr, "problem defect [%s]: %s\n", d.code.c_str(), d.message.c_str());
    return 2;
  }
  nsmp::SolveOptions sopts;
  sopts.penalty_max = a.penalty_max;
  sopts.seed = a.seed;
  trace = nsmp::penalty_continuation(prob, a.grid, sopts);
  if (trace.truncated || !trace.final.converged) {
    std::fprintf(stderr, "solver did not converge: %s\n", trace.final.message.c_str());
    return 3;
  }
  nsmp::DiscreteNLP nlp = nsmp::discretize(prob, a.grid);
  process = nlp.to_process(trace.final.z);
  pack = nsmp::extract_pack(prob, process, trace.final, trace.final_penalty_index,
                            a.tol.activity);
  nsmp::normalize_pack(pack);
  return 0;
}

void write_solution_artifacts(const CommonArgs& a, const nsmp::ContinuationTrace& trace,
                              const nsmp::Process& process, const nsmp::MultiplierPack& pack) {
  nsmp::write_solution_csv(out_path(a, "solution.csv"), process, a.seed);
  nsmp::write_multipliers_csv(out_path(a, "multipliers.csv"), process, pack, a.seed);
  nsmp::write_pack_json(out_path(a, "pack.json"), process, pack, a.seed);
  nsmp::write_trace_json(out_path(a, "trace.json"), trace, a.seed);
}

int cmd_solve(const CommonArgs& a) {
  nsmp::ContinuationTrace trace;
  nsmp::OCProblem prob;
  nsmp::Process process;
  nsmp::MultiplierPack pack;
  int rc = run_solve(a, trace, prob, process, pack);
  if (rc) return rc;
  write_solution_artifacts(a, trace, process, pack);
  std::printf("solve: J = %.12e at penalty index %g (%zu schedule entries)\n",
              trace.final.objective, trace.final_penalty_index, trace.records.size());
  return 0;
}

int cmd_check(const CommonArgs& a, bool assume_h2_failed) {
  nsmp::OCProblem prob = load_problem(a);
  if (a.pack_file.empty()) throw nsmp::Error("check: need --pack");
  nsmp::PackFile pf = nsmp::read_pack_json(a.pack_file);
  nsmp::CheckOptions opts = make_check_options(a, 0.0);
  opts.h2_failed = assume_h2_failed;
  nsmp::CheckReport rep = a.mode == "mixed"
                              ? nsmp::check_mixed_mp(prob, pf.process, pf.pack, opts)
                              : nsmp::check_conditions(prob, pf.process, pf.pack, opts);
  nsmp::write_report_json(out_path(a, "report.json"), rep);
  nsmp::write_residuals_csv(out_path(a, "residuals.csv"), pf.process, rep, a.seed);
  for (const auto& c : rep.conditions)
    std::printf("%-24s %-12s max residual %.3e (tol %.3e)\n", c.name.c_str(),
                nsmp::to_string(c.verdict).c_str(), c.max_residual, c.tolerance);
  return rep.conditions_pass ? 0 : 4;
}

int cmd_audit(const CommonArgs& a) {
  nsmp::OCProblem prob = load_problem(a);
  nsmp::Process process;
  if (!a.pack_file.empty()) {
    process = nsmp::read_pack_json(a.pack_file).process;
  } else if (!a.ref_id.empty()) {
    process = nsmp::load_reference_problem(a.ref_id).solution.sample(prob, a.grid);
  } else {
    throw nsmp::Error("audit: need --pack (for the candidate process) or --ref");
  }
  nsmp::AuditResult audits = nsmp::audit_hypotheses(prob, process, a.samples, a.seed);
  nsmp::apply_audit_thresholds(audits, a.audit_thr);
  nsmp::CheckReport rep;
  rep.mode = a.mode;
  rep.seed = a.seed;
  rep.audits = audits.records;
  rep.conditions_pass = true;
  rep.finalize();
  nsmp::write_report_json(out_path(a, "audit.json"), rep);
  for (const auto& rec : rep.audits) {
    std::printf("[%s] %s", rec.name.c_str(), nsmp::to_string(rec.verdict).c_str());
    for (const auto& [key, value] : rec.constants) std::printf("  %s=%.6g", key.c_str(), value);
    if (!rec.note.empty()) std::printf("  (%s)", rec.note.c_str());
    std::printf("\n");
  }
  return rep.audits_pass ? 0 : 5;
}

int cmd_pipeline(const CommonArgs& a) {
  nsmp::ContinuationTrace trace;
  nsmp::OCProblem prob;
  nsmp::Process process;
  nsmp::MultiplierPack pack;
  int rc = run_solve(a, trace, prob, process, pack);
  if (rc) return rc;
  write_solution_artifacts(a, trace, process, pack);

  nsmp::AuditResult audits = nsmp::audit_hypotheses(prob, process, a.samples, a.seed);
  nsmp::apply_audit_thresholds(audits, a.audit_thr);

  nsmp::CheckOptions opts = make_check_options(a, audits.K_default);
  opts.h2_failed = [&] {
    const nsmp::AuditRecord* h2 = nullptr;
    for (const auto& rec : audits.records)
      if (rec.name == "H2") h2 = &rec;
    return h2 && h2->verdict == nsmp::Verdict::Fail;
  }();

  nsmp::CheckReport rep = a.mode == "mixed" ? nsmp::check_mixed_mp(prob, process, pack, opts)
                                            : nsmp::check_conditions(prob, process, pack, opts);
  rep.audits = audits.records;
  rep.finalize();

  nsmp::write_report_json(out_path(a, "report.json"), rep);
  nsmp::write_residuals_csv(out_path(a, "residuals.csv"), process, rep, a.seed);
  {  // audit-only copy
    nsmp::CheckReport arep;
    arep.mode = rep.mode;
    arep.seed = a.seed;
    arep.audits = audits.records;
    arep.conditions_pass = true;
    arep.finalize();
    nsmp::write_report_json(out_path(a, "audit.json"), arep);
  }

  std::printf("pipeline: J = %.12e, conditions %s, audits %s\n", trace.final.objective,
              rep.conditions_pass ? "pass" : "FAIL", rep.audits_pass ? "pass" : "FAIL");
  for (const auto& c : rep.conditions)
    std::printf("%-24s %-12s max residual %.3e (tol %.3e)\n", c.name.c_str(),
                nsmp::to_string(c.verdict).c_str(), c.max_residual, c.tolerance);
  if (!rep.conditions_pass) return 4;
  if (!rep.audits_pass) return 5;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"state/mixed-constrained optimal control: penalization, multiplier "
               "extraction, maximum-principle verification"};
  app.require_subcommand(1);

  CommonArgs a_solve, a_check, a_audit, a_oracle, a_pipe;
  bool assume_h2_failed = false;
  int oracle_steps = 6, oracle_grid = 5;

  CLI::App* solve = app.add_subcommand("solve", "penalty continuation + multiplier extraction");
  add_common(solve, a_solve);

  CLI::App* check = app.add_subcommand("check", "verify conditions for a (process, pack) file");
  add_common(check, a_check);
  check->add_option("--pack", a_check.pack_file, "pack JSON (from solve)")->required();
  check->add_flag("--assume-h2-failed", assume_h2_failed,
                  "mark the Weierstrass condition as not asserted");

  CLI::App* audit = app.add_subcommand("audit", "sample-based hypothesis audits");
  add_common(audit, a_audit);
  audit->add_option("--pack", a_audit.pack_file, "pack JSON providing the candidate process");

  CLI::App* oracle = app.add_subcommand("oracle", "exhaustive coarse-grid search");
  add_common(oracle, a_oracle, false);
  oracle->add_option("--oracle-steps", oracle_steps, "coarse grid steps (<= 8)");
  oracle->add_option("--oracle-grid", oracle_grid, "control grid points per dimension (<= 7)");

  CLI::App* pipe = app.add_subcommand("pipeline", "solve + extract + check + audit");
  add_common(pipe, a_pipe);
  pipe->add_option("--pack", a_pipe.pack_file, "(unused; accepted for symmetry)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(a_solve);
    if (check->parsed()) return cmd_check(a_check, assume_h2_failed);
    if (audit->parsed()) return cmd_audit(a_audit);
    if (oracle->parsed()) return cmd_oracle(a_oracle, oracle_steps, oracle_grid);
    if (pipe->parsed()) return cmd_pipeline(a_pipe);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
