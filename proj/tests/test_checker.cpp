#include <doctest.h>

#include <cmath>

#include "nsmp/checker.hpp"
#include "nsmp/reference_problems.hpp"
#include "test_support.hpp"

using namespace nsmp;

namespace {

struct AnalyticCase {
  OCProblem problem;
  Process process;
  MultiplierPack pack;  // normalized
};

AnalyticCase analytic_case(const std::string& id, int N) {
  auto ref = load_reference_problem(id);
  AnalyticCase c;
  c.problem = ref.problem;
  c.process = ref.solution.sample(ref.problem, N);
  c.pack = ref.solution.pack(c.process);
  normalize_pack(c.pack);
  return c;
}

int failing_conditions(const CheckReport& rep, std::string* names = nullptr) {
  int count = 0;
  for (const auto& c : rep.conditions) {
    if (c.informational) continue;
    if (c.verdict == Verdict::Fail) {
      ++count;
      if (names) *names += c.name + " ";
    }
  }
  return count;
}

}  // namespace

TEST_CASE("analytic packs satisfy all six conditions") {
  CheckOptions opts;
  for (const char* id : {"REF-A", "REF-B", "REF-C"}) {
    auto c = analytic_case(id, 200);
    CheckReport rep = check_conditions(c.problem, c.process, c.pack, opts);
    INFO(id);
    CHECK(rep.conditions_pass);
    CHECK(rep.find("adjoint")->max_residual <= 2e-2);
    CHECK(rep.find("weierstrass")->max_residual <= 1e-6);
    CHECK(rep.find("transversality")->max_residual <= 1e-6);
    CHECK(rep.find("selection")->max_residual <= 1e-6);
    CHECK(rep.find("support")->max_residual <= 1e-6);
  }
}

TEST_CASE("nontriviality sums the multiplier sizes") {
  auto c = analytic_case("REF-A", 50);
  ConditionRecord rec = check_nontriviality(c.pack);
  CHECK(rec.max_residual == doctest::Approx(1.0).epsilon(1e-9));  // normalized
  CHECK(rec.verdict == Verdict::Pass);

  MultiplierPack zero;
  zero.lambda0 = 0.0;
  zero.p.assign(51, Vec::Zero(1));
  zero.gamma.assign(51, Vec::Zero(1));
  zero.measure.weights = Vec::Zero(51);
  reconstruct_q(zero);
  ConditionRecord bad = check_nontriviality(zero);
  CHECK(bad.max_residual == 0.0);
  CHECK(bad.verdict == Verdict::Fail);

  auto b = analytic_case("REF-B", 50);
  CHECK(check_nontriviality(b.pack).max_residual ==
        doctest::Approx(b.pack.lambda0 + b.pack.measure.endpoint_atom).epsilon(1e-9));
}

TEST_CASE("adjoint residuals on analytic packs") {
  CheckOptions opts;
  auto a = analytic_case("REF-A", 50);
  CHECK(check_adjoint(a.problem, a.process, a.pack, opts).max_residual <= 1e-3);

  auto c = analytic_case("REF-C", 200);
  CHECK(check_adjoint(c.problem, c.process, c.pack, opts).max_residual <= 2e-2);
}

TEST_CASE("adjoint check rejects a sign-flipped costate") {
  // Flip p and rebuild q: the Hamiltonian bundle flips sign and the cone
  // can no longer close the inclusion.
  auto a = analytic_case("REF-A", 50);
  MultiplierPack bad = a.pack;
  for (auto& pm : bad.p) pm = -pm;
  reconstruct_q(bad);
  CheckOptions opts;
  ConditionRecord rec = check_adjoint(a.problem, a.process, bad, opts);
  CHECK(rec.max_residual >= 0.5);
  CHECK(rec.verdict == Verdict::Fail);
}

TEST_CASE("weierstrass residuals on analytic packs") {
  CheckOptions opts;
  auto a = analytic_case("REF-A", 50);
  CHECK(check_weierstrass(a.problem, a.process, a.pack, opts).max_residual <= 1e-6);
  auto b = analytic_case("REF-B", 100);
  CHECK(check_weierstrass(b.problem, b.process, b.pack, opts).max_residual <= 1e-6);
}

TEST_CASE("weierstrass sampling is nested and monotone in the budget") {
  auto a = analytic_case("REF-A", 30);
  MultiplierPack corrupt = a.pack;
  for (auto& qm : corrupt.q) qm = -qm;  // makes u = +1 the maximizer
  corrupt.q_b = -corrupt.q_b;
  CheckOptions few, many;
  few.weierstrass_samples = 8;
  many.weierstrass_samples = 64;
  double v_few = check_weierstrass(a.problem, a.process, corrupt, few).max_residual;
  double v_many = check_weierstrass(a.problem, a.process, corrupt, many).max_residual;
  CHECK(v_few > 0.0);
  CHECK(v_many >= v_few);
}

TEST_CASE("transversality on the references") {
  CheckOptions opts;
  for (const char* id : {"REF-A", "REF-B", "REF-C"}) {
    auto c = analytic_case(id, 100);
    INFO(id);
    CHECK(check_transversality(c.problem, c.process, c.pack, opts).max_residual <= 1e-6);
  }
}

TEST_CASE("transversality rejects endpoints outside E") {
  auto a = analytic_case("REF-A", 50);
  a.process.states.front()[0] += 0.5;  // x(0) != 0
  CheckOptions opts;
  ConditionRecord rec = check_transversality(a.problem, a.process, a.pack, opts);
  CHECK(rec.verdict == Verdict::Fail);
}

TEST_CASE("measure conditions on the analytic REF-B pack") {
  auto b = analytic_case("REF-B", 200);
  CheckOptions opts;
  auto [sel, sup] = check_measure_conditions(b.problem, b.process, b.pack, opts);
  CHECK(sel.max_residual <= 1e-6);
  CHECK(sup.max_residual <= 1e-6);
  CHECK(sel.verdict == Verdict::Pass);
  CHECK(sup.verdict == Verdict::Pass);
}

TEST_CASE("spurious mass off the boundary fails the support condition") {
  auto b = analytic_case("REF-B", 200);
  MultiplierPack bad = b.pack;
  bad.measure.weights[50] = bad.measure.endpoint_atom;  // t = 0.5, h = -0.5
  bad.measure.endpoint_atom = 0.0;
  CheckOptions opts;
  auto [sel, sup] = check_measure_conditions(b.problem, b.process, bad, opts);
  CHECK(sup.max_residual == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(sup.verdict == Verdict::Fail);
  CHECK(sel.verdict == Verdict::Pass);  // gamma = -1 is still a valid selection
}

TEST_CASE("empty measure renders (v) and (vi) vacuous") {
  auto a = analytic_case("REF-A", 50);
  CheckOptions opts;
  auto [sel, sup] = check_measure_conditions(a.problem, a.process, a.pack, opts);
  CHECK(sel.max_residual == 0.0);
  CHECK(sup.max_residual == 0.0);
}

TEST_CASE("the three prescribed corruptions fail exactly the intended condition") {
  CheckOptions opts;

  // (a) flip the costate sign (stored q untouched): only (ii) fails.
  auto c = analytic_case("REF-C", 200);
  MultiplierPack flip_p = c.pack;
  for (auto& pm : flip_p.p) pm = -pm;
  CheckReport rep_a = check_conditions(c.problem, c.process, flip_p, opts);
  std::string names_a;
  CHECK(failing_conditions(rep_a, &names_a) == 1);
  CHECK(names_a == "adjoint ");
  CHECK(rep_a.find("adjoint")->max_residual >= 0.5);

  // (b) move the measure mass off the active boundary: only (vi) fails.
  auto b = analytic_case("REF-B", 200);
  MultiplierPack moved = b.pack;
  moved.measure.weights[50] = moved.measure.endpoint_atom;
  moved.measure.endpoint_atom = 0.0;
  CheckReport rep_b = check_conditions(b.problem, b.process, moved, opts);
  std::string names_b;
  CHECK(failing_conditions(rep_b, &names_b) == 1);
  CHECK(names_b == "support ");

  // (c) all-zero multipliers: only (i) fails.
  auto a = analytic_case("REF-A", 50);
  MultiplierPack zero = a.pack;
  zero.lambda0 = 0.0;
  for (auto& pm : zero.p) pm.setZero();
  zero.measure.weights.setZero();
  zero.measure.endpoint_atom = 0.0;
  reconstruct_q(zero);
  CheckReport rep_c = check_conditions(a.problem, a.process, zero, opts);
  std::string names_c;
  CHECK(failing_conditions(rep_c, &names_c) == 1);
  CHECK(names_c == "nontriviality ");
}

TEST_CASE("homogeneity: residuals scale exactly with the pack") {
  auto a = analytic_case("REF-A", 50);
  CheckOptions opts;
  CheckReport base = check_conditions(a.problem, a.process, a.pack, opts);
  MultiplierPack doubled = scale_pack(a.pack, 2.0);
  CheckReport big = check_conditions(a.problem, a.process, doubled, opts);

  for (const char* name : {"adjoint", "weierstrass", "transversality"}) {
    double r0 = base.find(name)->max_residual;
    double r1 = big.find(name)->max_residual;
    CHECK(std::abs(r1 - 2.0 * r0) <= 1e-9);
    CHECK(big.find(name)->verdict == base.find(name)->verdict);  // scale-aware tolerance
  }
  CHECK(big.find("nontriviality")->max_residual ==
        doctest::Approx(2.0 * base.find("nontriviality")->max_residual).epsilon(1e-12));
}

TEST_CASE("mixed mode matches full mode when mu = 0 and L = 0") {
  auto a = analytic_case("REF-A", 50);
  CheckOptions opts;
  CheckReport full = check_conditions(a.problem, a.process, a.pack, opts);
  CheckReport mixed = check_mixed_mp(a.problem, a.process, a.pack, opts);
  CHECK(mixed.find("adjoint")->max_residual == full.find("adjoint")->max_residual);
  CHECK(mixed.find("weierstrass")->max_residual == full.find("weierstrass")->max_residual);
  CHECK(mixed.find("transversality")->max_residual == full.find("transversality")->max_residual);
  CHECK(mixed.conditions_pass);
}

TEST_CASE("mixed mode passes REF-C and refuses REF-B") {
  CheckOptions opts;
  auto c = analytic_case("REF-C", 200);
  CheckReport rep = check_mixed_mp(c.problem, c.process, c.pack, opts);
  CHECK(rep.conditions_pass);
  CHECK(rep.find("adjoint")->max_residual <= 2e-2);

  auto b = analytic_case("REF-B", 100);
  CHECK_THROWS_AS(check_mixed_mp(b.problem, b.process, b.pack, opts), Error);
}

TEST_CASE("mixed mode includes the running cost in the Hamiltonian") {
  // REF-A plus L = u: the Hamiltonian becomes <p, u> - lambda0 u. With
  // p = -1, lambda0 = 1 the maximizer over [-1,1] is still u = -1 and the
  // adjoint single generator becomes (0, p - lambda0) = (0, -2).
  auto ref = load_reference_problem("REF-A");
  OCProblem prob = ref.problem;
  RunningCost L;
  L.value = [](double, const Vec&, const Vec& u) { return u[0]; };
  L.grad_x = [](double, const Vec&, const Vec&) { return Vec(Vec::Zero(1)); };
  L.grad_u = [](double, const Vec&, const Vec&) { return Vec(Vec::Ones(1)); };
  prob.running_cost = L;

  Process proc = ref.solution.sample(prob, 50);
  MultiplierPack pack = ref.solution.pack(proc);  // p = -1, lambda0 = 1
  CheckOptions opts;
  CheckReport rep = check_mixed_mp(prob, proc, pack, opts);
  // (ii): (0,0) in {(0, p - lambda0)} - cone{(0,-1)}: beta = 2 closes it.
  CHECK(rep.find("adjoint")->max_residual <= 1e-9);
  CHECK(rep.find("weierstrass")->max_residual <= 1e-9);
  CHECK(rep.conditions_pass);
}

TEST_CASE("without [H2] the Weierstrass condition is not asserted") {
  auto a = analytic_case("REF-A", 50);
  CheckOptions opts;
  opts.h2_failed = true;
  CheckReport rep = check_conditions(a.problem, a.process, a.pack, opts);
  CHECK(rep.find("weierstrass")->verdict == Verdict::NotAsserted);
  CHECK(rep.conditions_pass);  // the remaining conclusions still hold
}

TEST_CASE("sharp adjoint form with a fitted K") {
  CheckOptions opts;
  opts.sharp_adjoint = true;
  opts.fit_K = true;
  auto a = analytic_case("REF-A", 10);
  CheckReport rep = check_conditions(a.problem, a.process, a.pack, opts);
  const ConditionRecord* sharp = rep.find("adjoint_sharp");
  REQUIRE(sharp != nullptr);
  CHECK(sharp->informational);
  CHECK(sharp->verdict == Verdict::Pass);
  // K|q| must cover the cone coefficient: beta = |q| at the active bound,
  // and the d_S hull generator is the unit normal, so K -> 1.
  CHECK(sharp->note.find("K=") != std::string::npos);
}

TEST_CASE("report finalize summarises verdicts") {
  CheckReport rep;
  rep.conditions.push_back({"a", {}, 0.0, 1.0, Verdict::Pass, false, ""});
  rep.conditions.push_back({"b", {}, 0.0, 1.0, Verdict::NotAsserted, false, ""});
  rep.conditions.push_back({"c", {}, 2.0, 1.0, Verdict::Fail, true, ""});  // informational
  rep.audits.push_back({"x", {}, {}, Verdict::Pass, ""});
  rep.finalize();
  CHECK(rep.conditions_pass);
  CHECK(rep.audits_pass);
  CHECK(rep.overall);
  rep.audits.push_back({"y", {}, {}, Verdict::Fail, ""});
  rep.finalize();
  CHECK(!rep.audits_pass);
  CHECK(!rep.overall);
}
