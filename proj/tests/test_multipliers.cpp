#include <doctest.h>

#include <cmath>

#include "nsmp/multipliers.hpp"
#include "nsmp/reference_problems.hpp"
#include "nsmp/solver.hpp"
#include "test_support.hpp"

using namespace nsmp;

namespace {

struct Extracted {
  DiscreteNLP nlp;
  ContinuationTrace trace;
  Process process;
  MultiplierPack pack;  // lambda0 = 1 scale (not normalized)
};

Extracted solve_and_extract(const std::string& id, int N) {
  auto ref = load_reference_problem(id);
  SolveOptions opts;
  Extracted out{discretize(ref.problem, N), penalty_continuation(ref.problem, N, opts), {}, {}};
  REQUIRE(out.trace.final.converged);
  out.nlp.penalty_index = out.trace.final_penalty_index;
  out.process = out.nlp.to_process(out.trace.final.z);
  out.pack = extract_pack(ref.problem, out.process, out.trace.final,
                          out.trace.final_penalty_index);
  return out;
}

}  // namespace

TEST_CASE("costate extraction on REF-A") {
  auto ex = solve_and_extract("REF-A", 50);
  for (const auto& pm : ex.pack.p) CHECK(pm[0] == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(ex.pack.measure.total() <= 1e-9);
}

TEST_CASE("costate extraction on REF-C tracks e^{t-1}") {
  auto ex = solve_and_extract("REF-C", 200);
  for (int m = 0; m <= 200; ++m) {
    double t = ex.process.grid[m];
    CHECK(std::abs(ex.pack.p[static_cast<size_t>(m)][0] - std::exp(t - 1.0)) <= 1e-2);
  }
  CHECK(ex.pack.measure.total() <= 1e-9);
}

TEST_CASE("costate extraction on REF-B is flat with a terminal atom") {
  auto ex = solve_and_extract("REF-B", 200);
  for (const auto& pm : ex.pack.p) CHECK(std::abs(pm[0]) <= 1e-3);
  // Unit atom at t = b (lambda0 = 1 scale), interior weights negligible.
  CHECK(ex.pack.measure.endpoint_atom == doctest::Approx(1.0).epsilon(0.05));
  CHECK(ex.pack.measure.weights.sum() <= 1e-6);
  CHECK(ex.pack.q_b[0] == doctest::Approx(-1.0).epsilon(1e-3));
  // Selection on the support is the gradient of h = -x.
  CHECK(ex.pack.gamma.back()[0] == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("measure support sits where h is active") {
  auto ex = solve_and_extract("REF-B", 200);
  auto ref = load_reference_problem("REF-B");
  for (int m : ex.pack.measure.support(1e-6)) {
    double h = ref.problem.state_constraint.value(ex.process.grid[m],
                                                  ex.process.states[static_cast<size_t>(m)]);
    CHECK(h >= -1e-6);
  }
}

TEST_CASE("gamma selection on a smooth quadratic constraint") {
  // h = x^2 - 1 at x = 1: the selection is the gradient 2x = 2. Without an
  // analytic gradient the bundle estimate lands within 1e-4.
  OCProblem p = testing::h2_violating_problem();
  p.state_constraint = StateConstraint{};
  p.state_constraint.value = [](double, const Vec& x) { return x[0] * x[0] - 1.0; };
  Process proc = testing::constant_process(p, 4, Vec::Ones(1), Vec::Zero(1));
  GridMeasure mu;
  mu.weights = Vec::Zero(5);
  mu.weights[2] = 1.0;
  auto gamma = extract_gamma(p, proc, mu, {});
  CHECK(gamma[2][0] == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("empty support leaves the selection unused") {
  auto ex = solve_and_extract("REF-A", 20);
  CHECK(ex.pack.measure.support(1e-9).empty());
}

TEST_CASE("reconstruct_q with zero measure gives q = p") {
  auto ref = load_reference_problem("REF-C");
  Process proc = ref.solution.sample(ref.problem, 50);
  MultiplierPack pack = ref.solution.pack(proc);
  for (int m = 0; m <= 50; ++m)
    CHECK(pack.q[static_cast<size_t>(m)][0] == pack.p[static_cast<size_t>(m)][0]);
  CHECK(pack.q_b[0] == pack.p.back()[0]);
}

TEST_CASE("reconstruct_q on the analytic REF-B pack") {
  auto ref = load_reference_problem("REF-B");
  Process proc = ref.solution.sample(ref.problem, 200);
  MultiplierPack pack = ref.solution.pack(proc);
  for (int m = 0; m <= 200; ++m) CHECK(pack.q[static_cast<size_t>(m)][0] == 0.0);
  CHECK(pack.q_b[0] == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("interior mass enters q strictly after its node") {
  MultiplierPack pack;
  pack.lambda0 = 1.0;
  pack.p.assign(6, Vec::Zero(1));
  pack.gamma.assign(6, Vec::Constant(1, 3.0));
  pack.measure.weights = Vec::Zero(6);
  pack.measure.weights[2] = 0.5;
  pack.measure.endpoint_atom = 0.0;
  reconstruct_q(pack);
  CHECK(pack.q[2][0] == 0.0);  // half-open: node 2 excluded at t_2
  CHECK(pack.q[3][0] == doctest::Approx(1.5));
  CHECK(pack.q[5][0] == doctest::Approx(1.5));
  CHECK(pack.q_b[0] == doctest::Approx(1.5));
}

TEST_CASE("q jumps at b exactly when the atom is positive") {
  auto refb = load_reference_problem("REF-B");
  Process procb = refb.solution.sample(refb.problem, 100);
  MultiplierPack with_atom = refb.solution.pack(procb);
  CHECK(with_atom.measure.endpoint_atom > 0);
  CHECK(with_atom.q_b[0] != with_atom.q.back()[0]);
  CHECK(with_atom.q_b[0] - with_atom.q.back()[0] ==
        doctest::Approx(with_atom.gamma.back()[0] * with_atom.measure.endpoint_atom)
            .epsilon(1e-15));

  auto refa = load_reference_problem("REF-A");
  Process proca = refa.solution.sample(refa.problem, 100);
  MultiplierPack no_atom = refa.solution.pack(proca);
  CHECK(no_atom.measure.endpoint_atom == 0.0);
  CHECK(no_atom.q_b[0] == no_atom.q.back()[0]);
}

TEST_CASE("reconstruction inverts exactly") {
  // Random packs: rebuild q from (p, gamma, mu), then recover p from
  // (q, gamma, mu) by the inverse cumulative sum.
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const int N = 12;
    MultiplierPack pack;
    pack.lambda0 = rng.uniform(0.0, 2.0);
    for (int m = 0; m <= N; ++m) {
      pack.p.push_back(rng.in_ball(Vec::Zero(2), 2.0));
      pack.gamma.push_back(rng.in_ball(Vec::Zero(2), 1.0));
    }
    pack.measure.weights = Vec::Zero(N + 1);
    for (int m = 0; m <= N; ++m) pack.measure.weights[m] = rng.uniform();
    pack.measure.weights[N] = 0.0;
    pack.measure.endpoint_atom = rng.uniform();
    reconstruct_q(pack);

    Vec cum = Vec::Zero(2);
    for (int m = 0; m <= N; ++m) {
      Vec p_back = pack.q[static_cast<size_t>(m)] - cum;
      CHECK((p_back - pack.p[static_cast<size_t>(m)]).lpNorm<Eigen::Infinity>() <= 1e-12);
      cum += pack.gamma[static_cast<size_t>(m)] * pack.measure.weights[m];
    }
  }
}

TEST_CASE("normalization scales to unit size") {
  auto ref = load_reference_problem("REF-B");
  Process proc = ref.solution.sample(ref.problem, 100);
  MultiplierPack pack = ref.solution.pack(proc);
  CHECK(pack.scale() == doctest::Approx(2.0));  // |p(a)| + |mu| + lambda0 = 0 + 1 + 1
  normalize_pack(pack);
  CHECK(pack.scale() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pack.lambda0 == doctest::Approx(0.5));
  CHECK(pack.measure.endpoint_atom == doctest::Approx(0.5));
  CHECK(pack.q_b[0] == doctest::Approx(-0.5));
  // gamma is a selection, not a multiplier: untouched.
  CHECK(pack.gamma.back()[0] == doctest::Approx(-1.0));
}

TEST_CASE("positive homogeneity of the pack") {
  auto ref = load_reference_problem("REF-A");
  Process proc = ref.solution.sample(ref.problem, 50);
  MultiplierPack pack = ref.solution.pack(proc);
  MultiplierPack doubled = scale_pack(pack, 2.0);
  CHECK(doubled.lambda0 == 2.0 * pack.lambda0);
  for (int m = 0; m <= 50; ++m) {
    CHECK(doubled.p[static_cast<size_t>(m)][0] == 2.0 * pack.p[static_cast<size_t>(m)][0]);
    CHECK(doubled.q[static_cast<size_t>(m)][0] == 2.0 * pack.q[static_cast<size_t>(m)][0]);
    CHECK(doubled.gamma[static_cast<size_t>(m)][0] == pack.gamma[static_cast<size_t>(m)][0]);
  }
  CHECK(doubled.q_b[0] == 2.0 * pack.q_b[0]);
  CHECK_THROWS_AS(scale_pack(pack, -1.0), Error);
}
