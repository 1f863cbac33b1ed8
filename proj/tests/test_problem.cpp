#include <doctest.h>

#include <cmath>

#include "nsmp/nonsmooth.hpp"
#include "nsmp/problem.hpp"
#include "nsmp/reference_problems.hpp"
#include "test_support.hpp"

using namespace nsmp;

namespace {
bool has_defect(const ValidationReport& rep, const std::string& code) {
  for (const auto& d : rep.defects)
    if (d.code == code) return true;
  return false;
}
}  // namespace

TEST_CASE("validate_problem accepts the reference problems") {
  for (const char* id : {"REF-A", "REF-B", "REF-C"}) {
    auto ref = load_reference_problem(id);
    CHECK(validate_problem(ref.problem).ok());
  }
}

TEST_CASE("validate_problem flags a decreasing horizon") {
  auto ref = load_reference_problem("REF-A");
  ref.problem.t0 = 1.0;
  ref.problem.t1 = 0.0;
  auto rep = validate_problem(ref.problem);
  CHECK(!rep.ok());
  CHECK(has_defect(rep, "horizon"));
}

TEST_CASE("validate_problem flags an unbounded control set") {
  auto ref = load_reference_problem("REF-A");
  ref.problem.mixed_constraints.clear();
  auto rep = validate_problem(ref.problem);
  CHECK(has_defect(rep, "control_unbounded"));
}

TEST_CASE("mixed_residual on REF-A") {
  auto ref = load_reference_problem("REF-A");
  Vec x = Vec::Zero(1);
  auto interior = mixed_residual(ref.problem, 0.5, x, Vec::Zero(1));
  CHECK(interior.values[0] == doctest::Approx(-1.0));
  CHECK(interior.values[1] == doctest::Approx(-1.0));
  CHECK(interior.max_value == doctest::Approx(-1.0));

  auto boundary = mixed_residual(ref.problem, 0.5, x, Vec::Ones(1));
  CHECK(boundary.values[0] == doctest::Approx(0.0));
  CHECK(boundary.values[1] == doctest::Approx(-2.0));
  CHECK(boundary.max_value == doctest::Approx(0.0));
}

TEST_CASE("mixed_residual on REF-C at the active facet") {
  auto ref = load_reference_problem("REF-C");
  auto r = mixed_residual(ref.problem, 0.0, Vec::Zero(1), Vec::Ones(1));
  CHECK(r.values[0] == doctest::Approx(0.0));   // u + x - 1
  CHECK(r.values[1] == doctest::Approx(-1.0));  // -u
  CHECK(r.max_value == doctest::Approx(0.0));
}

TEST_CASE("load_reference_problem rejects unknown ids") {
  CHECK_THROWS_AS(load_reference_problem("REF-Z"), Error);
}

TEST_CASE("reference analytic values") {
  auto a = load_reference_problem("REF-A");
  CHECK(a.solution.control(0.3)[0] == doctest::Approx(-1.0));
  CHECK(a.solution.optimal_cost == doctest::Approx(-1.0));

  auto b = load_reference_problem("REF-B");
  CHECK(b.solution.state(1.5)[0] == doctest::Approx(0.0));
  // h = -x is active on [1, 2].
  for (double t : {1.0, 1.5, 2.0})
    CHECK(b.problem.state_constraint.value(t, b.solution.state(t)) == doctest::Approx(0.0));

  auto c = load_reference_problem("REF-C");
  CHECK(c.solution.state(1.0)[0] == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  CHECK(c.solution.state(1.0)[0] == doctest::Approx(0.6321205588).epsilon(1e-8));
}

TEST_CASE("analytic processes are admissible") {
  for (const char* id : {"REF-A", "REF-B", "REF-C"}) {
    auto ref = load_reference_problem(id);
    Process proc = ref.solution.sample(ref.problem, 200);

    // Mixed and state constraints hold along the trajectory.
    for (int m = 0; m < proc.steps(); ++m) {
      CHECK(mixed_residual(ref.problem, proc.grid[m], proc.states[static_cast<size_t>(m)],
                           proc.controls[static_cast<size_t>(m)])
                .max_value <= 1e-12);
      CHECK(ref.problem.state_constraint.value(proc.grid[m], proc.states[static_cast<size_t>(m)]) <=
            1e-12);
    }
    CHECK(ref.problem.endpoint_a.contains(proc.states.front(), 1e-12));
    CHECK(ref.problem.endpoint_b.contains(proc.states.back(), 1e-12));
  }
}

TEST_CASE("analytic dynamics defects vanish under refinement") {
  // REF-A and REF-B are piecewise linear: exactly representable.
  for (const char* id : {"REF-A", "REF-B"}) {
    auto ref = load_reference_problem(id);
    Process proc = ref.solution.sample(ref.problem, 200);
    CHECK(proc.max_dynamics_defect(ref.problem) <= 1e-12);
  }
  // REF-C has curvature: the per-step defect is the local truncation
  // error dt^2 |xddot| / 2, quartering when the step halves.
  auto c = load_reference_problem("REF-C");
  double d200 = c.solution.sample(c.problem, 200).max_dynamics_defect(c.problem);
  double d400 = c.solution.sample(c.problem, 400).max_dynamics_defect(c.problem);
  CHECK(d200 <= 2.5e-3);
  CHECK(d200 / d400 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("mixed_residual is consistent with distance_to_S") {
  // On random points: feasible iff zero distance (tolerance bands apart).
  for (const char* id : {"REF-A", "REF-B", "REF-C"}) {
    auto ref = load_reference_problem(id);
    Rng rng(7);
    int checked = 0;
    for (int s = 0; s < 1000; ++s) {
      double t = rng.uniform(ref.problem.t0, ref.problem.t1);
      Vec x = Vec::Constant(1, rng.uniform(-1.5, 1.5));
      Vec u = Vec::Constant(1, rng.uniform(-2.0, 2.0));
      double maxg = mixed_residual(ref.problem, t, x, u).max_value;
      if (maxg <= 0) {
        CHECK(distance_to_S(ref.problem, t, x, u).distance == 0.0);
        ++checked;
      } else if (maxg > 1e-6) {
        CHECK(distance_to_S(ref.problem, t, x, u).distance > 1e-12);
        ++checked;
      }
    }
    CHECK(checked >= 900);
  }
}

TEST_CASE("endpoint descriptor distances") {
  Vec p = Vec::Constant(1, 2.0);
  auto point = EndpointDescriptor::make_point(p);
  CHECK(point.distance(Vec::Constant(1, 2.5)) == doctest::Approx(0.5));
  CHECK(point.contains(p, 1e-12));

  auto box = EndpointDescriptor::make_box(Vec::Zero(2), Vec::Ones(2));
  Vec y(2);
  y << 2.0, 0.5;
  CHECK(box.distance(y) == doctest::Approx(1.0));

  Mat basis(2, 1);
  basis << 1.0, 0.0;
  auto affine = EndpointDescriptor::make_affine(Vec::Zero(2), basis);
  Vec z(2);
  z << 3.0, 0.25;
  CHECK(affine.distance(z) == doctest::Approx(0.25));

  CHECK(EndpointDescriptor::make_free().distance(y) == 0.0);
}
