#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "chainkit/errors.hpp"
#include "chainkit/integrators.hpp"
#include "chainkit/random.hpp"
#include "chainkit/targets.hpp"

using namespace chainkit;

namespace {

IntegratorState make_state(Tree q, Tree p, const PotentialFn& target) {
  PotentialResult r = target(q);
  return IntegratorState{std::move(q), std::move(r.extra), std::move(r.grad),
                         std::move(r.log_density), std::move(p)};
}

IntegratorStepFn leapfrog_with(double step_size, const PotentialFn& target,
                               const KineticFn& kinetic) {
  return [step_size, &target, &kinetic](IntegratorState s) {
    return leapfrog_step(std::move(s), step_size, target, kinetic);
  };
}

double abs_energy_change(double q0, double step_size, std::size_t num_steps,
                         const PotentialFn& target, const KineticFn& kinetic) {
  IntegratorState s = make_state(Tree(Array::from_vector({q0})),
                                 Tree(Array::from_vector({0.0})), target);
  auto [unused, extra] =
      hamiltonian_integrator(std::move(s), num_steps,
                             leapfrog_with(step_size, target, kinetic), kinetic);
  return std::abs(extra.energy_change[0]);
}

}  // namespace

TEST_CASE("gaussian kinetic energy") {
  KineticFn kinetic = make_gaussian_kinetic_energy(1);
  CHECK(kinetic(Tree(Array(Shape{3, 2}, 0.0))).max_abs() == 0.0);

  Array p(Shape{1, 2}, 0.0);
  p.at({0, 0}) = 3.0;
  p.at({0, 1}) = 4.0;
  CHECK(kinetic(Tree(p))[0] == 12.5);

  // brute-force flatten oracle across a two-leaf tree
  Tree random = normal_sample_tree(
      key_from_seed(4), Tree::node({{"a", Tree(Array(Shape{5, 2, 3}, 0.0))},
                                    {"b", Tree(Array(Shape{5}, 0.0))}}));
  Array k = kinetic(random);
  for (std::size_t c = 0; c < 5; ++c) {
    double expected = 0.0;
    for (const Array* leaf : tree_leaves(random)) {
      Array row = leaf->rank() == 1 ? Array::from_vector({(*leaf)[c]}) : leaf->row(c);
      for (double v : row.data()) expected += 0.5 * v * v;
    }
    CHECK(k[c] == doctest::Approx(expected).epsilon(1e-12));
  }

  CHECK_THROWS_AS(make_gaussian_kinetic_energy(2)(Tree(Array(Shape{3}, 1.0))), ShapeError);
}

TEST_CASE("momentum sample structure and moments") {
  Tree state = Tree::node({{"w", Tree(Array(Shape{50, 1000}, 0.0))},
                           {"z", Tree(Array(Shape{50}, 0.0))}});
  RngKey key = key_from_seed(8);
  Tree p = gaussian_momentum_sample(state, key);
  CHECK(same_structure(p, state));
  CHECK(tree_bitwise_equal(p, gaussian_momentum_sample(state, key)));

  double sum = 0.0, sum_sq = 0.0;
  double n = 0.0;
  for (const Array* leaf : tree_leaves(p)) {
    for (double v : leaf->data()) {
      sum += v;
      sum_sq += v * v;
      n += 1.0;
    }
  }
  double mean = sum / n;
  double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(var == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("free particle drifts linearly") {
  PotentialFn flat = [](const Tree& x) {
    PotentialResult r;
    r.log_density = Array::zeros(Shape{x.array().leading_extent()});
    r.grad = zeros_like(x);
    return r;
  };
  KineticFn kinetic = make_gaussian_kinetic_energy(1);
  Tree q(Array::from_vector({2.0, -1.0}));
  Tree p(Array::from_vector({0.5, 3.0}));
  auto [next, step_extra] = leapfrog_step(make_state(q, p, flat), 0.1, flat, kinetic);
  CHECK(next.state.array()[0] == doctest::Approx(2.05).epsilon(1e-15));
  CHECK(next.state.array()[1] == doctest::Approx(-0.7).epsilon(1e-15));
  CHECK(bitwise_equal(next.momentum.array(), p.array()));
  CHECK(step_extra.target_log_prob.max_abs() == 0.0);
}

TEST_CASE("leapfrog hand values on the 1-D normal") {
  PotentialFn target = make_standard_normal_target(1);
  KineticFn kinetic = make_gaussian_kinetic_energy(1);
  auto [next, unused] = leapfrog_step(
      make_state(Tree(Array::from_vector({1.0})), Tree(Array::from_vector({0.0})), target),
      0.1, target, kinetic);
  // p_half = -0.05, q' = 0.995, p' = -0.09975
  CHECK(next.state.array()[0] == doctest::Approx(0.995).epsilon(1e-15));
  CHECK(next.momentum.array()[0] == doctest::Approx(-0.09975).epsilon(1e-15));
  CHECK(next.target_log_prob[0] == doctest::Approx(-0.5 * 0.995 * 0.995).epsilon(1e-15));
  CHECK(next.state_grads.array()[0] == doctest::Approx(-0.995).epsilon(1e-15));
}

TEST_CASE("reversibility: integrate, flip momentum, integrate back") {
  PotentialFn target = make_standard_normal_target(1);
  KineticFn kinetic = make_gaussian_kinetic_energy(1);
  Tree q(normal_sample(key_from_seed(31), Shape{8}));
  Tree p(normal_sample(key_from_seed(32), Shape{8}));

  auto forward = hamiltonian_integrator(make_state(q, p, target), 25,
                                        leapfrog_with(0.15, target, kinetic), kinetic);
  Tree flipped = tree_map([](const Array& leaf) { return -leaf; }, forward.first.momentum);
  auto back = hamiltonian_integrator(
      make_state(forward.first.state, flipped, target), 25,
      leapfrog_with(0.15, target, kinetic), kinetic);

  for (std::size_t c = 0; c < 8; ++c) {
    CHECK(back.first.state.array()[c] == doctest::Approx(q.array()[c]).epsilon(1e-12));
    CHECK(-back.first.momentum.array()[c] == doctest::Approx(p.array()[c]).epsilon(1e-12));
  }
}

TEST_CASE("leapfrog map preserves phase-space volume") {
  PotentialFn target = make_standard_normal_target(1);
  KineticFn kinetic = make_gaussian_kinetic_energy(1);
  const double q0 = 0.7, p0 = -0.4, eps = 0.3, delta = 1e-6;

  auto advance = [&](double q, double p) {
    auto [next, unused] = leapfrog_step(
        make_state(Tree(Array::from_vector({q})), Tree(Array::from_vector({p})), target),
        eps, target, kinetic);
    return std::make_pair(next.state.array()[0], next.momentum.array()[0]);
  };
  auto [qp_q, qp_p] = advance(q0 + delta, p0);
  auto [qm_q, qm_p] = advance(q0 - delta, p0);
  auto [pp_q, pp_p] = advance(q0, p0 + delta);
  auto [pm_q, pm_p] = advance(q0, p0 - delta);
  const double dq_dq = (qp_q - qm_q) / (2 * delta);
  const double dp_dq = (qp_p - qm_p) / (2 * delta);
  const double dq_dp = (pp_q - pm_q) / (2 * delta);
  const double dp_dp = (pp_p - pm_p) / (2 * delta);
  CHECK(std::abs(dq_dq * dp_dp - dq_dp * dp_dq - 1.0) < 1e-6);
}

TEST_CASE("one integrator step equals one leapfrog step") {
  PotentialFn target = make_standard_normal_target(1);
  KineticFn kinetic = make_gaussian_kinetic_energy(1);
  Tree q(Array::from_vector({0.3, -1.2}));
  Tree p(Array::from_vector({1.1, 0.4}));

  auto [direct, direct_extra] = leapfrog_step(make_state(q, p, target), 0.2, target, kinetic);
  auto [integrated, extra] = hamiltonian_integrator(
      make_state(q, p, target), 1, leapfrog_with(0.2, target, kinetic), kinetic);

  CHECK(tree_bitwise_equal(direct.state, integrated.state));
  CHECK(tree_bitwise_equal(direct.momentum, integrated.momentum));
  for (std::size_t c = 0; c < 2; ++c) {
    double e0 = -(-0.5 * q.array()[c] * q.array()[c]) + 0.5 * p.array()[c] * p.array()[c];
    double e1 = -direct.target_log_prob[c] +
                0.5 * direct.momentum.array()[c] * direct.momentum.array()[c];
    CHECK(extra.energy_change[c] == doctest::Approx(e1 - e0).epsilon(1e-15));
  }
}

TEST_CASE("energy drift stays small at unit scale") {
  PotentialFn target = make_standard_normal_target(1);
  KineticFn kinetic = make_gaussian_kinetic_energy(1);
  Tree q(Array::from_vector({1.0, -0.5, 0.25, 0.75}));
  Tree p(Array::from_vector({0.0, 0.0, 0.0, 0.0}));
  auto [unused, extra] = hamiltonian_integrator(
      make_state(q, p, target), 10, leapfrog_with(0.1, target, kinetic), kinetic);
  CHECK(extra.energy_change.max_abs() < 1e-3);
}

TEST_CASE("halving the step quadruples energy accuracy") {
  KineticFn kinetic = make_gaussian_kinetic_energy(1);
  PotentialFn normal = make_standard_normal_target(1);
  PotentialFn skewed = make_diagonal_gaussian_target(
      Tree(Array::scalar(0.4)), Tree(Array::scalar(1.7)), 1);

  // fixed total integration time: (eps, L) against (eps/2, 2L)
  for (const PotentialFn* target : {&normal, &skewed}) {
    for (double eps : {0.2, 0.1, 0.05}) {
      double coarse = abs_energy_change(1.0, eps, 10, *target, kinetic);
      double fine = abs_energy_change(1.0, eps / 2, 20, *target, kinetic);
      double ratio = coarse / fine;
      CHECK(ratio > 3.0);
      CHECK(ratio < 5.0);
    }
  }
}

TEST_CASE("chains advance independently: permutation commutes") {
  PotentialFn target = make_standard_normal_target(1);
  KineticFn kinetic = make_gaussian_kinetic_energy(1);
  Array q = normal_sample(key_from_seed(44), Shape{5});
  Array p = normal_sample(key_from_seed(45), Shape{5});
  std::vector<std::size_t> perm{3, 0, 4, 1, 2};

  auto run = [&](const Array& q0, const Array& p0) {
    return hamiltonian_integrator(make_state(Tree(q0), Tree(p0), target), 7,
                                  leapfrog_with(0.12, target, kinetic), kinetic)
        .first.state.array();
  };
  Array plain = run(q, p);
  Array qp(Shape{5}, 0.0), pp(Shape{5}, 0.0);
  for (std::size_t i = 0; i < 5; ++i) {
    qp[i] = q[perm[i]];
    pp[i] = p[perm[i]];
  }
  Array permuted = run(qp, pp);
  for (std::size_t i = 0; i < 5; ++i) CHECK(permuted[i] == plain[perm[i]]);
}

TEST_CASE("per-step log probs are collected on request") {
  PotentialFn target = make_standard_normal_target(1);
  KineticFn kinetic = make_gaussian_kinetic_energy(1);
  Tree q(Array::from_vector({0.9}));
  Tree p(Array::from_vector({0.2}));
  auto [unused, extra] = hamiltonian_integrator(
      make_state(q, p, target), 6, leapfrog_with(0.1, target, kinetic), kinetic, true);
  REQUIRE(extra.step_log_probs.has_value());
  CHECK(extra.step_log_probs->size() == 6);

  auto [unused2, silent] = hamiltonian_integrator(
      make_state(q, p, target), 6, leapfrog_with(0.1, target, kinetic), kinetic);
  CHECK_FALSE(silent.step_log_probs.has_value());
}
