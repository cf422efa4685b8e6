#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <utility>

#include "chainkit/errors.hpp"
#include "chainkit/hmc.hpp"
#include "chainkit/random.hpp"
#include "chainkit/targets.hpp"
#include "chainkit/trace.hpp"

using namespace chainkit;

namespace {

std::pair<int, Tree> counter_kernel(int n) {
  return {n + 1, Tree(Array::scalar(static_cast<double>(n)))};
}

// HMC with the key threaded through the state, so nesting traces cannot
// disturb the key schedule.
struct KeyedHmc {
  HmcState hmc;
  RngKey key;
};

std::pair<KeyedHmc, Tree> keyed_hmc_kernel(KeyedHmc s, const PotentialFn& target) {
  auto [step_key, next_key] = split(s.key);
  auto [next, extra] = hamiltonian_monte_carlo_step(s.hmc, target, 0.6, 5, step_key);
  Tree aux = Tree::node({{"state", next.state}, {"is_accepted", Tree(extra.is_accepted)}});
  return {KeyedHmc{std::move(next), next_key}, std::move(aux)};
}

}  // namespace

TEST_CASE("counter kernel traces its auxiliary stream") {
  auto result = trace(0, counter_kernel, 4);
  CHECK(result.final_state == 4);
  REQUIRE(result.traced.array().shape() == Shape{4});
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(result.traced.array()[i] == static_cast<double>(i));
  }
}

TEST_CASE("mask false propagates without history") {
  auto result = trace(0, counter_kernel, 4, TraceMask::all(false));
  CHECK(result.final_state == 4);
  CHECK(result.traced.array().rank() == 0);
  CHECK(result.traced.array().as_scalar() == 3.0);
}

TEST_CASE("a single step still gains the time axis") {
  auto result = trace(0, counter_kernel, 1);
  CHECK(result.traced.array().shape() == Shape{1});
  CHECK(result.traced.array()[0] == 0.0);
}

TEST_CASE("final state equals a manual fold") {
  auto kernel = [](double x) {
    return std::pair<double, Tree>{0.5 * x + 1.0, Tree(Array::scalar(x))};
  };
  double manual = 3.0;
  for (int i = 0; i < 9; ++i) manual = 0.5 * manual + 1.0;
  CHECK(trace(3.0, kernel, 9).final_state == manual);
}

TEST_CASE("partial masks stack some children and keep others finite") {
  auto kernel = [](int n) {
    Tree aux = Tree::node({{"kept", Tree(Array::scalar(static_cast<double>(n)))},
                           {"dropped", Tree(Array::from_vector({1.0 * n, 2.0 * n}))}});
    return std::pair<int, Tree>{n + 1, std::move(aux)};
  };
  TraceMask mask = TraceMask::node({{"kept", true}, {"dropped", false}});
  auto result = trace(0, kernel, 5, mask);
  CHECK(result.traced.child("kept").array().shape() == Shape{5});
  CHECK(result.traced.child("dropped").array().shape() == Shape{2});
  CHECK(result.traced.child("dropped").array()[1] == 8.0);
}

TEST_CASE("auxiliary structure is locked by the first step") {
  int calls = 0;
  auto shifty = [&calls](int n) {
    ++calls;
    Tree aux = calls < 3 ? Tree(Array::scalar(0.0)) : Tree(Array::from_vector({0.0, 0.0}));
    return std::pair<int, Tree>{n + 1, std::move(aux)};
  };
  CHECK_THROWS_AS(trace(0, shifty, 5), StructureMismatch);
}

TEST_CASE("thinned counter picks every num_substeps-th value") {
  auto inner = [](int n) {
    auto r = trace(n, counter_kernel, 3, TraceMask::all(false));
    return std::pair<int, Tree>{r.final_state, r.traced};
  };
  auto result = trace(0, inner, 4);
  CHECK(result.final_state == 12);
  REQUIRE(result.traced.array().shape() == Shape{4});
  CHECK(result.traced.array()[0] == 2.0);
  CHECK(result.traced.array()[1] == 5.0);
  CHECK(result.traced.array()[2] == 8.0);
  CHECK(result.traced.array()[3] == 11.0);
}

TEST_CASE("substeps of one reduce to the flat trace") {
  auto inner = [](int n) {
    auto r = trace(n, counter_kernel, 1, TraceMask::all(false));
    return std::pair<int, Tree>{r.final_state, r.traced};
  };
  auto nested = trace(0, inner, 6);
  auto flat = trace(0, counter_kernel, 6);
  CHECK(tree_bitwise_equal(nested.traced, flat.traced));
}

TEST_CASE("memory contract: untraced history is independent of num_steps") {
  auto aux_elements = [](std::size_t num_steps) {
    auto r = trace(0, counter_kernel, num_steps, TraceMask::all(false));
    return tree_num_elements(r.traced);
  };
  CHECK(aux_elements(2) == aux_elements(2000));
  // and the traced variant grows linearly
  CHECK(tree_num_elements(trace(0, counter_kernel, 2000).traced) ==
        1000 * tree_num_elements(trace(0, counter_kernel, 2).traced));
}

TEST_CASE("HMC thinned by 5 matches rows 4, 9, 14 of the flat run") {
  PotentialFn target = make_standard_normal_target(1);
  HmcState init = hamiltonian_monte_carlo_init(
      Tree(normal_sample(key_from_seed(50), Shape{8})), target);
  KeyedHmc start{init, key_from_seed(51)};

  auto flat_kernel = [&target](KeyedHmc s) { return keyed_hmc_kernel(std::move(s), target); };
  auto flat = trace(start, flat_kernel, 15);

  auto thin_kernel = [&](KeyedHmc s) {
    auto r = trace(std::move(s), flat_kernel, 5, TraceMask::all(false));
    return std::pair<KeyedHmc, Tree>{std::move(r.final_state), std::move(r.traced)};
  };
  auto thinned = trace(start, thin_kernel, 3);

  const Array& flat_states = flat.traced.child("state").array();
  const Array& thin_states = thinned.traced.child("state").array();
  REQUIRE(flat_states.shape() == Shape{15, 8});
  REQUIRE(thin_states.shape() == Shape{3, 8});
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(bitwise_equal(thin_states.row(j), flat_states.row(5 * j + 4)));
  }
  CHECK(tree_bitwise_equal(flat.final_state.hmc.state, thinned.final_state.hmc.state));
}
