#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "chainkit/hmc.hpp"
#include "chainkit/random.hpp"
#include "chainkit/targets.hpp"

using namespace chainkit;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

}  // namespace

TEST_CASE("MH accepts sure winners and rejects sure losers") {
  Tree current(Array::from_vector({1.0, 2.0, 3.0, 4.0}));
  Tree proposed(Array::from_vector({-1.0, -2.0, -3.0, -4.0}));
  Array energy_change = Array::from_vector({-kInf, 0.0, kInf, kNan});

  for (std::uint64_t seed = 0; seed < 32; ++seed) {
    auto [next, extra] =
        metropolis_hastings_step(current, proposed, energy_change, key_from_seed(seed));
    CHECK(extra.is_accepted[0] == 1.0);  // -inf: always accept
    CHECK(extra.is_accepted[1] == 1.0);  // 0: log(u) < 0 always
    CHECK(extra.is_accepted[2] == 0.0);  // +inf: always reject
    CHECK(extra.is_accepted[3] == 0.0);  // NaN: divergence, reject
    CHECK(next.array()[0] == -1.0);
    CHECK(next.array()[1] == -2.0);
    CHECK(next.array()[2] == 3.0);
    CHECK(next.array()[3] == 4.0);
  }
}

TEST_CASE("MH works on plain arrays and rejected rows are bitwise identical") {
  Array current = normal_sample(key_from_seed(71), Shape{6, 3});
  Array proposed = normal_sample(key_from_seed(72), Shape{6, 3});
  Array energy_change = Array::from_vector({kInf, kInf, -kInf, kNan, kInf, 0.0});
  auto [next, extra] =
      metropolis_hastings_step(current, proposed, energy_change, key_from_seed(5));
  for (std::size_t c = 0; c < 6; ++c) {
    const Array& source = extra.is_accepted[c] == 1.0 ? proposed : current;
    CHECK(bitwise_equal(next.row(c), source.row(c)));
  }
}

TEST_CASE("MH validates the energy shape") {
  Tree t(Array::from_vector({1.0}));
  CHECK_THROWS_AS(
      metropolis_hastings_step(t, t, Array(Shape{1, 1}, 0.0), key_from_seed(0)),
      ShapeError);
}

TEST_CASE("init caches exactly one potential evaluation") {
  LogisticRegressionData data = generate_dataset(17, 50, 3);
  PotentialFn target = make_logistic_regression_target(data.features, data.labels);
  Tree w0(normal_sample(key_from_seed(1), Shape{4, 3}));

  HmcState s = hamiltonian_monte_carlo_init(w0, target);
  PotentialResult direct = target(w0);
  CHECK(bitwise_equal(s.target_log_prob, direct.log_density));
  CHECK(tree_bitwise_equal(s.state_grads, direct.grad));
  CHECK(tree_bitwise_equal(s.state_extra, direct.extra));
  CHECK(tree_bitwise_equal(s.state, w0));
}

TEST_CASE("tiny steps are almost surely accepted") {
  PotentialFn target = make_standard_normal_target(1);
  HmcState s = hamiltonian_monte_carlo_init(Tree(normal_sample(key_from_seed(2), Shape{32})),
                                            target);
  auto [next, extra] = hamiltonian_monte_carlo_step(s, target, 1e-6, 5, key_from_seed(3));
  CHECK(extra.log_accept_ratio.max_abs() < 1e-9);
  for (std::size_t c = 0; c < 32; ++c) CHECK(extra.is_accepted[c] == 1.0);
}

TEST_CASE("log_accept_ratio is the negated energy change, unclamped") {
  PotentialFn target = make_standard_normal_target(1);
  HmcState s = hamiltonian_monte_carlo_init(Tree(normal_sample(key_from_seed(6), Shape{16})),
                                            target);
  auto [next, extra] = hamiltonian_monte_carlo_step(s, target, 0.7, 10, key_from_seed(7));
  for (std::size_t c = 0; c < 16; ++c) {
    CHECK(extra.log_accept_ratio[c] == -extra.integrator_extra.energy_change[c]);
  }
  // unclamped: somewhere in a batch this large some proposal is strictly better
  bool saw_positive = false;
  for (std::size_t c = 0; c < 16; ++c) {
    saw_positive = saw_positive || extra.log_accept_ratio[c] > 0.0;
  }
  CHECK(saw_positive);
}

TEST_CASE("rejection is the bitwise identity on every cached field") {
  PotentialFn target = make_standard_normal_target(1);
  // huge step size so a good fraction of proposals diverge
  HmcState s = hamiltonian_monte_carlo_init(
      Tree(normal_sample(key_from_seed(9), Shape{64})), target);
  auto [next, extra] = hamiltonian_monte_carlo_step(s, target, 4.0, 10, key_from_seed(10));

  std::size_t rejected = 0;
  for (std::size_t c = 0; c < 64; ++c) {
    if (extra.is_accepted[c] == 1.0) continue;
    ++rejected;
    CHECK(next.state.array()[c] == s.state.array()[c]);
    CHECK(next.state_grads.array()[c] == s.state_grads.array()[c]);
    CHECK(next.target_log_prob[c] == s.target_log_prob[c]);
  }
  CHECK(rejected > 0);

  // accepted rows take the proposed state
  for (std::size_t c = 0; c < 64; ++c) {
    if (extra.is_accepted[c] == 0.0) continue;
    CHECK(next.state.array()[c] == extra.proposed_hmc_state.state.array()[c]);
  }
}

TEST_CASE("the step is deterministic in (state, key)") {
  PotentialFn target = make_standard_normal_target(1);
  HmcState s = hamiltonian_monte_carlo_init(
      Tree(normal_sample(key_from_seed(20), Shape{8})), target);
  auto a = hamiltonian_monte_carlo_step(s, target, 0.5, 10, key_from_seed(21));
  auto b = hamiltonian_monte_carlo_step(s, target, 0.5, 10, key_from_seed(21));
  CHECK(tree_bitwise_equal(a.first.state, b.first.state));
  CHECK(bitwise_equal(a.second.is_accepted, b.second.is_accepted));
  CHECK(tree_bitwise_equal(a.second.initial_momentum, b.second.initial_momentum));
}

TEST_CASE("2-D normal long run recovers mean and acceptance") {
  PotentialFn target = make_standard_normal_target(1);
  const std::size_t num_chains = 64, steps = 1000, warmup = 200;
  HmcState s = hamiltonian_monte_carlo_init(
      Tree(normal_sample(key_from_seed(30), Shape{num_chains, 2})), target);

  RngKey key = key_from_seed(31);
  double accepted = 0.0;
  double count = 0.0;
  Array mean_acc = Array::zeros(Shape{2});
  for (std::size_t step = 0; step < steps; ++step) {
    auto [step_key, next_key] = split(key);
    key = next_key;
    auto [next, extra] = hamiltonian_monte_carlo_step(s, target, 0.5, 10, step_key);
    s = next;
    if (step < warmup) continue;
    for (std::size_t c = 0; c < num_chains; ++c) {
      accepted += extra.is_accepted[c];
      count += 1.0;
      mean_acc[0] += s.state.array().at({c, 0});
      mean_acc[1] += s.state.array().at({c, 1});
    }
  }
  CHECK(accepted / count > 0.6);
  CHECK(std::abs(mean_acc[0] / count) < 0.05);
  CHECK(std::abs(mean_acc[1] / count) < 0.05);
}

TEST_CASE("stationarity: exact-start chains stay on target") {
  PotentialFn target = make_standard_normal_target(1);
  const std::size_t num_chains = 4096;
  HmcState s = hamiltonian_monte_carlo_init(
      Tree(normal_sample(key_from_seed(40), Shape{num_chains})), target);
  RngKey key = key_from_seed(41);
  for (std::size_t step = 0; step < 500; ++step) {
    auto [step_key, next_key] = split(key);
    key = next_key;
    s = hamiltonian_monte_carlo_step(s, target, 0.5, 10, step_key).first;
  }
  std::vector<double> sorted(s.state.array().data().begin(), s.state.array().data().end());
  std::sort(sorted.begin(), sorted.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < num_chains; ++i) {
    double cdf = 0.5 * std::erfc(-sorted[i] / std::sqrt(2.0));
    ks = std::max(ks, std::abs(cdf - (i + 1.0) / num_chains));
    ks = std::max(ks, std::abs(cdf - static_cast<double>(i) / num_chains));
  }
  CHECK(ks < 1.628 / std::sqrt(static_cast<double>(num_chains)));
}
