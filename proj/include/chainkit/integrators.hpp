#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "chainkit/potential.hpp"
#include "chainkit/random.hpp"
#include "chainkit/tree.hpp"

namespace chainkit {

// Momentum tree -> per-batch kinetic energy.
using KineticFn = std::function<Array(const Tree&)>;

// State of the inner Hamiltonian integrator. target_log_prob and state_grads
// are always the cached evaluation of the potential at state, so consumers
// never re-evaluate at a point the integrator has already visited.
struct IntegratorState {
  Tree state;
  Tree state_extra;
  Tree state_grads;
  Array target_log_prob;  // shape [C]
  Tree momentum;
};

struct IntegratorStepExtra {
  Array target_log_prob;  // after the step, shape [C]
};

struct IntegratorExtra {
  Array energy_change;  // E_final - E_initial per chain
  // Per-step log densities, populated only when requested.
  std::optional<std::vector<Array>> step_log_probs;
};

using IntegratorStepFn =
    std::function<std::pair<IntegratorState, IntegratorStepExtra>(IntegratorState)>;

// K(p) = 1/2 sum p^2 over all axes after the first num_batch_dims, summed
// across leaves (identity mass matrix).
KineticFn make_gaussian_kinetic_energy(std::size_t num_batch_dims);

// Standard-normal momentum with the structure of state.
Tree gaussian_momentum_sample(const Tree& state, const RngKey& key);

// One leapfrog step of size step_size. Uses the gradient cached in the input
// state for the first half-kick, so each step costs one potential evaluation.
std::pair<IntegratorState, IntegratorStepExtra> leapfrog_step(
    IntegratorState state, double step_size, const PotentialFn& target,
    const KineticFn& kinetic);

// Iterates step_fn num_steps times and reports the net energy change
// E = -target_log_prob + kinetic, evaluated before and after.
std::pair<IntegratorState, IntegratorExtra> hamiltonian_integrator(
    IntegratorState state, std::size_t num_steps, const IntegratorStepFn& step_fn,
    const KineticFn& kinetic, bool collect_step_log_probs = false);

}  // namespace chainkit
