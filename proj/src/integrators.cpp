#include "chainkit/integrators.hpp"

#include "chainkit/errors.hpp"

namespace chainkit {

KineticFn make_gaussian_kinetic_energy(std::size_t num_batch_dims) {
  return [num_batch_dims](const Tree& momentum) -> Array {
    std::vector<const Array*> leaves = tree_leaves(momentum);
    if (leaves.empty()) return Array::scalar(0.0);
    Array total = Array::zeros(Shape());
    bool first = true;
    for (const Array* leaf : leaves) {
      if (leaf->rank() < num_batch_dims) {
        throw ShapeError("momentum leaf of shape " + shape_to_string(leaf->shape()) +
                         " has fewer axes than num_batch_dims " +
                         std::to_string(num_batch_dims));
      }
      Array part = (*leaf * *leaf).sum_over_event(num_batch_dims) * 0.5;
      if (first) {
        total = std::move(part);
        first = false;
      } else {
        total += part;
      }
    }
    return total;
  };
}

Tree gaussian_momentum_sample(const Tree& state, const RngKey& key) {
  return normal_sample_tree(key, state);
}

std::pair<IntegratorState, IntegratorStepExtra> leapfrog_step(
    IntegratorState state, double step_size, const PotentialFn& target,
    const KineticFn& kinetic) {
  (void)kinetic;  // identity-mass leapfrog never evaluates K internally
  if (step_size <= 0.0) throw Error("leapfrog_step requires step_size > 0");

  const double half = 0.5 * step_size;
  Tree momentum_half =
      tree_add(state.momentum, tree_scale(state.state_grads, half));
  Tree new_state = tree_add(state.state, tree_scale(momentum_half, step_size));

  PotentialResult eval = target(new_state);
  Tree new_momentum = tree_add(momentum_half, tree_scale(eval.grad, half));

  IntegratorState out{std::move(new_state), std::move(eval.extra),
                      std::move(eval.grad), eval.log_density,
                      std::move(new_momentum)};
  return {std::move(out), IntegratorStepExtra{eval.log_density}};
}

std::pair<IntegratorState, IntegratorExtra> hamiltonian_integrator(
    IntegratorState state, std::size_t num_steps, const IntegratorStepFn& step_fn,
    const KineticFn& kinetic, bool collect_step_log_probs) {
  if (num_steps < 1) throw Error("hamiltonian_integrator requires num_steps >= 1");

  Array initial_energy = kinetic(state.momentum) - state.target_log_prob;

  IntegratorExtra extra;
  if (collect_step_log_probs) extra.step_log_probs.emplace();

  for (std::size_t i = 0; i < num_steps; ++i) {
    auto [next, step_extra] = step_fn(std::move(state));
    state = std::move(next);
    if (collect_step_log_probs) extra.step_log_probs->push_back(step_extra.target_log_prob);
  }

  Array final_energy = kinetic(state.momentum) - state.target_log_prob;
  extra.energy_change = final_energy - initial_energy;
  return {std::move(state), std::move(extra)};
}

}  // namespace chainkit
