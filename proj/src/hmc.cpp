#include "chainkit/hmc.hpp"

namespace chainkit {

HmcState hamiltonian_monte_carlo_init(Tree state, const PotentialFn& target) {
  PotentialResult eval = target(state);
  return HmcState{std::move(state), std::move(eval.grad), std::move(eval.log_density),
                  std::move(eval.extra)};
}

std::pair<HmcState, HmcExtra> hamiltonian_monte_carlo_step(
    const HmcState& state, const PotentialFn& target, double step_size,
    std::size_t num_integrator_steps, const RngKey& key) {
  if (step_size <= 0.0) throw Error("hamiltonian_monte_carlo_step requires step_size > 0");
  if (num_integrator_steps < 1) {
    throw Error("hamiltonian_monte_carlo_step requires num_integrator_steps >= 1");
  }

  KineticFn kinetic = make_gaussian_kinetic_energy(state.target_log_prob.rank());

  auto [mh_key, sample_key] = split(key);
  Tree momentum = gaussian_momentum_sample(state.state, sample_key);

  IntegratorState integrator_state{state.state, state.state_extra, state.state_grads,
                                   state.target_log_prob, momentum};

  auto step_fn = [&](IntegratorState s) {
    return leapfrog_step(std::move(s), step_size, target, kinetic);
  };
  auto [final_integrator_state, integrator_extra] = hamiltonian_integrator(
      std::move(integrator_state), num_integrator_steps, step_fn, kinetic);

  HmcState proposed{final_integrator_state.state, final_integrator_state.state_grads,
                    final_integrator_state.target_log_prob,
                    final_integrator_state.state_extra};

  auto [next_state, mh_extra] =
      metropolis_hastings_step(state, proposed, integrator_extra.energy_change, mh_key);

  HmcExtra extra{std::move(mh_extra.is_accepted), -integrator_extra.energy_change,
                 std::move(proposed), std::move(final_integrator_state),
                 std::move(integrator_extra), std::move(momentum)};
  return {std::move(next_state), std::move(extra)};
}

}  // namespace chainkit
