#pragma once

#include <cmath>
#include <utility>

#include "chainkit/errors.hpp"
#include "chainkit/integrators.hpp"
#include "chainkit/potential.hpp"
#include "chainkit/random.hpp"

namespace chainkit {

struct HmcState {
  Tree state;
  Tree state_grads;
  Array target_log_prob;  // shape [C]
  Tree state_extra;
};

struct MhExtra {
  Array is_accepted;  // 0/1 per chain
};

struct HmcExtra {
  Array is_accepted;       // 0/1 per chain
  Array log_accept_ratio;  // -energy_change, unclamped
  HmcState proposed_hmc_state;
  IntegratorState integrator_state;
  IntegratorExtra integrator_extra;
  Tree initial_momentum;
};

// Per-chain selection between two states of the same shape; rows of the
// result come from proposed where accept is nonzero.
inline Array select_per_chain(const Array& accept, const Array& proposed,
                              const Array& current) {
  return select_rows(accept, proposed, current);
}

inline Tree select_per_chain(const Array& accept, const Tree& proposed,
                             const Tree& current) {
  return tree_select_rows(accept, proposed, current);
}

inline HmcState select_per_chain(const Array& accept, const HmcState& proposed,
                                 const HmcState& current) {
  return HmcState{
      tree_select_rows(accept, proposed.state, current.state),
      tree_select_rows(accept, proposed.state_grads, current.state_grads),
      select_rows(accept, proposed.target_log_prob, current.target_log_prob),
      tree_select_rows(accept, proposed.state_extra, current.state_extra)};
}

// Accepts chain c iff log(u_c) < -energy_change_c with u_c ~ Uniform(0, 1).
// NaN or +inf energy change rejects; rejected chains keep current bitwise.
template <typename S>
std::pair<S, MhExtra> metropolis_hastings_step(const S& current, const S& proposed,
                                               const Array& energy_change,
                                               const RngKey& key) {
  if (energy_change.rank() != 1) {
    throw ShapeError("energy_change must have shape [C]");
  }
  const std::size_t num_chains = energy_change.leading_extent();
  Array u = uniform_sample(key, Shape{num_chains});
  Array accept = Array::zeros(Shape{num_chains});
  for (std::size_t c = 0; c < num_chains; ++c) {
    // log(u) is finite because u is strictly inside (0, 1); the comparison is
    // false for NaN energy_change, which is exactly the reject-on-divergence
    // convention.
    accept[c] = std::log(u[c]) < -energy_change[c] ? 1.0 : 0.0;
  }
  return {select_per_chain(accept, proposed, current), MhExtra{std::move(accept)}};
}

// Evaluates the target once and caches log density, gradients, and extra.
HmcState hamiltonian_monte_carlo_init(Tree state, const PotentialFn& target);

// Momentum refresh, leapfrog trajectory, and MH accept-reject, composed from
// the public pieces above.
std::pair<HmcState, HmcExtra> hamiltonian_monte_carlo_step(
    const HmcState& state, const PotentialFn& target, double step_size,
    std::size_t num_integrator_steps, const RngKey& key);

}  // namespace chainkit
