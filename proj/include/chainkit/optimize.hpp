#pragma once

#include <cstdint>
#include <utility>

#include "chainkit/potential.hpp"
#include "chainkit/tree.hpp"

namespace chainkit {

struct GradientDescentState {
  Tree state;
};

struct AdamState {
  Tree state;
  Tree m;  // first-moment estimate
  Tree v;  // second-moment estimate
  std::int64_t t = 0;
};

// Extra for both optimizer kernels: the loss evaluation this step consumed.
struct OptimizerExtra {
  Array loss;
  Tree grad;
  Tree loss_extra;
};

GradientDescentState gradient_descent_init(Tree initial);

std::pair<GradientDescentState, OptimizerExtra> gradient_descent_step(
    const GradientDescentState& state, const LossFn& loss, double learning_rate);

AdamState adam_init(Tree initial);

std::pair<AdamState, OptimizerExtra> adam_step(const AdamState& state,
                                               const LossFn& loss,
                                               double learning_rate,
                                               double beta1 = 0.9,
                                               double beta2 = 0.999,
                                               double epsilon = 1e-8);

}  // namespace chainkit
