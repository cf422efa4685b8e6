#include "chainkit/optimize.hpp"

#include <cmath>

#include "chainkit/errors.hpp"

namespace chainkit {

GradientDescentState gradient_descent_init(Tree initial) {
  return GradientDescentState{std::move(initial)};
}

std::pair<GradientDescentState, OptimizerExtra> gradient_descent_step(
    const GradientDescentState& state, const LossFn& loss, double learning_rate) {
  if (learning_rate <= 0.0) throw Error("gradient_descent_step requires learning_rate > 0");
  LossResult eval = loss(state.state);
  Tree next = tree_sub(state.state, tree_scale(eval.grad, learning_rate));
  return {GradientDescentState{std::move(next)},
          OptimizerExtra{std::move(eval.loss), std::move(eval.grad), std::move(eval.extra)}};
}

AdamState adam_init(Tree initial) {
  Tree m = zeros_like(initial);
  Tree v = zeros_like(initial);
  return AdamState{std::move(initial), std::move(m), std::move(v), 0};
}

std::pair<AdamState, OptimizerExtra> adam_step(const AdamState& state, const LossFn& loss,
                                               double learning_rate, double beta1,
                                               double beta2, double epsilon) {
  if (learning_rate <= 0.0) throw Error("adam_step requires learning_rate > 0");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw Error("adam_step requires 0 <= beta1, beta2 < 1");
  }

  LossResult eval = loss(state.state);
  const std::int64_t t = state.t + 1;

  Tree m = tree_zip_with(
      [beta1](const Array& m_prev, const Array& g) {
        return Array::zip(m_prev, g, [beta1](double m_i, double g_i) {
          return beta1 * m_i + (1.0 - beta1) * g_i;
        });
      },
      state.m, eval.grad);
  Tree v = tree_zip_with(
      [beta2](const Array& v_prev, const Array& g) {
        return Array::zip(v_prev, g, [beta2](double v_i, double g_i) {
          return beta2 * v_i + (1.0 - beta2) * g_i * g_i;
        });
      },
      state.v, eval.grad);

  const double m_debias = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double v_debias = 1.0 - std::pow(beta2, static_cast<double>(t));

  Tree update = tree_zip_with(
      [&](const Array& m_i, const Array& v_i) {
        return Array::zip(m_i, v_i, [&](double m_e, double v_e) {
          return learning_rate * (m_e / m_debias) /
                 (std::sqrt(v_e / v_debias) + epsilon);
        });
      },
      m, v);

  Tree next = tree_sub(state.state, update);
  return {AdamState{std::move(next), std::move(m), std::move(v), t},
          OptimizerExtra{std::move(eval.loss), std::move(eval.grad), std::move(eval.extra)}};
}

}  // namespace chainkit
