#pragma once

#include <functional>

#include "chainkit/array.hpp"
#include "chainkit/tree.hpp"

namespace chainkit {

// A target density bundles the per-chain un-normalized log density with an
// explicit gradient (same structure as the evaluated state) and arbitrary
// side information. Non-finite log-density entries signal an out-of-support
// point; downstream code must then ignore the matching gradient rows.
struct PotentialResult {
  Array log_density;  // shape [C]
  Tree grad;
  Tree extra;
};

using PotentialFn = std::function<PotentialResult(const Tree&)>;

struct LossResult {
  Array loss;  // shape [C] or scalar
  Tree grad;
  Tree extra;
};

using LossFn = std::function<LossResult(const Tree&)>;

// Per-chain scalar function used by the finite-difference oracle.
using ScalarPerChainFn = std::function<Array(const Tree&)>;

// Central-difference gradient with per-coordinate step h * (1 + |x_i|).
// Throws NonFiniteValue if any probe evaluates non-finite.
Tree finite_diff_grad(const ScalarPerChainFn& f, const Tree& x, double h = 1e-5);

using GradProviderFn = std::function<std::pair<Tree, Tree>(const Tree&)>;

// Loss whose value is identically zero and whose gradient is the provider's
// first output, broadcast leafwise against the parameter shapes. Lets
// gradient-based optimizers consume a statistic that is not itself a
// derivative.
LossFn make_surrogate_loss_fn(GradProviderFn grad_provider);

// Broadcasts provided onto the structure and shapes of target_structure:
// scalar leaves fill whole subtrees, matching structures combine leafwise.
Tree broadcast_tree(const Tree& provided, const Tree& target_structure);

}  // namespace chainkit
