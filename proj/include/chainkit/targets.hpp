#pragma once

#include <cstdint>

#include "chainkit/array.hpp"
#include "chainkit/potential.hpp"
#include "chainkit/tree.hpp"

namespace chainkit {

// log pi(x) = -1/2 sum x^2 over everything past the batch axes, summed
// across leaves. Un-normalized.
PotentialFn make_standard_normal_target(std::size_t num_batch_dims = 1);

// Independent normals with mean and scale leaves that are scalars or match
// the per-chain row shape (shared across the chain axis). Keeps the
// -log(scale) term so densities with different scales are comparable.
PotentialFn make_diagonal_gaussian_target(const Tree& mean, const Tree& scale,
                                          std::size_t num_batch_dims = 1);

struct LogisticRegressionData {
  Array features;      // [N, D]
  Array labels;        // [N], each 0 or 1
  Array true_weights;  // [D]
};

// Synthetic draw: standard normal features, true weights from the prior,
// labels Bernoulli through the logit link. Deterministic in the seed.
LogisticRegressionData generate_dataset(std::uint64_t seed, std::size_t n, std::size_t d);

// Bayesian logistic regression posterior over weights. Standard normal
// prior (normalized), Bernoulli likelihood. Accepts weights shaped [D] or
// [C, D]; extra carries the per-datum logits; the gradient is closed form,
// -w + X^T (y - sigmoid(Xw)).
PotentialFn make_logistic_regression_target(const Array& features, const Array& labels);

}  // namespace chainkit
