#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "chainkit/tree.hpp"

namespace chainkit {

// Streaming accumulators are immutable values: step functions return a new
// state, and two accumulators built on disjoint substreams can be merged
// (the pairwise Chan update), which makes parallel reduction safe.

struct RunningMeanState {
  double count = 0.0;
  Tree mean;
};

struct RunningVarianceState {
  double count = 0.0;
  Tree mean;
  Tree m2;  // elementwise sum of squared deviations
};

struct RunningCovState {
  double count = 0.0;
  Tree mean;      // event-shaped leaves
  Tree comoment;  // per leaf: [d, d] block over the flattened event
};

struct EwmaState {
  double decay = 0.9;
  double count = 0.0;
  Tree value;
};

struct EwmaExtra {
  Tree debiased;
  double debias_divisor = 1.0;
};

struct RhatState {
  double count = 0.0;
  std::size_t num_chains = 0;
  Tree chain_means;  // leaves keep the chain axis
  Tree chain_m2;
};

struct AutoCovState {
  std::size_t max_lag = 0;
  std::size_t count = 0;
  std::vector<Tree> ring;       // last max_lag + 1 observations
  std::vector<Tree> cross_sum;  // per lag k: sum of x_t * x_{t+k}
  std::vector<Tree> left_sum;   // per lag k: sum of x_t over seen pairs
  std::vector<Tree> right_sum;  // per lag k: sum of x_{t+k}
  RunningMeanState mean;
};

// The prototype fixes structure and event shapes; its values are ignored.
// With axis = 0 the leading axis of each observation leaf is pre-aggregated:
// every chain slice counts as one observation.
RunningMeanState running_mean_init(const Tree& event_prototype);
std::pair<RunningMeanState, Tree> running_mean_step(const RunningMeanState& s,
                                                    const Tree& x,
                                                    std::optional<int> axis = {});
Tree running_mean(const RunningMeanState& s);
RunningMeanState merge(const RunningMeanState& a, const RunningMeanState& b);

RunningVarianceState running_variance_init(const Tree& event_prototype);
std::pair<RunningVarianceState, Tree> running_variance_step(const RunningVarianceState& s,
                                                            const Tree& x,
                                                            std::optional<int> axis = {});
Tree running_variance(const RunningVarianceState& s, bool sample = false);
RunningVarianceState merge(const RunningVarianceState& a, const RunningVarianceState& b);

RunningCovState running_covariance_init(const Tree& event_prototype);
std::pair<RunningCovState, Tree> running_covariance_step(const RunningCovState& s,
                                                         const Tree& x,
                                                         std::optional<int> axis = {});
// Per-leaf covariance with shape event_shape ++ event_shape.
Tree running_covariance(const RunningCovState& s, bool sample = false);
RunningCovState merge(const RunningCovState& a, const RunningCovState& b);

EwmaState ewma_init(double decay, const Tree& event_prototype);
std::pair<EwmaState, EwmaExtra> ewma_step(const EwmaState& s, const Tree& x);
Tree ewma_debiased(const EwmaState& s);

// Streaming potential scale reduction. The prototype carries the chain axis;
// throws InsufficientChains unless it has extent >= 2.
RhatState potential_scale_reduction_init(const Tree& chain_prototype);
std::pair<RhatState, Tree> potential_scale_reduction_step(const RhatState& s, const Tree& x);
// Elementwise R-hat with the chain axis reduced away. Throws
// InsufficientSamples before two observations.
Tree potential_scale_reduction_extract(const RhatState& s);

// Windowed streaming autocovariance over lags 0..max_lag, elementwise.
AutoCovState auto_covariance_init(std::size_t max_lag, const Tree& prototype);
std::pair<AutoCovState, Tree> auto_covariance_step(const AutoCovState& s, const Tree& x);
// c(k) for k = 0..max_lag about the final running mean; leaves gain a leading
// lag axis of extent max_lag + 1. Throws InsufficientSamples if n <= max_lag.
Tree auto_covariance_extract(const AutoCovState& s);

// n / (1 + 2 sum rho(k)) with the sum truncated at the first k where
// rho(k) + rho(k+1) <= 0. Throws DegenerateSeries on zero-variance elements.
Tree effective_sample_size(const AutoCovState& s);

}  // namespace chainkit
