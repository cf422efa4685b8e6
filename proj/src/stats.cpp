#include "chainkit/stats.hpp"

#include <cmath>

#include "chainkit/errors.hpp"

namespace chainkit {

namespace {

void check_count_positive(double count, const char* what) {
  if (count <= 0.0) {
    throw InsufficientSamples(std::string(what) + " requires at least one observation");
  }
}

// Observation leaves must either match the event shape exactly (no axis) or
// carry one extra leading axis (axis = 0).
void check_axis(std::optional<int> axis) {
  if (axis && *axis != 0) {
    throw ShapeError("pre-aggregation is only supported over the leading axis");
  }
}

struct LeafBatch {
  std::size_t count;
  const Array* values;  // [count] + event shape when batched, event shape otherwise
};

LeafBatch leaf_batch(const Array& x, const Array& event, bool batched) {
  if (batched) {
    if (x.rank() < 1 || Shape(x.shape().begin() + 1, x.shape().end()) != event.shape()) {
      throw ShapeError("observation leaf " + shape_to_string(x.shape()) +
                       " does not match event shape " + shape_to_string(event.shape()) +
                       " under axis pre-aggregation");
    }
    return {x.leading_extent(), &x};
  }
  if (!same_shape(x, event)) {
    throw ShapeError("observation leaf " + shape_to_string(x.shape()) +
                     " does not match event shape " + shape_to_string(event.shape()));
  }
  return {1, &x};
}

// Chan merge of elementwise (count, mean, m2) blocks; m2 may be null for
// mean-only accumulators.
void chan_merge_elementwise(double n_a, Array& mean_a, Array* m2_a, double n_b,
                            const Array& mean_b, const Array* m2_b) {
  if (n_b == 0.0) return;
  if (n_a == 0.0) {
    mean_a = mean_b;
    if (m2_a) *m2_a = *m2_b;
    return;
  }
  const double n = n_a + n_b;
  for (std::size_t i = 0; i < mean_a.size(); ++i) {
    const double delta = mean_b[i] - mean_a[i];
    if (m2_a) (*m2_a)[i] += (*m2_b)[i] + delta * delta * (n_a * n_b / n);
    mean_a[i] += delta * (n_b / n);
  }
}

// Chan merge for a covariance block: mean [d], comoment [d, d].
void chan_merge_block(double n_a, Array& mean_a, Array& com_a, double n_b,
                      const Array& mean_b, const Array& com_b) {
  if (n_b == 0.0) return;
  if (n_a == 0.0) {
    mean_a = mean_b;
    com_a = com_b;
    return;
  }
  const double n = n_a + n_b;
  const std::size_t d = mean_a.size();
  const double w = n_a * n_b / n;
  for (std::size_t i = 0; i < d; ++i) {
    const double di = mean_b[i] - mean_a[i];
    for (std::size_t j = 0; j < d; ++j) {
      const double dj = mean_b[j] - mean_a[j];
      com_a[i * d + j] += com_b[i * d + j] + di * dj * w;
    }
  }
  for (std::size_t i = 0; i < d; ++i) mean_a[i] += (mean_b[i] - mean_a[i]) * (n_b / n);
}

}  // namespace

RunningMeanState running_mean_init(const Tree& event_prototype) {
  return RunningMeanState{0.0, zeros_like(event_prototype)};
}

std::pair<RunningMeanState, Tree> running_mean_step(const RunningMeanState& s,
                                                    const Tree& x,
                                                    std::optional<int> axis) {
  check_axis(axis);
  const bool batched = axis.has_value();
  RunningMeanState out = s;
  std::vector<Array*> means = tree_leaves(out.mean);
  std::vector<const Array*> obs = tree_leaves(x);
  if (obs.size() != means.size()) throw ShapeError("observation structure mismatch");

  double batch_count = 0.0;
  for (std::size_t l = 0; l < means.size(); ++l) {
    LeafBatch batch = leaf_batch(*obs[l], *means[l], batched);
    batch_count = static_cast<double>(batch.count);
    const std::size_t d = means[l]->size();
    Array batch_mean = Array::zeros(means[l]->shape());
    for (std::size_t c = 0; c < batch.count; ++c) {
      for (std::size_t i = 0; i < d; ++i) {
        batch_mean[i] += (*batch.values)[c * d + i];
      }
    }
    batch_mean *= 1.0 / static_cast<double>(batch.count);
    chan_merge_elementwise(out.count, *means[l], nullptr, batch_count, batch_mean, nullptr);
  }
  out.count += batch_count;
  return {std::move(out), Tree()};
}

Tree running_mean(const RunningMeanState& s) {
  check_count_positive(s.count, "running_mean");
  return s.mean;
}

RunningMeanState merge(const RunningMeanState& a, const RunningMeanState& b) {
  RunningMeanState out = a;
  std::vector<Array*> means = tree_leaves(out.mean);
  std::vector<const Array*> other = tree_leaves(b.mean);
  for (std::size_t l = 0; l < means.size(); ++l) {
    chan_merge_elementwise(a.count, *means[l], nullptr, b.count, *other[l], nullptr);
  }
  out.count = a.count + b.count;
  return out;
}

RunningVarianceState running_variance_init(const Tree& event_prototype) {
  return RunningVarianceState{0.0, zeros_like(event_prototype), zeros_like(event_prototype)};
}

std::pair<RunningVarianceState, Tree> running_variance_step(const RunningVarianceState& s,
                                                            const Tree& x,
                                                            std::optional<int> axis) {
  check_axis(axis);
  const bool batched = axis.has_value();
  RunningVarianceState out = s;
  std::vector<Array*> means = tree_leaves(out.mean);
  std::vector<Array*> m2s = tree_leaves(out.m2);
  std::vector<const Array*> obs = tree_leaves(x);
  if (obs.size() != means.size()) throw ShapeError("observation structure mismatch");

  double batch_count = 0.0;
  for (std::size_t l = 0; l < means.size(); ++l) {
    LeafBatch batch = leaf_batch(*obs[l], *means[l], batched);
    batch_count = static_cast<double>(batch.count);
    const std::size_t d = means[l]->size();
    Array batch_mean = Array::zeros(means[l]->shape());
    Array batch_m2 = Array::zeros(means[l]->shape());
    for (std::size_t c = 0; c < batch.count; ++c) {
      for (std::size_t i = 0; i < d; ++i) batch_mean[i] += (*batch.values)[c * d + i];
    }
    batch_mean *= 1.0 / batch_count;
    for (std::size_t c = 0; c < batch.count; ++c) {
      for (std::size_t i = 0; i < d; ++i) {
        const double dev = (*batch.values)[c * d + i] - batch_mean[i];
        batch_m2[i] += dev * dev;
      }
    }
    chan_merge_elementwise(out.count, *means[l], m2s[l], batch_count, batch_mean, &batch_m2);
  }
  out.count += batch_count;
  return {std::move(out), Tree()};
}

Tree running_variance(const RunningVarianceState& s, bool sample) {
  check_count_positive(s.count, "running_variance");
  const double divisor = sample ? s.count - 1.0 : s.count;
  if (divisor <= 0.0) throw InsufficientSamples("sample variance requires n >= 2");
  return tree_map([divisor](const Array& m2) { return m2 / divisor; }, s.m2);
}

RunningVarianceState merge(const RunningVarianceState& a, const RunningVarianceState& b) {
  RunningVarianceState out = a;
  std::vector<Array*> means = tree_leaves(out.mean);
  std::vector<Array*> m2s = tree_leaves(out.m2);
  std::vector<const Array*> bm = tree_leaves(b.mean);
  std::vector<const Array*> bm2 = tree_leaves(b.m2);
  for (std::size_t l = 0; l < means.size(); ++l) {
    chan_merge_elementwise(a.count, *means[l], m2s[l], b.count, *bm[l], bm2[l]);
  }
  out.count = a.count + b.count;
  return out;
}

RunningCovState running_covariance_init(const Tree& event_prototype) {
  Tree comoment = tree_map(
      [](const Array& leaf) {
        const std::size_t d = leaf.size();
        return Array::zeros(Shape{d, d});
      },
      event_prototype);
  return RunningCovState{0.0, zeros_like(event_prototype), std::move(comoment)};
}

std::pair<RunningCovState, Tree> running_covariance_step(const RunningCovState& s,
                                                         const Tree& x,
                                                         std::optional<int> axis) {
  check_axis(axis);
  const bool batched = axis.has_value();
  RunningCovState out = s;
  std::vector<Array*> means = tree_leaves(out.mean);
  std::vector<Array*> coms = tree_leaves(out.comoment);
  std::vector<const Array*> obs = tree_leaves(x);
  if (obs.size() != means.size()) throw ShapeError("observation structure mismatch");

  double batch_count = 0.0;
  for (std::size_t l = 0; l < means.size(); ++l) {
    LeafBatch batch = leaf_batch(*obs[l], *means[l], batched);
    batch_count = static_cast<double>(batch.count);
    const std::size_t d = means[l]->size();
    Array batch_mean = Array::zeros(means[l]->shape());
    for (std::size_t c = 0; c < batch.count; ++c) {
      for (std::size_t i = 0; i < d; ++i) batch_mean[i] += (*batch.values)[c * d + i];
    }
    batch_mean *= 1.0 / batch_count;
    Array batch_com = Array::zeros(Shape{d, d});
    std::vector<double> dev(d);
    for (std::size_t c = 0; c < batch.count; ++c) {
      for (std::size_t i = 0; i < d; ++i) dev[i] = (*batch.values)[c * d + i] - batch_mean[i];
      for (std::size_t i = 0; i < d; ++i) {
        const double di = dev[i];
        double* row = &batch_com[i * d];
        for (std::size_t j = 0; j < d; ++j) row[j] += di * dev[j];
      }
    }
    chan_merge_block(out.count, *means[l], *coms[l], batch_count, batch_mean, batch_com);
  }
  out.count += batch_count;
  return {std::move(out), Tree()};
}

Tree running_covariance(const RunningCovState& s, bool sample) {
  check_count_positive(s.count, "running_covariance");
  const double divisor = sample ? s.count - 1.0 : s.count;
  if (divisor <= 0.0) throw InsufficientSamples("sample covariance requires n >= 2");
  std::vector<const Array*> means = tree_leaves(s.mean);
  std::size_t leaf_index = 0;
  return tree_map(
      [&](const Array& com) {
        const Shape& event = means[leaf_index++]->shape();
        Shape out_shape = event;
        out_shape.insert(out_shape.end(), event.begin(), event.end());
        return (com / divisor).reshape(std::move(out_shape));
      },
      s.comoment);
}

RunningCovState merge(const RunningCovState& a, const RunningCovState& b) {
  RunningCovState out = a;
  std::vector<Array*> means = tree_leaves(out.mean);
  std::vector<Array*> coms = tree_leaves(out.comoment);
  std::vector<const Array*> bm = tree_leaves(b.mean);
  std::vector<const Array*> bc = tree_leaves(b.comoment);
  for (std::size_t l = 0; l < means.size(); ++l) {
    chan_merge_block(a.count, *means[l], *coms[l], b.count, *bm[l], *bc[l]);
  }
  out.count = a.count + b.count;
  return out;
}

EwmaState ewma_init(double decay, const Tree& event_prototype) {
  if (decay <= 0.0 || decay >= 1.0) throw Error("ewma decay must be inside (0, 1)");
  return EwmaState{decay, 0.0, zeros_like(event_prototype)};
}

std::pair<EwmaState, EwmaExtra> ewma_step(const EwmaState& s, const Tree& x) {
  EwmaState out = s;
  out.value = tree_zip_with(
      [&](const Array& v, const Array& obs) {
        return Array::zip(v, obs, [&](double a, double b) {
          return s.decay * a + (1.0 - s.decay) * b;
        });
      },
      s.value, x);
  out.count = s.count + 1.0;
  const double divisor = 1.0 - std::pow(s.decay, out.count);
  EwmaExtra extra{tree_map([divisor](const Array& v) { return v / divisor; }, out.value),
                  divisor};
  return {std::move(out), std::move(extra)};
}

Tree ewma_debiased(const EwmaState& s) {
  check_count_positive(s.count, "ewma_debiased");
  const double divisor = 1.0 - std::pow(s.decay, s.count);
  return tree_map([divisor](const Array& v) { return v / divisor; }, s.value);
}

RhatState potential_scale_reduction_init(const Tree& chain_prototype) {
  std::vector<const Array*> leaves = tree_leaves(chain_prototype);
  if (leaves.empty()) throw ShapeError("potential scale reduction needs at least one leaf");
  const std::size_t num_chains = leaves[0]->rank() >= 1 ? leaves[0]->leading_extent() : 0;
  if (num_chains < 2) {
    throw InsufficientChains("potential scale reduction requires at least two chains");
  }
  validate_batched(chain_prototype, num_chains);
  return RhatState{0.0, num_chains, zeros_like(chain_prototype), zeros_like(chain_prototype)};
}

std::pair<RhatState, Tree> potential_scale_reduction_step(const RhatState& s, const Tree& x) {
  RhatState out = s;
  out.count = s.count + 1.0;
  std::vector<Array*> means = tree_leaves(out.chain_means);
  std::vector<Array*> m2s = tree_leaves(out.chain_m2);
  std::vector<const Array*> obs = tree_leaves(x);
  if (obs.size() != means.size()) throw ShapeError("observation structure mismatch");
  for (std::size_t l = 0; l < means.size(); ++l) {
    if (!same_shape(*obs[l], *means[l])) {
      throw ShapeError("observation leaf " + shape_to_string(obs[l]->shape()) +
                       " does not match " + shape_to_string(means[l]->shape()));
    }
    for (std::size_t i = 0; i < means[l]->size(); ++i) {
      const double value = (*obs[l])[i];
      const double delta = value - (*means[l])[i];
      (*means[l])[i] += delta / out.count;
      (*m2s[l])[i] += delta * (value - (*means[l])[i]);
    }
  }
  return {std::move(out), Tree()};
}

Tree potential_scale_reduction_extract(const RhatState& s) {
  if (s.count < 2.0) {
    throw InsufficientSamples("potential scale reduction requires n >= 2");
  }
  const double n = s.count;
  const double num_chains = static_cast<double>(s.num_chains);
  std::vector<const Array*> m2s = tree_leaves(s.chain_m2);
  std::size_t leaf_index = 0;
  return tree_map(
      [&](const Array& chain_means) {
        const Array& chain_m2 = *m2s[leaf_index++];
        const std::size_t event = chain_means.row_size();
        Shape event_shape(chain_means.shape().begin() + 1, chain_means.shape().end());
        Array rhat = Array::zeros(event_shape);
        for (std::size_t e = 0; e < event; ++e) {
          double mean_of_means = 0.0;
          double within = 0.0;
          for (std::size_t c = 0; c < s.num_chains; ++c) {
            mean_of_means += chain_means[c * event + e];
            within += chain_m2[c * event + e] / (n - 1.0);
          }
          mean_of_means /= num_chains;
          within /= num_chains;
          double between_over_n = 0.0;
          for (std::size_t c = 0; c < s.num_chains; ++c) {
            const double dev = chain_means[c * event + e] - mean_of_means;
            between_over_n += dev * dev;
          }
          between_over_n /= num_chains - 1.0;
          // algebraically ((n-1)/n W + B/n) / W, arranged so B = 0 gives
          // exactly sqrt((n-1)/n) and W = 0 gives +inf
          rhat[e] = std::sqrt((n - 1.0) / n + between_over_n / within);
        }
        return rhat;
      },
      s.chain_means);
}

AutoCovState auto_covariance_init(std::size_t max_lag, const Tree& prototype) {
  if (max_lag < 1) throw Error("auto_covariance requires max_lag >= 1");
  AutoCovState s;
  s.max_lag = max_lag;
  s.count = 0;
  s.ring.assign(max_lag + 1, zeros_like(prototype));
  s.cross_sum.assign(max_lag + 1, zeros_like(prototype));
  s.left_sum.assign(max_lag + 1, zeros_like(prototype));
  s.right_sum.assign(max_lag + 1, zeros_like(prototype));
  s.mean = running_mean_init(prototype);
  return s;
}

std::pair<AutoCovState, Tree> auto_covariance_step(const AutoCovState& s, const Tree& x) {
  if (!same_structure(x, s.mean.mean)) {
    throw ShapeError("observation does not match the auto-covariance prototype");
  }
  AutoCovState out = s;
  const std::size_t n_prev = s.count;
  const std::size_t window = s.max_lag + 1;
  const std::size_t lags = std::min(s.max_lag, n_prev);
  for (std::size_t k = 0; k <= lags; ++k) {
    const Tree& past = k == 0 ? x : out.ring[(n_prev - k) % window];
    out.cross_sum[k] = tree_add(out.cross_sum[k], tree_mul(past, x));
    out.left_sum[k] = tree_add(out.left_sum[k], past);
    out.right_sum[k] = tree_add(out.right_sum[k], x);
  }
  out.ring[n_prev % window] = x;
  out.count = n_prev + 1;
  out.mean = running_mean_step(out.mean, x).first;
  return {std::move(out), Tree()};
}

Tree auto_covariance_extract(const AutoCovState& s) {
  if (s.count <= s.max_lag) {
    throw InsufficientSamples("auto-covariance needs more observations than max_lag");
  }
  const Tree mean = running_mean(s.mean);
  Tree stacked = tree_map(
      [&](const Array& leaf) {
        Shape shape{s.max_lag + 1};
        shape.insert(shape.end(), leaf.shape().begin(), leaf.shape().end());
        return Array::zeros(shape);
      },
      mean);
  std::vector<Array*> out_leaves = tree_leaves(stacked);
  std::vector<const Array*> mean_leaves = tree_leaves(mean);
  for (std::size_t k = 0; k <= s.max_lag; ++k) {
    const double pairs = static_cast<double>(s.count - k);
    std::vector<const Array*> cross = tree_leaves(s.cross_sum[k]);
    std::vector<const Array*> left = tree_leaves(s.left_sum[k]);
    std::vector<const Array*> right = tree_leaves(s.right_sum[k]);
    for (std::size_t l = 0; l < out_leaves.size(); ++l) {
      const std::size_t d = mean_leaves[l]->size();
      for (std::size_t i = 0; i < d; ++i) {
        const double m = (*mean_leaves[l])[i];
        const double value = ((*cross[l])[i] - m * (*left[l])[i] - m * (*right[l])[i] +
                              pairs * m * m) /
                             pairs;
        (*out_leaves[l])[k * d + i] = value;
      }
    }
  }
  return stacked;
}

Tree effective_sample_size(const AutoCovState& s) {
  Tree acov = auto_covariance_extract(s);
  const double n = static_cast<double>(s.count);
  return tree_map(
      [&](const Array& stacked) {
        const std::size_t d = stacked.size() / (s.max_lag + 1);
        Shape event_shape(stacked.shape().begin() + 1, stacked.shape().end());
        Array ess = Array::zeros(event_shape);
        for (std::size_t i = 0; i < d; ++i) {
          const double c0 = stacked[i];
          if (c0 <= 0.0) {
            throw DegenerateSeries("effective sample size undefined for zero variance");
          }
          double acc = 0.0;
          for (std::size_t k = 1; k <= s.max_lag; ++k) {
            const double rho = stacked[k * d + i] / c0;
            const double rho_next =
                k + 1 <= s.max_lag ? stacked[(k + 1) * d + i] / c0 : 0.0;
            if (rho + rho_next <= 0.0) break;
            acc += rho;
          }
          ess[i] = n / (1.0 + 2.0 * acc);
        }
        return ess;
      },
      acov);
}

}  // namespace chainkit
