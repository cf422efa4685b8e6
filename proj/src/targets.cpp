#include "chainkit/targets.hpp"

#include <cmath>

#include "chainkit/errors.hpp"
#include "chainkit/random.hpp"

namespace chainkit {

namespace {

constexpr double kLogSqrtTwoPi = 0.91893853320467274178;  // log sqrt(2 pi)

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

Array accumulate_log_density(const std::vector<Array>& parts) {
  Array total = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) total += parts[i];
  return total;
}

}  // namespace

PotentialFn make_standard_normal_target(std::size_t num_batch_dims) {
  return [num_batch_dims](const Tree& x) {
    std::vector<Array> parts;
    for (const Array* leaf : tree_leaves(x)) {
      parts.push_back(leaf->map([](double v) { return -0.5 * v * v; })
                          .sum_over_event(num_batch_dims));
    }
    if (parts.empty()) throw ShapeError("standard normal target needs at least one leaf");
    PotentialResult out;
    out.log_density = accumulate_log_density(parts);
    out.grad = tree_map([](const Array& leaf) { return -leaf; }, x);
    return out;
  };
}

PotentialFn make_diagonal_gaussian_target(const Tree& mean, const Tree& scale,
                                          std::size_t num_batch_dims) {
  for (const Array* leaf : tree_leaves(scale)) {
    for (double v : leaf->data()) {
      if (!(v > 0.0)) throw Error("diagonal gaussian scale must be positive");
    }
  }
  return [mean, scale, num_batch_dims](const Tree& x) {
    if (tree_num_leaves(x) != tree_num_leaves(mean)) {
      throw StructureMismatch("state does not match the gaussian parameters");
    }
    std::vector<const Array*> mean_leaves = tree_leaves(mean);
    std::vector<const Array*> scale_leaves = tree_leaves(scale);
    std::vector<Array> parts;
    std::size_t leaf_index = 0;
    Tree grad = tree_map(
        [&](const Array& leaf) {
          const Array& mu = *mean_leaves[leaf_index];
          const Array& sigma = *scale_leaves[leaf_index];
          ++leaf_index;
          Array centered = zip_row_broadcast(leaf, mu, [](double v, double m) { return v - m; });
          Array z = zip_row_broadcast(centered, sigma, [](double c, double s) { return c / s; });
          Array density = zip_row_broadcast(z, sigma, [](double zz, double s) {
            return -0.5 * zz * zz - std::log(s);
          });
          parts.push_back(density.sum_over_event(num_batch_dims));
          return zip_row_broadcast(z, sigma, [](double zz, double s) { return -zz / s; });
        },
        x);
    PotentialResult out;
    out.log_density = accumulate_log_density(parts);
    out.grad = std::move(grad);
    return out;
  };
}

LogisticRegressionData generate_dataset(std::uint64_t seed, std::size_t n, std::size_t d) {
  // Consumes only the first split branch of the seed key, leaving the second
  // branch for whoever steps the chains.
  auto [data_key, unused] = split(key_from_seed(seed));
  (void)unused;
  auto [weights_key, rest] = split(data_key);
  auto [features_key, labels_key] = split(rest);

  LogisticRegressionData data;
  data.true_weights = normal_sample(weights_key, Shape{d});
  data.features = normal_sample(features_key, Shape{n, d});
  Array u = uniform_sample(labels_key, Shape{n});
  data.labels = Array::zeros(Shape{n});
  for (std::size_t i = 0; i < n; ++i) {
    double logit = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      logit += data.features[i * d + j] * data.true_weights[j];
    }
    data.labels[i] = u[i] < sigmoid(logit) ? 1.0 : 0.0;
  }
  return data;
}

PotentialFn make_logistic_regression_target(const Array& features, const Array& labels) {
  if (features.rank() != 2) {
    throw ShapeError("features must be [num_data, num_features], got " +
                     shape_to_string(features.shape()));
  }
  if (labels.rank() != 1 || labels.shape()[0] != features.shape()[0]) {
    throw ShapeError("labels must be [num_data] matching the features");
  }
  for (double y : labels.data()) {
    if (y != 0.0 && y != 1.0) throw Error("labels must be 0 or 1");
  }
  const std::size_t num_data = features.shape()[0];
  const std::size_t dim = features.shape()[1];

  return [features, labels, num_data, dim](const Tree& state) {
    if (!state.is_leaf() && !(state.num_children() == 1 && state.child(0).is_leaf())) {
      throw StructureMismatch("logistic regression expects a single weights leaf");
    }
    const Array& w = state.is_leaf() ? state.array() : state.child(0).array();
    const bool batched = w.rank() == 2;
    if (!(batched && w.shape()[1] == dim) && !(w.rank() == 1 && w.shape()[0] == dim)) {
      throw ShapeError("weights shape " + shape_to_string(w.shape()) +
                       " does not match feature dimension " + std::to_string(dim));
    }
    const std::size_t num_chains = batched ? w.shape()[0] : 1;

    Array log_density = batched ? Array::zeros(Shape{num_chains}) : Array::scalar(0.0);
    Array grad_w = Array::zeros(w.shape());
    Array logits =
        batched ? Array::zeros(Shape{num_chains, num_data}) : Array::zeros(Shape{num_data});
    for (std::size_t c = 0; c < num_chains; ++c) {
      const double* wc = &w.data()[c * dim];
      double* gc = &grad_w.data()[c * dim];
      double lp = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        lp += -0.5 * wc[j] * wc[j] - kLogSqrtTwoPi;
        gc[j] = -wc[j];
      }
      for (std::size_t i = 0; i < num_data; ++i) {
        const double* xi = &features.data()[i * dim];
        double z = 0.0;
        for (std::size_t j = 0; j < dim; ++j) z += xi[j] * wc[j];
        logits[c * num_data + i] = z;
        // y log(sigmoid) + (1 - y) log(1 - sigmoid) collapses to y z - softplus(z)
        lp += labels[i] * z - softplus(z);
        const double residual = labels[i] - sigmoid(z);
        for (std::size_t j = 0; j < dim; ++j) gc[j] += residual * xi[j];
      }
      log_density[c] = lp;
    }

    PotentialResult out;
    out.log_density = std::move(log_density);
    out.grad = state.is_leaf()
                   ? Tree(std::move(grad_w))
                   : Tree::node({{state.child_name(0), Tree(std::move(grad_w))}});
    out.extra = Tree(std::move(logits));
    return out;
  };
}

}  // namespace chainkit
