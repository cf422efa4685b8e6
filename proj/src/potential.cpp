#include "chainkit/potential.hpp"

#include <cmath>

#include "chainkit/errors.hpp"

namespace chainkit {

namespace {

double pick_chain_value(const Array& values, std::size_t chain) {
  if (values.size() == 1) return values[0];
  return values[chain];
}

void check_finite(const Array& values) {
  for (double v : values.data()) {
    if (!std::isfinite(v)) {
      throw NonFiniteValue("finite-difference probe evaluated non-finite");
    }
  }
}

}  // namespace

Tree finite_diff_grad(const ScalarPerChainFn& f, const Tree& x, double h) {
  if (h <= 0.0) throw Error("finite_diff_grad requires h > 0");
  Tree probe = x;
  std::vector<Array*> probe_leaves = tree_leaves(probe);
  std::vector<const Array*> base_leaves = tree_leaves(x);

  Tree grad = zeros_like(x);
  std::vector<Array*> grad_leaves = tree_leaves(grad);

  for (std::size_t l = 0; l < probe_leaves.size(); ++l) {
    Array& leaf = *probe_leaves[l];
    const Array& base = *base_leaves[l];
    const std::size_t chain_stride =
        leaf.rank() >= 1 && leaf.leading_extent() > 0 ? leaf.row_size() : leaf.size();
    for (std::size_t i = 0; i < leaf.size(); ++i) {
      const double x_i = base[i];
      const double step = h * (1.0 + std::abs(x_i));
      const std::size_t chain = chain_stride == 0 ? 0 : i / chain_stride;

      leaf[i] = x_i + step;
      Array plus = f(probe);
      check_finite(plus);
      leaf[i] = x_i - step;
      Array minus = f(probe);
      check_finite(minus);
      leaf[i] = x_i;

      (*grad_leaves[l])[i] =
          (pick_chain_value(plus, chain) - pick_chain_value(minus, chain)) / (2.0 * step);
    }
  }
  return grad;
}

Tree broadcast_tree(const Tree& provided, const Tree& target_structure) {
  if (provided.is_leaf() && provided.array().size() == 1) {
    const double value = provided.array()[0];
    return tree_map(
        [value](const Array& leaf) { return Array::full(leaf.shape(), value); },
        target_structure);
  }
  if (provided.is_leaf()) {
    if (!target_structure.is_leaf()) {
      throw StructureMismatch("non-scalar leaf cannot broadcast onto a node");
    }
    if (!same_shape(provided.array(), target_structure.array())) {
      throw StructureMismatch("gradient shape " +
                              shape_to_string(provided.array().shape()) +
                              " does not broadcast to parameter shape " +
                              shape_to_string(target_structure.array().shape()));
    }
    return provided;
  }
  if (target_structure.is_leaf() ||
      provided.num_children() != target_structure.num_children()) {
    throw StructureMismatch("gradient structure does not broadcast onto parameters");
  }
  std::vector<TreeField> children;
  children.reserve(provided.num_children());
  for (std::size_t i = 0; i < provided.num_children(); ++i) {
    if (provided.child_name(i) != target_structure.child_name(i)) {
      throw StructureMismatch("gradient child '" + provided.child_name(i) +
                              "' does not match parameter child '" +
                              target_structure.child_name(i) + "'");
    }
    children.push_back(TreeField{
        provided.child_name(i),
        broadcast_tree(provided.child(i), target_structure.child(i))});
  }
  return Tree::node(std::move(children));
}

LossFn make_surrogate_loss_fn(GradProviderFn grad_provider) {
  return [provider = std::move(grad_provider)](const Tree& params) -> LossResult {
    auto [grad, extra] = provider(params);
    return LossResult{Array::scalar(0.0), broadcast_tree(grad, params),
                      std::move(extra)};
  };
}

}  // namespace chainkit
