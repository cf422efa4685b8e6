#include "chainkit/reparam.hpp"

#include <cmath>

#include "chainkit/errors.hpp"

namespace chainkit {

namespace {

// Chain count of a batched tree; scalar trees count as one chain.
std::size_t chain_count(const Tree& t) {
  std::vector<const Array*> leaves = tree_leaves(t);
  if (leaves.empty() || leaves[0]->rank() < 1) return 1;
  return leaves[0]->leading_extent();
}

// Applies f(state_value, param_value) with the affine broadcast rules: a
// scalar param leaf covers a whole subtree, otherwise structures must match
// with leaves broadcastable along the chain axis.
Tree zip_param(const Tree& state, const Tree& param,
               const std::function<double(double, double)>& f) {
  if (param.is_leaf() && param.array().size() == 1) {
    const double p = param.array()[0];
    return tree_map([&](const Array& leaf) {
      return leaf.map([&](double v) { return f(v, p); });
    }, state);
  }
  if (state.is_leaf()) {
    if (!param.is_leaf()) throw StructureMismatch("parameter node against state leaf");
    return Tree(zip_row_broadcast(state.array(), param.array(), f));
  }
  if (param.is_leaf() || param.num_children() != state.num_children()) {
    throw StructureMismatch("parameter tree does not match state structure");
  }
  std::vector<TreeField> children;
  children.reserve(state.num_children());
  for (std::size_t i = 0; i < state.num_children(); ++i) {
    if (param.child_name(i) != state.child_name(i)) {
      throw StructureMismatch("parameter child '" + param.child_name(i) +
                              "' does not match state child '" +
                              state.child_name(i) + "'");
    }
    children.push_back(TreeField{state.child_name(i),
                                 zip_param(state.child(i), param.child(i), f)});
  }
  return Tree::node(std::move(children));
}

class Identity final : public DiffeomorphismImpl {
 public:
  std::pair<Tree, Tree> forward(const Tree& y) const override { return {y, Tree()}; }
  Tree inverse(const Tree& x) const override { return x; }
  Array forward_log_det_jacobian(const Tree& y) const override {
    return Array::zeros(Shape{chain_count(y)});
  }
  Tree vjp(const Tree& y, const Tree& cotangent) const override {
    (void)y;
    return cotangent;
  }
  Tree log_det_jacobian_gradient(const Tree& y) const override {
    return zeros_like(y);
  }
};

class Affine final : public DiffeomorphismImpl {
 public:
  Affine(Tree shift, Tree scale) : shift_(std::move(shift)), scale_(std::move(scale)) {
    for (const Array* leaf : tree_leaves(scale_)) {
      for (double s : leaf->data()) {
        if (s == 0.0) throw NonInvertible("affine scale entries must be nonzero");
      }
    }
  }

  std::pair<Tree, Tree> forward(const Tree& y) const override {
    Tree scaled = zip_param(y, scale_, [](double v, double s) { return v * s; });
    return {zip_param(scaled, shift_, [](double v, double m) { return v + m; }), Tree()};
  }

  Tree inverse(const Tree& x) const override {
    Tree centered = zip_param(x, shift_, [](double v, double m) { return v - m; });
    return zip_param(centered, scale_, [](double v, double s) { return v / s; });
  }

  Array forward_log_det_jacobian(const Tree& y) const override {
    // Broadcast log|scale| to the full state shape, then reduce per chain.
    Tree log_scale =
        zip_param(y, scale_, [](double, double s) { return std::log(std::abs(s)); });
    Array total = Array::zeros(Shape{chain_count(y)});
    for (const Array* leaf : tree_leaves(log_scale)) {
      total += leaf->sum_over_event(1);
    }
    return total;
  }

  Tree vjp(const Tree& y, const Tree& cotangent) const override {
    (void)y;
    return zip_param(cotangent, scale_, [](double v, double s) { return v * s; });
  }

  Tree log_det_jacobian_gradient(const Tree& y) const override {
    return zeros_like(y);
  }

 private:
  Tree shift_;
  Tree scale_;
};

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

double softplus(double v) {
  return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

class Exp final : public DiffeomorphismImpl {
 public:
  std::pair<Tree, Tree> forward(const Tree& y) const override {
    return {tree_map([](const Array& a) { return a.map([](double v) { return std::exp(v); }); }, y),
            Tree()};
  }
  Tree inverse(const Tree& x) const override {
    return tree_map([](const Array& a) { return a.map([](double v) { return std::log(v); }); }, x);
  }
  Array forward_log_det_jacobian(const Tree& y) const override {
    Array total = Array::zeros(Shape{chain_count(y)});
    for (const Array* leaf : tree_leaves(y)) total += leaf->sum_over_event(1);
    return total;
  }
  Tree vjp(const Tree& y, const Tree& cotangent) const override {
    return tree_zip_with(
        [](const Array& yv, const Array& ct) {
          return Array::zip(yv, ct, [](double a, double b) { return std::exp(a) * b; });
        },
        y, cotangent);
  }
  Tree log_det_jacobian_gradient(const Tree& y) const override {
    return tree_map([](const Array& a) { return Array::full(a.shape(), 1.0); }, y);
  }
};

class Softplus final : public DiffeomorphismImpl {
 public:
  std::pair<Tree, Tree> forward(const Tree& y) const override {
    return {tree_map([](const Array& a) { return a.map(softplus); }, y), Tree()};
  }
  Tree inverse(const Tree& x) const override {
    // y = log(exp(x) - 1) = x + log(1 - exp(-x))
    return tree_map(
        [](const Array& a) {
          return a.map([](double v) { return v + std::log(-std::expm1(-v)); });
        },
        x);
  }
  Array forward_log_det_jacobian(const Tree& y) const override {
    // log d/dy softplus(y) = log sigmoid(y) = y - softplus(y)
    Array total = Array::zeros(Shape{chain_count(y)});
    for (const Array* leaf : tree_leaves(y)) {
      total += leaf->map([](double v) { return v - softplus(v); }).sum_over_event(1);
    }
    return total;
  }
  Tree vjp(const Tree& y, const Tree& cotangent) const override {
    return tree_zip_with(
        [](const Array& yv, const Array& ct) {
          return Array::zip(yv, ct, [](double a, double b) { return sigmoid(a) * b; });
        },
        y, cotangent);
  }
  Tree log_det_jacobian_gradient(const Tree& y) const override {
    return tree_map(
        [](const Array& a) { return a.map([](double v) { return 1.0 - sigmoid(v); }); }, y);
  }
};

class Composed final : public DiffeomorphismImpl {
 public:
  Composed(Diffeomorphism outer, Diffeomorphism inner)
      : outer_(std::move(outer)), inner_(std::move(inner)) {}

  std::pair<Tree, Tree> forward(const Tree& y) const override {
    auto [mid, inner_extra] = inner_.forward(y);
    auto [x, outer_extra] = outer_.forward(mid);
    return {std::move(x), Tree::tuple({std::move(inner_extra), std::move(outer_extra)})};
  }
  Tree inverse(const Tree& x) const override {
    return inner_.inverse(outer_.inverse(x));
  }
  Array forward_log_det_jacobian(const Tree& y) const override {
    Tree mid = inner_.forward(y).first;
    return inner_.forward_log_det_jacobian(y) + outer_.forward_log_det_jacobian(mid);
  }
  Tree vjp(const Tree& y, const Tree& cotangent) const override {
    Tree mid = inner_.forward(y).first;
    return inner_.vjp(y, outer_.vjp(mid, cotangent));
  }
  Tree log_det_jacobian_gradient(const Tree& y) const override {
    Tree mid = inner_.forward(y).first;
    return tree_add(inner_.log_det_jacobian_gradient(y),
                    inner_.vjp(y, outer_.log_det_jacobian_gradient(mid)));
  }

 private:
  Diffeomorphism outer_;
  Diffeomorphism inner_;
};

class Treewise final : public DiffeomorphismImpl {
 public:
  explicit Treewise(std::vector<std::pair<std::string, Diffeomorphism>> children)
      : children_(std::move(children)) {}

  std::pair<Tree, Tree> forward(const Tree& y) const override {
    check(y);
    std::vector<TreeField> xs;
    std::vector<TreeField> extras;
    for (std::size_t i = 0; i < children_.size(); ++i) {
      auto [x, extra] = children_[i].second.forward(y.child(i));
      xs.push_back(TreeField{children_[i].first, std::move(x)});
      extras.push_back(TreeField{children_[i].first, std::move(extra)});
    }
    return {Tree::node(std::move(xs)), Tree::node(std::move(extras))};
  }
  Tree inverse(const Tree& x) const override {
    check(x);
    std::vector<TreeField> ys;
    for (std::size_t i = 0; i < children_.size(); ++i) {
      ys.push_back(TreeField{children_[i].first, children_[i].second.inverse(x.child(i))});
    }
    return Tree::node(std::move(ys));
  }
  Array forward_log_det_jacobian(const Tree& y) const override {
    check(y);
    Array total = Array::zeros(Shape{chain_count(y)});
    for (std::size_t i = 0; i < children_.size(); ++i) {
      total += children_[i].second.forward_log_det_jacobian(y.child(i));
    }
    return total;
  }
  Tree vjp(const Tree& y, const Tree& cotangent) const override {
    check(y);
    std::vector<TreeField> out;
    for (std::size_t i = 0; i < children_.size(); ++i) {
      out.push_back(TreeField{children_[i].first,
                              children_[i].second.vjp(y.child(i), cotangent.child(i))});
    }
    return Tree::node(std::move(out));
  }
  Tree log_det_jacobian_gradient(const Tree& y) const override {
    check(y);
    std::vector<TreeField> out;
    for (std::size_t i = 0; i < children_.size(); ++i) {
      out.push_back(TreeField{children_[i].first,
                              children_[i].second.log_det_jacobian_gradient(y.child(i))});
    }
    return Tree::node(std::move(out));
  }

 private:
  void check(const Tree& t) const {
    if (t.is_leaf() || t.num_children() != children_.size()) {
      throw StructureMismatch("treewise diffeomorphism does not match state structure");
    }
    for (std::size_t i = 0; i < children_.size(); ++i) {
      if (t.child_name(i) != children_[i].first) {
        throw StructureMismatch("treewise child '" + children_[i].first +
                                "' does not match state child '" + t.child_name(i) + "'");
      }
    }
  }

  std::vector<std::pair<std::string, Diffeomorphism>> children_;
};

}  // namespace

Diffeomorphism identity_diffeomorphism() {
  return Diffeomorphism(std::make_shared<Identity>());
}

Diffeomorphism affine_diffeomorphism(Tree shift, Tree scale) {
  return Diffeomorphism(std::make_shared<Affine>(std::move(shift), std::move(scale)));
}

Diffeomorphism exp_diffeomorphism() { return Diffeomorphism(std::make_shared<Exp>()); }

Diffeomorphism softplus_diffeomorphism() {
  return Diffeomorphism(std::make_shared<Softplus>());
}

Diffeomorphism compose(Diffeomorphism outer, Diffeomorphism inner) {
  return Diffeomorphism(std::make_shared<Composed>(std::move(outer), std::move(inner)));
}

Diffeomorphism treewise(std::vector<std::pair<std::string, Diffeomorphism>> children) {
  return Diffeomorphism(std::make_shared<Treewise>(std::move(children)));
}

std::pair<PotentialFn, Tree> reparameterize_potential_fn(PotentialFn target,
                                                         Diffeomorphism d,
                                                         const Tree& x0) {
  Tree y0 = d.inverse(x0);
  Tree round_trip = d.forward(y0).first;
  tree_zip_with(
      [](const Array& a, const Array& b) {
        for (std::size_t i = 0; i < a.size(); ++i) {
          if (std::abs(a[i] - b[i]) > 1e-10 * (1.0 + std::abs(a[i]))) {
            throw NonInvertible("inverse(x0) does not round-trip within tolerance");
          }
        }
        return a;
      },
      x0, round_trip);

  PotentialFn reparam = [target = std::move(target), d](const Tree& y) -> PotentialResult {
    auto [x, transport_extra] = d.forward(y);
    PotentialResult base = target(x);
    Array log_density = base.log_density + d.forward_log_det_jacobian(y);
    Tree grad = tree_add(d.vjp(y, base.grad), d.log_det_jacobian_gradient(y));
    Tree extra =
        Tree::tuple({std::move(x), std::move(base.extra), std::move(transport_extra)});
    return PotentialResult{std::move(log_density), std::move(grad), std::move(extra)};
  };
  return {std::move(reparam), std::move(y0)};
}

}  // namespace chainkit
