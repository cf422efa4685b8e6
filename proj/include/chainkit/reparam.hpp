#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "chainkit/potential.hpp"
#include "chainkit/tree.hpp"

namespace chainkit {

// Smooth invertible map from a reparameterized space to the original space,
// with a tractable Jacobian log-determinant. Implementations also supply the
// two gradient pieces the chain rule needs: a vector-Jacobian product and the
// gradient of the log-determinant, since there is no autodiff backend.
class DiffeomorphismImpl {
 public:
  virtual ~DiffeomorphismImpl() = default;

  // y -> (x, extra)
  virtual std::pair<Tree, Tree> forward(const Tree& y) const = 0;
  virtual Tree inverse(const Tree& x) const = 0;
  // Per-chain log |det J_forward|, shape [C].
  virtual Array forward_log_det_jacobian(const Tree& y) const = 0;
  // J_forward(y)^T cotangent.
  virtual Tree vjp(const Tree& y, const Tree& cotangent) const = 0;
  // d/dy log |det J_forward(y)|.
  virtual Tree log_det_jacobian_gradient(const Tree& y) const = 0;
};

// Value-semantic handle; cheap to copy and share.
class Diffeomorphism {
 public:
  explicit Diffeomorphism(std::shared_ptr<const DiffeomorphismImpl> impl)
      : impl_(std::move(impl)) {}

  std::pair<Tree, Tree> forward(const Tree& y) const { return impl_->forward(y); }
  Tree inverse(const Tree& x) const { return impl_->inverse(x); }
  Array forward_log_det_jacobian(const Tree& y) const {
    return impl_->forward_log_det_jacobian(y);
  }
  Tree vjp(const Tree& y, const Tree& cotangent) const {
    return impl_->vjp(y, cotangent);
  }
  Tree log_det_jacobian_gradient(const Tree& y) const {
    return impl_->log_det_jacobian_gradient(y);
  }

 private:
  std::shared_ptr<const DiffeomorphismImpl> impl_;
};

Diffeomorphism identity_diffeomorphism();

// x = shift + scale * y, elementwise. shift and scale leaves may be scalars,
// per-row parameters (shared across the chain axis), or full-shape arrays.
// Every scale entry must be nonzero.
Diffeomorphism affine_diffeomorphism(Tree shift, Tree scale);

// x = exp(y): maps the whole real line onto the positive half-line.
Diffeomorphism exp_diffeomorphism();

// x = log(1 + exp(y)), the softplus positivity transform.
Diffeomorphism softplus_diffeomorphism();

// forward(y) = outer.forward(inner.forward(y)); extras from both stages are
// returned as a pair.
Diffeomorphism compose(Diffeomorphism outer, Diffeomorphism inner);

// Applies a different diffeomorphism to each child of a node-shaped state.
Diffeomorphism treewise(std::vector<std::pair<std::string, Diffeomorphism>> children);

// Transforms target through d: the returned potential computes
//   h(y) = log pi(g(y)) + log |det J_g(y)|
// with gradient by the chain rule, and side-returns the original-space state:
// extra is the tuple (g(y), target's extra, diffeomorphism's extra). Also
// returns y0 = inverse(x0). Throws NonInvertible if forward(inverse(x0))
// fails to round-trip within 1e-10 relative.
std::pair<PotentialFn, Tree> reparameterize_potential_fn(PotentialFn target,
                                                         Diffeomorphism d,
                                                         const Tree& x0);

}  // namespace chainkit
