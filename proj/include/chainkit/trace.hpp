#pragma once

#include <cstddef>
#include <utility>

#include "chainkit/errors.hpp"
#include "chainkit/tree.hpp"

namespace chainkit {

// Result of iterating a kernel: the threaded final state plus the auxiliary
// history. Traced leaves gain a leading time axis of extent num_steps;
// subtrees masked off hold only the final step's value.
template <typename S>
struct TraceResult {
  S final_state;
  Tree traced;
};

namespace detail {

// History skeleton: traced leaves are preallocated [num_steps, ...] buffers,
// untraced leaves start as the first step's value.
inline Tree make_history(const TraceMask& expanded, const Tree& aux,
                         std::size_t num_steps) {
  if (aux.is_leaf()) {
    if (expanded.value()) {
      Shape shape{num_steps};
      const Shape& leaf_shape = aux.array().shape();
      shape.insert(shape.end(), leaf_shape.begin(), leaf_shape.end());
      Array history = Array::zeros(std::move(shape));
      history.write_slot(0, aux.array());
      return Tree(std::move(history));
    }
    return aux;
  }
  std::vector<TreeField> children;
  children.reserve(aux.num_children());
  for (std::size_t i = 0; i < aux.num_children(); ++i) {
    children.push_back(TreeField{
        aux.child_name(i),
        make_history(expanded.child(i), aux.child(i), num_steps)});
  }
  return Tree::node(std::move(children));
}

inline void record_step(const TraceMask& expanded, Tree& history, const Tree& aux,
                        std::size_t step) {
  if (aux.is_leaf()) {
    if (expanded.value()) {
      history.array().write_slot(step, aux.array());
    } else {
      history = aux;
    }
    return;
  }
  if (history.num_children() != aux.num_children()) {
    throw StructureMismatch("auxiliary structure changed between trace steps");
  }
  for (std::size_t i = 0; i < aux.num_children(); ++i) {
    record_step(expanded.child(i), history.child(i), aux.child(i), step);
  }
}

}  // namespace detail

// Iterates kernel num_steps times, threading the state through and stacking
// the auxiliary subtrees selected by trace_mask. The auxiliary structure is
// locked in by the first step; a later deviation raises StructureMismatch.
template <typename S, typename Kernel>
TraceResult<S> trace(S initial, Kernel&& kernel, std::size_t num_steps,
                     const TraceMask& trace_mask = TraceMask::all(true)) {
  if (num_steps < 1) throw Error("trace requires num_steps >= 1");

  auto [state, aux] = kernel(std::move(initial));
  const TraceMask expanded = expand_mask(trace_mask, aux);
  const Tree structure_witness = zeros_like(aux);
  Tree history = detail::make_history(expanded, aux, num_steps);

  for (std::size_t step = 1; step < num_steps; ++step) {
    auto [next_state, next_aux] = kernel(std::move(state));
    state = std::move(next_state);
    if (!same_structure(next_aux, structure_witness)) {
      throw StructureMismatch("auxiliary structure changed at step " +
                              std::to_string(step));
    }
    detail::record_step(expanded, history, next_aux, step);
  }
  return TraceResult<S>{std::move(state), std::move(history)};
}

}  // namespace chainkit
