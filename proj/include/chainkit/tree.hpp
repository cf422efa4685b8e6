#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chainkit/array.hpp"

namespace chainkit {

struct TreeField;

// Nested state representation: either a leaf (dense f64 array) or a node of
// ordered, named children. A node with zero children is the unit value and
// stands for "no extra". Trees are immutable values in kernel code; the
// mutating accessors exist for construction and history buffers only.
class Tree {
 public:
  Tree();  // empty node
  Tree(Array leaf);  // NOLINT: implicit leaf wrapping is intended
  Tree(const Tree&);
  Tree(Tree&&) noexcept;
  Tree& operator=(const Tree&);
  Tree& operator=(Tree&&) noexcept;
  ~Tree();

  static Tree leaf(Array value) { return Tree(std::move(value)); }
  static Tree node(std::vector<TreeField> children);
  // Node with children named "0", "1", ... mirroring a positional tuple.
  static Tree tuple(std::vector<Tree> items);

  bool is_leaf() const { return is_leaf_; }
  bool is_node() const { return !is_leaf_; }
  bool is_empty_node() const;

  const Array& array() const;
  Array& array();

  std::size_t num_children() const;
  const std::string& child_name(std::size_t i) const;
  const Tree& child(std::size_t i) const;
  Tree& child(std::size_t i);
  const Tree& child(std::string_view name) const;
  bool has_child(std::string_view name) const;

 private:
  bool is_leaf_;
  Array leaf_;
  std::vector<TreeField> children_;
};

struct TreeField {
  std::string name;
  Tree value;
};

using LeafFn = std::function<Array(const Array&)>;
using LeafZipFn = std::function<Array(const Array&, const Array&)>;

// Structure-preserving application of f to every leaf.
Tree tree_map(const LeafFn& f, const Tree& t);

// Leafwise combination of two structurally identical trees.
Tree tree_zip_with(const LeafZipFn& f, const Tree& a, const Tree& b);

// Depth-first leaf pointers, in declaration order.
std::vector<const Array*> tree_leaves(const Tree& t);
std::vector<Array*> tree_leaves(Tree& t);

std::size_t tree_num_leaves(const Tree& t);
std::size_t tree_num_elements(const Tree& t);

// Names, arity, and leaf shapes all equal.
bool same_structure(const Tree& a, const Tree& b);
bool tree_bitwise_equal(const Tree& a, const Tree& b);

Tree zeros_like(const Tree& t);

// Elementwise conveniences built on tree_map / tree_zip_with.
Tree tree_add(const Tree& a, const Tree& b);
Tree tree_sub(const Tree& a, const Tree& b);
Tree tree_mul(const Tree& a, const Tree& b);
Tree tree_scale(const Tree& t, double factor);

// Throws ShapeError unless every leaf has leading extent num_chains.
void validate_batched(const Tree& t, std::size_t num_chains);

// Per-chain selection along the leading axis of every leaf.
Tree tree_select_rows(const Array& accept, const Tree& on_true, const Tree& on_false);

// Boolean prefix tree: a leaf covers the whole matching subtree, a node must
// name exactly the children of the matching tree node.
class TraceMask {
 public:
  TraceMask() : TraceMask(true) {}
  TraceMask(bool value);  // NOLINT: implicit bool leaf is intended
  static TraceMask all(bool value) { return TraceMask(value); }
  static TraceMask node(std::vector<std::pair<std::string, TraceMask>> children);

  bool is_leaf() const { return is_leaf_; }
  bool value() const;
  std::size_t num_children() const;
  const std::string& child_name(std::size_t i) const;
  const TraceMask& child(std::size_t i) const;

 private:
  bool is_leaf_;
  bool value_ = false;
  std::vector<std::pair<std::string, TraceMask>> children_;
};

// Partition of t into maximal subtrees, each paired with its governing
// boolean. Throws StructureMismatch if the mask paths do not exist in t.
std::vector<std::pair<bool, Tree>> mask_zip(const TraceMask& mask, const Tree& t);

// Expands mask to mirror t exactly, one boolean leaf per tree leaf position.
TraceMask expand_mask(const TraceMask& mask, const Tree& t);

}  // namespace chainkit
