#include "chainkit/tree.hpp"

#include <cstring>

#include "chainkit/errors.hpp"

namespace chainkit {

Tree::Tree() : is_leaf_(false) {}
Tree::Tree(Array leaf) : is_leaf_(true), leaf_(std::move(leaf)) {}
Tree::Tree(const Tree&) = default;
Tree::Tree(Tree&&) noexcept = default;
Tree& Tree::operator=(const Tree&) = default;
Tree& Tree::operator=(Tree&&) noexcept = default;
Tree::~Tree() = default;

Tree Tree::node(std::vector<TreeField> children) {
  Tree t;
  t.children_ = std::move(children);
  return t;
}

Tree Tree::tuple(std::vector<Tree> items) {
  std::vector<TreeField> children;
  children.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    children.push_back(TreeField{std::to_string(i), std::move(items[i])});
  }
  return node(std::move(children));
}

bool Tree::is_empty_node() const { return !is_leaf_ && children_.empty(); }

const Array& Tree::array() const {
  if (!is_leaf_) throw StructureMismatch("array() called on a node");
  return leaf_;
}

Array& Tree::array() {
  if (!is_leaf_) throw StructureMismatch("array() called on a node");
  return leaf_;
}

std::size_t Tree::num_children() const { return is_leaf_ ? 0 : children_.size(); }

const std::string& Tree::child_name(std::size_t i) const { return children_.at(i).name; }

const Tree& Tree::child(std::size_t i) const { return children_.at(i).value; }

Tree& Tree::child(std::size_t i) { return children_.at(i).value; }

const Tree& Tree::child(std::string_view name) const {
  for (const TreeField& field : children_) {
    if (field.name == name) return field.value;
  }
  throw StructureMismatch("no child named '" + std::string(name) + "'");
}

bool Tree::has_child(std::string_view name) const {
  for (const TreeField& field : children_) {
    if (field.name == name) return true;
  }
  return false;
}

Tree tree_map(const LeafFn& f, const Tree& t) {
  if (t.is_leaf()) return Tree(f(t.array()));
  std::vector<TreeField> children;
  children.reserve(t.num_children());
  for (std::size_t i = 0; i < t.num_children(); ++i) {
    children.push_back(TreeField{t.child_name(i), tree_map(f, t.child(i))});
  }
  return Tree::node(std::move(children));
}

Tree tree_zip_with(const LeafZipFn& f, const Tree& a, const Tree& b) {
  if (a.is_leaf() != b.is_leaf()) {
    throw StructureMismatch("leaf zipped against node");
  }
  if (a.is_leaf()) {
    if (!same_shape(a.array(), b.array())) {
      throw StructureMismatch("leaf shapes differ: " +
                              shape_to_string(a.array().shape()) + " vs " +
                              shape_to_string(b.array().shape()));
    }
    return Tree(f(a.array(), b.array()));
  }
  if (a.num_children() != b.num_children()) {
    throw StructureMismatch("node arity differs");
  }
  std::vector<TreeField> children;
  children.reserve(a.num_children());
  for (std::size_t i = 0; i < a.num_children(); ++i) {
    if (a.child_name(i) != b.child_name(i)) {
      throw StructureMismatch("child names differ: '" + a.child_name(i) +
                              "' vs '" + b.child_name(i) + "'");
    }
    children.push_back(TreeField{a.child_name(i),
                                 tree_zip_with(f, a.child(i), b.child(i))});
  }
  return Tree::node(std::move(children));
}

namespace {

template <typename TreeT, typename ArrayT>
void collect_leaves(TreeT& t, std::vector<ArrayT*>& out) {
  if (t.is_leaf()) {
    out.push_back(&t.array());
    return;
  }
  for (std::size_t i = 0; i < t.num_children(); ++i) collect_leaves(t.child(i), out);
}

}  // namespace

std::vector<const Array*> tree_leaves(const Tree& t) {
  std::vector<const Array*> out;
  collect_leaves(t, out);
  return out;
}

std::vector<Array*> tree_leaves(Tree& t) {
  std::vector<Array*> out;
  collect_leaves(t, out);
  return out;
}

std::size_t tree_num_leaves(const Tree& t) { return tree_leaves(t).size(); }

std::size_t tree_num_elements(const Tree& t) {
  std::size_t total = 0;
  for (const Array* leaf : tree_leaves(t)) total += leaf->size();
  return total;
}

bool same_structure(const Tree& a, const Tree& b) {
  if (a.is_leaf() != b.is_leaf()) return false;
  if (a.is_leaf()) return same_shape(a.array(), b.array());
  if (a.num_children() != b.num_children()) return false;
  for (std::size_t i = 0; i < a.num_children(); ++i) {
    if (a.child_name(i) != b.child_name(i)) return false;
    if (!same_structure(a.child(i), b.child(i))) return false;
  }
  return true;
}

bool tree_bitwise_equal(const Tree& a, const Tree& b) {
  if (!same_structure(a, b)) return false;
  auto la = tree_leaves(a);
  auto lb = tree_leaves(b);
  for (std::size_t i = 0; i < la.size(); ++i) {
    if (!bitwise_equal(*la[i], *lb[i])) return false;
  }
  return true;
}

Tree zeros_like(const Tree& t) {
  return tree_map([](const Array& leaf) { return Array::zeros(leaf.shape()); }, t);
}

Tree tree_add(const Tree& a, const Tree& b) {
  return tree_zip_with([](const Array& x, const Array& y) { return x + y; }, a, b);
}

Tree tree_sub(const Tree& a, const Tree& b) {
  return tree_zip_with([](const Array& x, const Array& y) { return x - y; }, a, b);
}

Tree tree_mul(const Tree& a, const Tree& b) {
  return tree_zip_with([](const Array& x, const Array& y) { return x * y; }, a, b);
}

Tree tree_scale(const Tree& t, double factor) {
  return tree_map([factor](const Array& leaf) { return leaf * factor; }, t);
}

void validate_batched(const Tree& t, std::size_t num_chains) {
  for (const Array* leaf : tree_leaves(t)) {
    if (leaf->rank() < 1 || leaf->leading_extent() != num_chains) {
      throw ShapeError("leaf of shape " + shape_to_string(leaf->shape()) +
                       " does not carry chain axis of extent " +
                       std::to_string(num_chains));
    }
  }
}

Tree tree_select_rows(const Array& accept, const Tree& on_true, const Tree& on_false) {
  return tree_zip_with(
      [&accept](const Array& t, const Array& f) { return select_rows(accept, t, f); },
      on_true, on_false);
}

TraceMask::TraceMask(bool value) : is_leaf_(true), value_(value) {}

TraceMask TraceMask::node(std::vector<std::pair<std::string, TraceMask>> children) {
  TraceMask m(false);
  m.is_leaf_ = false;
  m.children_ = std::move(children);
  return m;
}

bool TraceMask::value() const {
  if (!is_leaf_) throw StructureMismatch("value() called on a mask node");
  return value_;
}

std::size_t TraceMask::num_children() const {
  return is_leaf_ ? 0 : children_.size();
}

const std::string& TraceMask::child_name(std::size_t i) const {
  return children_.at(i).first;
}

const TraceMask& TraceMask::child(std::size_t i) const {
  return children_.at(i).second;
}

namespace {

void mask_zip_into(const TraceMask& mask, const Tree& t,
                   std::vector<std::pair<bool, Tree>>& out) {
  if (mask.is_leaf()) {
    out.emplace_back(mask.value(), t);
    return;
  }
  if (t.is_leaf()) {
    throw StructureMismatch("mask node reaches past a tree leaf");
  }
  if (mask.num_children() != t.num_children()) {
    throw StructureMismatch("mask node arity differs from tree node");
  }
  for (std::size_t i = 0; i < mask.num_children(); ++i) {
    if (mask.child_name(i) != t.child_name(i)) {
      throw StructureMismatch("mask child '" + mask.child_name(i) +
                              "' does not exist in tree (found '" +
                              t.child_name(i) + "')");
    }
    mask_zip_into(mask.child(i), t.child(i), out);
  }
}

}  // namespace

std::vector<std::pair<bool, Tree>> mask_zip(const TraceMask& mask, const Tree& t) {
  std::vector<std::pair<bool, Tree>> out;
  mask_zip_into(mask, t, out);
  return out;
}

TraceMask expand_mask(const TraceMask& mask, const Tree& t) {
  if (mask.is_leaf()) {
    if (t.is_leaf()) return TraceMask(mask.value());
    std::vector<std::pair<std::string, TraceMask>> children;
    children.reserve(t.num_children());
    for (std::size_t i = 0; i < t.num_children(); ++i) {
      children.emplace_back(t.child_name(i), expand_mask(mask, t.child(i)));
    }
    return TraceMask::node(std::move(children));
  }
  if (t.is_leaf()) {
    throw StructureMismatch("mask node reaches past a tree leaf");
  }
  if (mask.num_children() != t.num_children()) {
    throw StructureMismatch("mask node arity differs from tree node");
  }
  std::vector<std::pair<std::string, TraceMask>> children;
  children.reserve(t.num_children());
  for (std::size_t i = 0; i < t.num_children(); ++i) {
    if (mask.child_name(i) != t.child_name(i)) {
      throw StructureMismatch("mask child '" + mask.child_name(i) +
                              "' does not exist in tree");
    }
    children.emplace_back(t.child_name(i), expand_mask(mask.child(i), t.child(i)));
  }
  return TraceMask::node(std::move(children));
}

}  // namespace chainkit
