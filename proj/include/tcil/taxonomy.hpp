#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tcil {

// Dense node index into a TaxonomyTree; 0 is the root.
using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

// Immutable rooted class hierarchy.
//
// Node ids are assigned breadth-first at construction (children in source
// order), so id order equals BFS order and the root is always 0.
class TaxonomyTree {
 public:
  TaxonomyTree() = default;

  // Builds a tree from (parent, name) pairs indexed by an arbitrary
  // external key order; parents[i] == kNoNode marks the root. Used by the
  // parser and the balanced-tree helper.
  static TaxonomyTree from_parents(const std::vector<NodeId>& parents,
                                   const std::vector<std::string>& names);

  std::size_t size() const { return parent_.size(); }
  NodeId root() const { return 0; }
  bool contains(NodeId n) const { return n >= 0 && static_cast<std::size_t>(n) < size(); }

  NodeId parent(NodeId n) const;
  const std::vector<NodeId>& children(NodeId n) const;
  const std::string& name(NodeId n) const;
  int depth(NodeId n) const;
  bool is_leaf(NodeId n) const { return children(n).empty(); }

  // Maximum leaf depth (D in the split procedure).
  int height() const { return height_; }

  // L(H) and R(H), ascending id order.
  const std::vector<NodeId>& leaves() const { return leaves_; }
  const std::vector<NodeId>& internal_nodes() const { return internal_; }

  // Path root..parent(n), root first; empty for the root.
  std::vector<NodeId> ancestors(NodeId n) const;

  // True when m is a strict ancestor of n.
  bool is_ancestor(NodeId m, NodeId n) const;

  // Leaf descendants of n (n itself for a leaf), ascending id order.
  std::vector<NodeId> leaves_under(NodeId n) const;

  // Every node at the same depth has the same number of children and all
  // leaves share one depth.
  bool is_balanced() const;

  // Internal nodes with exactly one child.
  std::vector<NodeId> single_child_nodes() const;

 private:
  void check(NodeId n) const;

  std::vector<NodeId> parent_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<std::string> names_;
  std::vector<int> depth_;
  std::vector<NodeId> leaves_;
  std::vector<NodeId> internal_;
  int height_ = 0;
};

// Taxonomy text format, one node per line:
//
//   # comment
//   <id> <parent-id | root> [name]
//
// Ids are non-negative integers unique within the file; exactly one node
// uses "root". Names are single whitespace-free tokens. Children keep the
// order in which they appear. The tree is renumbered breadth-first on load,
// and serialize() writes that canonical numbering, so parse(serialize(t))
// reproduces t exactly.
TaxonomyTree parse_taxonomy(std::string_view text);
std::string serialize_taxonomy(const TaxonomyTree& tree);
TaxonomyTree load_taxonomy(const std::string& path);

// Balanced tree with branching[d] children per depth-d node,
// e.g. {20, 5} or {4, 5, 5}.
TaxonomyTree make_balanced_tree(const std::vector<int>& branching);

// Parses "4x5x5" style shapes.
std::vector<int> parse_shape(std::string_view shape);

// Current leaf set H_t of a taxonomic curriculum.
struct SubTree {
  std::vector<NodeId> visited;
  std::vector<NodeId> frontier;

  static SubTree initial(const TaxonomyTree& tree) { return {{}, {tree.root()}}; }

  // Position of n in the frontier, if present.
  std::optional<std::size_t> position(NodeId n) const;
};

// Replaces n in the frontier by its children (appended in child order).
SubTree expand(const SubTree& sub, const TaxonomyTree& tree, NodeId n);

// Maps every node of the tree to the row of the label set that is the node
// itself or its nearest ancestor, or -1 when no such row exists.
class LabelMap {
 public:
  LabelMap(const TaxonomyTree& tree, const std::vector<NodeId>& label_set);
  int row(NodeId n) const { return rows_.at(static_cast<std::size_t>(n)); }

 private:
  std::vector<int> rows_;
};

}  // namespace tcil
