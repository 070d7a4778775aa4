#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tcil/taxonomy.hpp"

namespace tcil {

enum class Traversal { Bfs, Dfs, Random, FlatRandom, FlatSemantic };

std::string to_string(Traversal policy);
Traversal parse_traversal(std::string_view name);
inline bool is_taxonomic(Traversal p) {
  return p == Traversal::Bfs || p == Traversal::Dfs || p == Traversal::Random;
}

// One curriculum step. Flat tasks have expanded_node == kNoNode and
// expanded_row == -1; their label set only grows.
struct Task {
  int index = 0;  // 1-based
  NodeId expanded_node = kNoNode;
  std::vector<NodeId> new_classes;
  std::vector<NodeId> label_set;
  int expanded_row = -1;  // row of expanded_node within the previous label set
  std::size_t prev_label_count = 0;

  // Number of leading rows of the label set that are not new classes.
  std::size_t old_count() const { return label_set.size() - new_classes.size(); }
  bool is_flat() const { return expanded_node == kNoNode; }
};

struct Curriculum {
  std::vector<Task> tasks;
  int n_coarse = 0;
  int n_fine = 0;
  Traversal policy = Traversal::Bfs;
  std::uint64_t seed = 0;

  int n_tasks() const { return static_cast<int>(tasks.size()); }
};

struct TaskCounts {
  int n_coarse;
  int n_fine;
  int n_total;
  bool operator==(const TaskCounts&) const = default;
};

// Taxonomic curricula expand every internal node exactly once, starting at
// the root. Bfs follows id (level) order, Dfs is a first-child preorder and
// Random picks uniformly among frontier nodes that can still be expanded.
Curriculum generate_taxonomic(const TaxonomyTree& tree, Traversal policy, std::uint64_t seed = 0);

// Flat CIL curricula over the leaves. FlatSemantic groups the leaf children
// of each parent (group_size is ignored); FlatRandom shuffles all leaves and
// cuts them into groups of group_size.
Curriculum generate_flat(const TaxonomyTree& tree, Traversal policy, std::size_t group_size,
                         std::uint64_t seed = 0);

TaskCounts task_counts(const Curriculum& curriculum);

// JSON Lines: one header record, then one record per task.
std::string serialize_curriculum(const Curriculum& curriculum);
Curriculum parse_curriculum(std::string_view text);

}  // namespace tcil
