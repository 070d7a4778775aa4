#pragma once
// Brute-force helpers shared by the unit tests. They only use the tree's
// parent links, never the library's derived queries.

#include <algorithm>
#include <set>
#include <vector>

#include "tcil/taxonomy.hpp"

namespace oracle {

inline std::vector<tcil::NodeId> parent_chain(const tcil::TaxonomyTree& t, tcil::NodeId n) {
  std::vector<tcil::NodeId> out;
  for (tcil::NodeId p = t.parent(n); p != tcil::kNoNode; p = t.parent(p)) out.push_back(p);
  std::reverse(out.begin(), out.end());
  return out;
}

inline bool has_children(const tcil::TaxonomyTree& t, tcil::NodeId n) {
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t.parent(static_cast<tcil::NodeId>(i)) == n) return true;
  return false;
}

// Leaves of the subtree spanned by the root and the children of every
// visited node (H_t built from scratch).
inline std::set<tcil::NodeId> frontier_from_visited(const tcil::TaxonomyTree& t,
                                                    const std::vector<tcil::NodeId>& visited) {
  std::set<tcil::NodeId> in{t.root()};
  const std::set<tcil::NodeId> v(visited.begin(), visited.end());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto n = static_cast<tcil::NodeId>(i);
    if (n != t.root() && v.count(t.parent(n))) in.insert(n);
  }
  std::set<tcil::NodeId> leaves;
  for (auto n : in) {
    bool child_in = false;
    for (auto m : in)
      if (m != t.root() && t.parent(m) == n) child_in = true;
    if (!child_in) leaves.insert(n);
  }
  return leaves;
}

}  // namespace oracle
