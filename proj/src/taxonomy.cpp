#include "tcil/taxonomy.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "tcil/error.hpp"

namespace tcil {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

std::optional<long long> parse_int(std::string_view token) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

}  // namespace

TaxonomyTree TaxonomyTree::from_parents(const std::vector<NodeId>& parents,
                                        const std::vector<std::string>& names) {
  const std::size_t n = parents.size();
  if (names.size() != n) throw std::invalid_argument("names/parents size mismatch");
  std::vector<std::vector<std::size_t>> kids(n);
  std::optional<std::size_t> root;
  for (std::size_t i = 0; i < n; ++i) {
    if (parents[i] == kNoNode) {
      if (root) throw ParseError("multiple roots");
      root = i;
    } else {
      if (parents[i] < 0 || static_cast<std::size_t>(parents[i]) >= n)
        throw ParseError("node " + std::to_string(i) + " has unknown parent");
      kids[static_cast<std::size_t>(parents[i])].push_back(i);
    }
  }
  if (!root) throw ParseError("missing root");

  // Breadth-first renumbering.
  std::vector<std::size_t> order;
  std::vector<NodeId> new_id(n, kNoNode);
  order.reserve(n);
  order.push_back(*root);
  new_id[*root] = 0;
  for (std::size_t head = 0; head < order.size(); ++head) {
    for (std::size_t k : kids[order[head]]) {
      new_id[k] = static_cast<NodeId>(order.size());
      order.push_back(k);
    }
  }
  if (order.size() != n) {
    for (std::size_t i = 0; i < n; ++i)
      if (new_id[i] == kNoNode)
        throw ParseError("node " + std::to_string(i) + " is not reachable from the root (cycle)");
  }

  TaxonomyTree tree;
  tree.parent_.assign(n, kNoNode);
  tree.children_.assign(n, {});
  tree.names_.assign(n, {});
  tree.depth_.assign(n, 0);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t old = order[pos];
    tree.names_[pos] = names[old];
    for (std::size_t k : kids[old]) {
      const NodeId child = new_id[k];
      tree.children_[pos].push_back(child);
      tree.parent_[static_cast<std::size_t>(child)] = static_cast<NodeId>(pos);
      tree.depth_[static_cast<std::size_t>(child)] = tree.depth_[pos] + 1;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (tree.children_[i].empty()) {
      tree.leaves_.push_back(static_cast<NodeId>(i));
      tree.height_ = std::max(tree.height_, tree.depth_[i]);
    } else {
      tree.internal_.push_back(static_cast<NodeId>(i));
    }
  }
  return tree;
}

void TaxonomyTree::check(NodeId n) const {
  if (!contains(n)) throw std::out_of_range("unknown node id " + std::to_string(n));
}

NodeId TaxonomyTree::parent(NodeId n) const {
  check(n);
  return parent_[static_cast<std::size_t>(n)];
}

const std::vector<NodeId>& TaxonomyTree::children(NodeId n) const {
  check(n);
  return children_[static_cast<std::size_t>(n)];
}

const std::string& TaxonomyTree::name(NodeId n) const {
  check(n);
  return names_[static_cast<std::size_t>(n)];
}

int TaxonomyTree::depth(NodeId n) const {
  check(n);
  return depth_[static_cast<std::size_t>(n)];
}

std::vector<NodeId> TaxonomyTree::ancestors(NodeId n) const {
  check(n);
  std::vector<NodeId> path;
  for (NodeId p = parent_[static_cast<std::size_t>(n)]; p != kNoNode;
       p = parent_[static_cast<std::size_t>(p)])
    path.push_back(p);
  std::reverse(path.begin(), path.end());
  return path;
}

bool TaxonomyTree::is_ancestor(NodeId m, NodeId n) const {
  check(m);
  check(n);
  // Depth comparison avoids walking when impossible.
  if (depth_[static_cast<std::size_t>(m)] >= depth_[static_cast<std::size_t>(n)]) return false;
  for (NodeId p = parent_[static_cast<std::size_t>(n)]; p != kNoNode;
       p = parent_[static_cast<std::size_t>(p)])
    if (p == m) return true;
  return false;
}

std::vector<NodeId> TaxonomyTree::leaves_under(NodeId n) const {
  check(n);
  std::vector<NodeId> out;
  std::vector<NodeId> stack{n};
  while (!stack.empty()) {
    NodeId cur = stack.back();
    stack.pop_back();
    const auto& kids = children_[static_cast<std::size_t>(cur)];
    if (kids.empty()) out.push_back(cur);
    for (NodeId k : kids) stack.push_back(k);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool TaxonomyTree::is_balanced() const {
  std::map<int, std::size_t> fanout;
  for (std::size_t i = 0; i < size(); ++i) {
    auto [it, inserted] = fanout.emplace(depth_[i], children_[i].size());
    if (!inserted && it->second != children_[i].size()) return false;
  }
  return true;
}

std::vector<NodeId> TaxonomyTree::single_child_nodes() const {
  std::vector<NodeId> out;
  for (NodeId n : internal_)
    if (children_[static_cast<std::size_t>(n)].size() == 1) out.push_back(n);
  return out;
}

TaxonomyTree parse_taxonomy(std::string_view text) {
  struct Row {
    long long id;
    std::optional<long long> parent;
    std::string name;
    int line;
  };
  std::vector<Row> rows;
  std::map<long long, std::size_t> index_of;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (tokens.size() < 2 || tokens.size() > 3)
      throw ParseError(where + "expected '<id> <parent|root> [name]'");
    auto id = parse_int(tokens[0]);
    if (!id || *id < 0) throw ParseError(where + "bad node id '" + std::string(tokens[0]) + "'");
    Row row{*id, std::nullopt, tokens.size() == 3 ? std::string(tokens[2]) : std::string(), line_no};
    if (tokens[1] != "root") {
      auto parent = parse_int(tokens[1]);
      if (!parent || *parent < 0)
        throw ParseError(where + "bad parent '" + std::string(tokens[1]) + "' for node " +
                         std::to_string(*id));
      row.parent = *parent;
    }
    if (!index_of.emplace(*id, rows.size()).second)
      throw ParseError(where + "duplicate node id " + std::to_string(*id));
    rows.push_back(std::move(row));
  }

  std::optional<long long> root;
  for (const Row& r : rows) {
    if (!r.parent) {
      if (root)
        throw ParseError("node " + std::to_string(r.id) + ": second root (first is node " +
                         std::to_string(*root) + ")");
      root = r.id;
    }
  }
  if (!root) throw ParseError("missing root: no node has parent 'root'");

  std::vector<NodeId> parents(rows.size(), kNoNode);
  std::vector<std::string> names(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    names[i] = rows[i].name;
    if (!rows[i].parent) continue;
    auto it = index_of.find(*rows[i].parent);
    if (it == index_of.end())
      throw ParseError("orphan node " + std::to_string(rows[i].id) + ": parent " +
                       std::to_string(*rows[i].parent) + " is not defined");
    if (it->second == i) throw ParseError("cycle at node " + std::to_string(rows[i].id));
    parents[i] = static_cast<NodeId>(it->second);
  }

  // Any node that cannot reach the root by parent links sits on a cycle.
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::size_t cur = i;
    for (std::size_t steps = 0; parents[cur] != kNoNode; ++steps) {
      if (steps > rows.size())
        throw ParseError("cycle through node " + std::to_string(rows[i].id));
      cur = static_cast<std::size_t>(parents[cur]);
    }
  }
  return TaxonomyTree::from_parents(parents, names);
}

std::string serialize_taxonomy(const TaxonomyTree& tree) {
  std::ostringstream out;
  out << "# id parent name\n";
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const NodeId n = static_cast<NodeId>(i);
    out << n << ' ';
    if (tree.parent(n) == kNoNode)
      out << "root";
    else
      out << tree.parent(n);
    if (!tree.name(n).empty()) out << ' ' << tree.name(n);
    out << '\n';
  }
  return out.str();
}

TaxonomyTree load_taxonomy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open taxonomy file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_taxonomy(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

TaxonomyTree make_balanced_tree(const std::vector<int>& branching) {
  if (branching.empty()) throw std::invalid_argument("balanced tree needs at least one level");
  std::vector<NodeId> parents{kNoNode};
  std::vector<std::string> names{"root"};
  std::vector<NodeId> level{0};
  for (std::size_t d = 0; d < branching.size(); ++d) {
    if (branching[d] < 1) throw std::invalid_argument("branching factor must be positive");
    std::vector<NodeId> next;
    for (NodeId p : level) {
      for (int c = 0; c < branching[d]; ++c) {
        const NodeId id = static_cast<NodeId>(parents.size());
        parents.push_back(p);
        names.push_back("n" + std::to_string(id));
        next.push_back(id);
      }
    }
    level = std::move(next);
  }
  return TaxonomyTree::from_parents(parents, names);
}

std::vector<int> parse_shape(std::string_view shape) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= shape.size()) {
    std::size_t end = shape.find('x', pos);
    if (end == std::string_view::npos) end = shape.size();
    auto value = parse_int(shape.substr(pos, end - pos));
    if (!value || *value < 1) throw ConfigError("bad tree shape '" + std::string(shape) + "'");
    out.push_back(static_cast<int>(*value));
    pos = end + 1;
  }
  return out;
}

std::optional<std::size_t> SubTree::position(NodeId n) const {
  auto it = std::find(frontier.begin(), frontier.end(), n);
  if (it == frontier.end()) return std::nullopt;
  return static_cast<std::size_t>(it - frontier.begin());
}

SubTree expand(const SubTree& sub, const TaxonomyTree& tree, NodeId n) {
  auto pos = sub.position(n);
  if (!pos) throw std::invalid_argument("node " + std::to_string(n) + " is not in the frontier");
  if (tree.is_leaf(n)) throw std::invalid_argument("node " + std::to_string(n) + " is a leaf");
  SubTree next;
  next.visited = sub.visited;
  next.visited.push_back(n);
  next.frontier.reserve(sub.frontier.size() + tree.children(n).size() - 1);
  for (std::size_t i = 0; i < sub.frontier.size(); ++i)
    if (i != *pos) next.frontier.push_back(sub.frontier[i]);
  for (NodeId c : tree.children(n)) next.frontier.push_back(c);
  return next;
}

LabelMap::LabelMap(const TaxonomyTree& tree, const std::vector<NodeId>& label_set)
    : rows_(tree.size(), -1) {
  for (std::size_t i = 0; i < label_set.size(); ++i)
    rows_.at(static_cast<std::size_t>(label_set[i])) = static_cast<int>(i);
  // Ids are BFS ordered, so parents are resolved before their children.
  for (std::size_t n = 1; n < tree.size(); ++n) {
    if (rows_[n] >= 0) continue;
    rows_[n] = rows_[static_cast<std::size_t>(tree.parent(static_cast<NodeId>(n)))];
  }
}

}  // namespace tcil
