#include "tcil/curriculum.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tcil/error.hpp"
#include "tcil/random.hpp"

namespace tcil {

std::string to_string(Traversal policy) {
  switch (policy) {
    case Traversal::Bfs: return "bfs";
    case Traversal::Dfs: return "dfs";
    case Traversal::Random: return "random";
    case Traversal::FlatRandom: return "flat-random";
    case Traversal::FlatSemantic: return "flat-semantic";
  }
  return "?";
}

Traversal parse_traversal(std::string_view name) {
  for (Traversal p : {Traversal::Bfs, Traversal::Dfs, Traversal::Random, Traversal::FlatRandom,
                      Traversal::FlatSemantic})
    if (to_string(p) == name) return p;
  throw ConfigError("unknown traversal '" + std::string(name) + "'");
}

namespace {

void finish_counts(Curriculum& c, const TaxonomyTree& tree) {
  c.n_fine = 0;
  for (const Task& t : c.tasks) {
    bool all_leaves = std::all_of(t.new_classes.begin(), t.new_classes.end(),
                                  [&](NodeId n) { return tree.is_leaf(n); });
    if (all_leaves) ++c.n_fine;
  }
  c.n_coarse = c.n_tasks() - c.n_fine;
}

}  // namespace

Curriculum generate_taxonomic(const TaxonomyTree& tree, Traversal policy, std::uint64_t seed) {
  if (!is_taxonomic(policy)) throw std::invalid_argument("policy is not taxonomic");
  if (tree.size() < 2) throw std::invalid_argument("taxonomy has no classes");

  std::vector<NodeId> order;
  if (policy == Traversal::Bfs) {
    order = tree.internal_nodes();
  } else if (policy == Traversal::Dfs) {
    std::function<void(NodeId)> visit = [&](NodeId n) {
      if (tree.is_leaf(n)) return;
      order.push_back(n);
      for (NodeId c : tree.children(n)) visit(c);
    };
    visit(tree.root());
  }

  Curriculum c;
  c.policy = policy;
  c.seed = seed;
  Rng rng(seed);
  SubTree sub = SubTree::initial(tree);
  const std::size_t n_tasks = tree.internal_nodes().size();
  for (std::size_t step = 0; step < n_tasks; ++step) {
    NodeId node = kNoNode;
    if (policy == Traversal::Random) {
      if (step == 0) {
        node = tree.root();
      } else {
        std::vector<NodeId> expandable;
        for (NodeId f : sub.frontier)
          if (!tree.is_leaf(f)) expandable.push_back(f);
        node = expandable[rng.index(expandable.size())];
      }
    } else {
      node = order[step];
    }
    Task task;
    task.index = static_cast<int>(step) + 1;
    task.expanded_node = node;
    task.expanded_row = static_cast<int>(*sub.position(node));
    task.prev_label_count = sub.frontier.size();
    sub = expand(sub, tree, node);
    task.new_classes = tree.children(node);
    task.label_set = sub.frontier;
    c.tasks.push_back(std::move(task));
  }
  finish_counts(c, tree);
  return c;
}

Curriculum generate_flat(const TaxonomyTree& tree, Traversal policy, std::size_t group_size,
                         std::uint64_t seed) {
  std::vector<std::vector<NodeId>> groups;
  if (policy == Traversal::FlatSemantic) {
    for (NodeId p : tree.internal_nodes()) {
      std::vector<NodeId> group;
      for (NodeId c : tree.children(p))
        if (tree.is_leaf(c)) group.push_back(c);
      if (!group.empty()) groups.push_back(std::move(group));
    }
  } else if (policy == Traversal::FlatRandom) {
    const std::size_t n = tree.leaves().size();
    if (group_size == 0 || n % group_size != 0)
      throw ConfigError("group size " + std::to_string(group_size) + " does not divide " +
                        std::to_string(n) + " leaves");
    std::vector<NodeId> leaves = tree.leaves();
    Rng rng(seed);
    rng.shuffle(std::span<NodeId>(leaves));
    for (std::size_t i = 0; i < n; i += group_size)
      groups.emplace_back(leaves.begin() + static_cast<std::ptrdiff_t>(i),
                          leaves.begin() + static_cast<std::ptrdiff_t>(i + group_size));
  } else {
    throw std::invalid_argument("policy is not flat");
  }

  Curriculum c;
  c.policy = policy;
  c.seed = seed;
  std::vector<NodeId> labels;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    Task task;
    task.index = static_cast<int>(i) + 1;
    task.prev_label_count = labels.size();
    labels.insert(labels.end(), groups[i].begin(), groups[i].end());
    task.new_classes = groups[i];
    task.label_set = labels;
    c.tasks.push_back(std::move(task));
  }
  c.n_coarse = 0;
  c.n_fine = c.n_tasks();
  return c;
}

TaskCounts task_counts(const Curriculum& curriculum) {
  return {curriculum.n_coarse, curriculum.n_fine, curriculum.n_tasks()};
}

std::string serialize_curriculum(const Curriculum& curriculum) {
  std::ostringstream out;
  nlohmann::json header = {{"policy", to_string(curriculum.policy)},
                           {"seed", curriculum.seed},
                           {"n_coarse", curriculum.n_coarse},
                           {"n_fine", curriculum.n_fine},
                           {"n_tasks", curriculum.n_tasks()}};
  out << header.dump() << '\n';
  for (const Task& t : curriculum.tasks) {
    nlohmann::json rec = {{"t", t.index},
                          {"expanded", t.expanded_node},
                          {"row", t.expanded_row},
                          {"prev", t.prev_label_count},
                          {"new", t.new_classes},
                          {"labels", t.label_set}};
    out << rec.dump() << '\n';
  }
  return out.str();
}

Curriculum parse_curriculum(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  Curriculum c;
  bool have_header = false;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto rec = nlohmann::json::parse(line);
      if (!have_header) {
        c.policy = parse_traversal(rec.at("policy").get<std::string>());
        c.seed = rec.at("seed").get<std::uint64_t>();
        c.n_coarse = rec.at("n_coarse").get<int>();
        c.n_fine = rec.at("n_fine").get<int>();
        have_header = true;
        continue;
      }
      Task t;
      t.index = rec.at("t").get<int>();
      t.expanded_node = rec.at("expanded").get<NodeId>();
      t.expanded_row = rec.at("row").get<int>();
      t.prev_label_count = rec.at("prev").get<std::size_t>();
      t.new_classes = rec.at("new").get<std::vector<NodeId>>();
      t.label_set = rec.at("labels").get<std::vector<NodeId>>();
      c.tasks.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("curriculum: ") + e.what());
  }
  if (!have_header) throw ParseError("curriculum: missing header record");
  return c;
}

}  // namespace tcil
