#include <doctest.h>

#include <functional>
#include <set>

#include "oracles.hpp"
#include "tcil/error.hpp"
#include "tcil/random.hpp"
#include "tcil/taxonomy.hpp"

using namespace tcil;

TEST_CASE("balanced shapes have the expected leaf and internal counts") {
  auto a = make_balanced_tree({20, 5});
  CHECK(a.leaves().size() == 100);
  CHECK(a.internal_nodes().size() == 21);
  CHECK(a.height() == 2);
  auto b = make_balanced_tree(parse_shape("4x5x5"));
  CHECK(b.leaves().size() == 100);
  CHECK(b.internal_nodes().size() == 25);
  CHECK(b.height() == 3);
  CHECK(b.is_balanced());
}

TEST_CASE("smallest tree") {
  auto t = parse_taxonomy("0 root r\n1 0 a\n2 0 b\n3 0 c\n");
  CHECK(t.leaves() == std::vector<NodeId>{1, 2, 3});
  CHECK(t.internal_nodes() == std::vector<NodeId>{0});
  CHECK(t.depth(0) == 0);
  CHECK(t.depth(2) == 1);
}

TEST_CASE("parser renumbers breadth-first and keeps child order") {
  // ids scrambled, depth-first listing
  auto t = parse_taxonomy("# demo\n7 root top\n3 7 animal\n9 3 cat\n4 3 dog\n2 7 plant\n");
  CHECK(t.name(0) == "top");
  CHECK(t.name(1) == "animal");
  CHECK(t.name(2) == "plant");
  CHECK(t.name(3) == "cat");
  CHECK(t.name(4) == "dog");
  CHECK(t.parent(3) == 1);
  CHECK(parse_taxonomy(serialize_taxonomy(t)).size() == t.size());
  CHECK(serialize_taxonomy(parse_taxonomy(serialize_taxonomy(t))) == serialize_taxonomy(t));
}

TEST_CASE("parser rejects malformed trees") {
  CHECK_THROWS_AS(parse_taxonomy("0 root\n0 0\n"), ParseError);    // duplicate id
  CHECK_THROWS_AS(parse_taxonomy("1 2\n2 1\n"), ParseError);        // no root
  CHECK_THROWS_AS(parse_taxonomy("0 root\n1 root\n"), ParseError);  // two roots
  CHECK_THROWS_AS(parse_taxonomy("0 root\n1 5\n"), ParseError);     // orphan
  CHECK_THROWS_AS(parse_taxonomy("0 root\n1 2\n2 1\n"), ParseError);  // cycle off the root
  CHECK_THROWS_AS(parse_taxonomy("0 root\nx 0\n"), ParseError);
  CHECK_THROWS_AS(parse_shape("4xx5"), std::exception);
}

TEST_CASE("ancestors match parent chasing") {
  auto t = make_balanced_tree({4, 5, 5});
  CHECK(t.ancestors(t.root()).empty());
  for (NodeId leaf : t.leaves()) {
    CHECK(t.ancestors(leaf).size() == 3);
    CHECK(t.ancestors(leaf) == oracle::parent_chain(t, leaf));
  }
  auto c = make_balanced_tree({20, 5});
  for (NodeId leaf : c.leaves()) CHECK(c.ancestors(leaf) == oracle::parent_chain(c, leaf));
}

TEST_CASE("leaves_under matches brute-force descent") {
  auto t = make_balanced_tree({4, 5, 5});
  for (NodeId n : t.internal_nodes()) {
    std::vector<NodeId> expect;
    for (NodeId leaf : t.leaves()) {
      auto chain = oracle::parent_chain(t, leaf);
      if (std::find(chain.begin(), chain.end(), n) != chain.end()) expect.push_back(leaf);
    }
    CHECK(t.leaves_under(n) == expect);
    if (t.depth(n) == 1) CHECK(expect.size() == 25);
  }
  CHECK(t.leaves_under(t.leaves().front()) == std::vector<NodeId>{t.leaves().front()});
  auto c = make_balanced_tree({20, 5});
  CHECK(c.leaves_under(1).size() == 5);
}

TEST_CASE("ancestor relation agrees with subtree membership on random trees") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.index(99);
    std::vector<NodeId> parents{kNoNode};
    std::vector<std::string> names{"root"};
    for (std::size_t i = 1; i < n; ++i) {
      parents.push_back(static_cast<NodeId>(rng.index(i)));
      names.push_back("n" + std::to_string(i));
    }
    auto t = TaxonomyTree::from_parents(parents, names);
    for (std::size_t a = 0; a < t.size(); ++a)
      for (std::size_t b = 0; b < t.size(); ++b) {
        const auto chain = oracle::parent_chain(t, static_cast<NodeId>(b));
        const bool expect = std::find(chain.begin(), chain.end(), static_cast<NodeId>(a)) != chain.end();
        CHECK(t.is_ancestor(static_cast<NodeId>(a), static_cast<NodeId>(b)) == expect);
      }
    std::size_t leaves = 0;
    for (std::size_t i = 0; i < t.size(); ++i) leaves += oracle::has_children(t, static_cast<NodeId>(i)) ? 0 : 1;
    CHECK(t.leaves().size() == leaves);
    CHECK(t.leaves().size() + t.internal_nodes().size() == t.size());
  }
}

TEST_CASE("expand at the root of 20x5 yields the super-classes") {
  auto t = make_balanced_tree({20, 5});
  auto s = expand(SubTree::initial(t), t, t.root());
  CHECK(s.frontier.size() == 20);
  CHECK(s.frontier == t.children(t.root()));
  CHECK_THROWS(expand(s, t, t.root()));
  CHECK_THROWS(expand(s, t, t.leaves().front()));
}

TEST_CASE("every expansion order of a 2x2x2 tree keeps the frontier equal to the materialized subtree") {
  auto t = make_balanced_tree({2, 2, 2});
  std::function<void(const SubTree&)> walk = [&](const SubTree& s) {
    CHECK(std::set<NodeId>(s.frontier.begin(), s.frontier.end()) == oracle::frontier_from_visited(t, s.visited));
    bool any = false;
    for (NodeId n : s.frontier) {
      if (t.is_leaf(n)) continue;
      any = true;
      auto next = expand(s, t, n);
      CHECK(next.frontier.size() == s.frontier.size() - 1 + t.children(n).size());
      walk(next);
    }
    if (!any) CHECK(std::set<NodeId>(s.frontier.begin(), s.frontier.end()) ==
                    std::set<NodeId>(t.leaves().begin(), t.leaves().end()));
  };
  walk(SubTree::initial(t));
}

TEST_CASE("4x5x5 expansions add net four") {
  auto t = make_balanced_tree({4, 5, 5});
  auto s = expand(SubTree::initial(t), t, 0);
  auto s2 = expand(s, t, s.frontier[2]);
  CHECK(s2.frontier.size() == s.frontier.size() + 4);
}

TEST_CASE("unbalanced trees are accepted and flagged") {
  auto t = parse_taxonomy("0 root\n1 0\n2 0\n3 1\n4 1\n5 3\n");
  CHECK_FALSE(t.is_balanced());
  CHECK(t.single_child_nodes() == std::vector<NodeId>{3});
}

TEST_CASE("label map resolves the nearest covering row") {
  auto t = make_balanced_tree({2, 3});
  auto s = expand(SubTree::initial(t), t, 0);
  LabelMap m(t, s.frontier);
  for (NodeId leaf : t.leaves()) CHECK(s.frontier[static_cast<std::size_t>(m.row(leaf))] == t.parent(leaf));
  LabelMap empty(t, {});
  CHECK(empty.row(t.leaves().front()) == -1);
}
