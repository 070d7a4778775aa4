#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "tcil/curriculum.hpp"
#include "tcil/datagen.hpp"
#include "tcil/error.hpp"
#include "tcil/random.hpp"

using namespace tcil;

namespace {

LabeledDataset labels_only(const TaxonomyTree& t, std::size_t per_leaf) {
  LabeledDataset d;
  for (NodeId leaf : t.leaves())
    for (std::size_t i = 0; i < per_leaf; ++i) d.labels.push_back(leaf);
  return d;
}

// Count of indices in `idx` whose label is `leaf`.
std::size_t count_of(const LabeledDataset& d, const std::vector<std::size_t>& idx, NodeId leaf) {
  std::size_t n = 0;
  for (auto i : idx) n += d.labels[i] == leaf ? 1 : 0;
  return n;
}

void check_disjoint_cover(const SampleAllocation& a, std::size_t total) {
  std::set<std::size_t> seen;
  std::size_t sum = 0;
  for (const auto& [node, idx] : a.samples) {
    sum += idx.size();
    seen.insert(idx.begin(), idx.end());
  }
  CHECK(sum == seen.size());
  CHECK(sum == total);
}

}  // namespace

TEST_CASE("cifar-style split") {
  auto t = make_balanced_tree({20, 5});
  auto d = labels_only(t, 500);
  auto a = split(d, t, {0.3}, 1);
  check_disjoint_cover(a, d.size());
  for (NodeId n : t.children(t.root())) {
    CHECK(a.samples.at(n).size() == 750);
    for (NodeId leaf : t.children(n)) {
      CHECK(count_of(d, a.samples.at(n), leaf) == 150);
      CHECK(a.residual(leaf).size() == 350);
    }
  }
}

TEST_CASE("imagenet-style split") {
  auto t = make_balanced_tree({4, 5, 5});
  auto d = labels_only(t, 1300);
  auto a = split(d, t, {0.2, 0.3}, 2);
  check_disjoint_cover(a, d.size());
  for (std::size_t i = 1; i < t.size(); ++i) {
    const auto n = static_cast<NodeId>(i);
    const std::size_t per_leaf = t.depth(n) == 1 ? 260 : t.depth(n) == 2 ? 390 : 650;
    CHECK(a.samples.at(n).size() == per_leaf * t.leaves_under(n).size());
    for (NodeId leaf : t.leaves_under(n)) CHECK(count_of(d, a.samples.at(n), leaf) == per_leaf);
  }
}

TEST_CASE("tiny rates leave coarse samples empty") {
  auto t = make_balanced_tree({2, 3});
  auto d = labels_only(t, 500);
  auto a = split(d, t, {0.001}, 0);
  for (NodeId n : t.children(t.root())) CHECK(a.samples.at(n).empty());
  for (NodeId leaf : t.leaves()) CHECK(a.residual(leaf).size() == 500);
}

TEST_CASE("split rejects bad rates") {
  auto t = make_balanced_tree({2, 2, 2});
  auto d = labels_only(t, 10);
  CHECK_THROWS_AS(split(d, t, {0.3}, 0), ConfigError);
  CHECK_THROWS_AS(split(d, t, {0.6, 0.5}, 0), ConfigError);
  CHECK_THROWS_AS(split(d, t, {0.0, 0.5}, 0), ConfigError);
  // too few examples for any draw: everything stays with the leaves
  auto tiny = split(labels_only(t, 1), t, {0.4, 0.5}, 0);
  for (NodeId leaf : t.leaves()) CHECK(tiny.residual(leaf).size() == 1);
}

TEST_CASE("randomized split property suite") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<int> shape;
    const std::size_t depth = 2 + rng.index(3);
    for (std::size_t k = 0; k < depth; ++k) shape.push_back(static_cast<int>(1 + rng.index(3)));
    auto t = make_balanced_tree(shape);
    std::vector<double> rates;
    for (std::size_t k = 0; k + 1 < depth; ++k) rates.push_back(0.05 + 0.2 * rng.uniform());
    LabeledDataset d;
    std::map<NodeId, std::size_t> counts;
    for (NodeId leaf : t.leaves()) {
      counts[leaf] = 20 + rng.index(181);
      for (std::size_t i = 0; i < counts[leaf]; ++i) d.labels.push_back(leaf);
    }
    rng.shuffle(std::span<NodeId>(d.labels));
    auto a = split(d, t, rates, trial);
    check_disjoint_cover(a, d.size());
    for (std::size_t i = 1; i < t.size(); ++i) {
      const auto n = static_cast<NodeId>(i);
      if (t.is_leaf(n)) continue;
      for (NodeId leaf : t.leaves_under(n)) {
        const auto want = static_cast<std::size_t>(std::floor(rates[static_cast<std::size_t>(t.depth(n) - 1)] *
                                                              static_cast<double>(counts[leaf]) + 1e-9));
        CHECK(count_of(d, a.samples.at(n), leaf) == want);
      }
    }
    CHECK(serialize_dataset(d) == serialize_dataset(d));
    auto b = split(d, t, rates, trial);
    CHECK(a.samples == b.samples);
  }
}

TEST_CASE("task datasets over a bfs curriculum use each index as current at most once") {
  auto t = make_balanced_tree({4, 5, 5});
  auto d = labels_only(t, 40);
  auto a = split(d, t, {0.2, 0.3}, 4);
  auto c = generate_taxonomic(t, Traversal::Bfs);
  std::set<std::size_t> used;
  std::size_t total = 0;
  for (const auto& task : c.tasks) {
    for (const auto& ex : task_dataset(a, task, {}, t, d)) {
      CHECK(ex.current);
      CHECK(ex.label >= static_cast<int>(task.old_count()));
      used.insert(ex.index);
      ++total;
    }
  }
  CHECK(total == used.size());
  CHECK(total == d.size());

  auto c2 = generate_taxonomic(make_balanced_tree({20, 5}), Traversal::Bfs);
  auto t2 = make_balanced_tree({20, 5});
  auto d2 = labels_only(t2, 500);
  CHECK(task_dataset(split(d2, t2, {0.3}, 0), c2.tasks[0], {}, t2, d2).size() == 15000);
}

TEST_CASE("buffer entries are relabeled to the covering class") {
  auto t = make_balanced_tree({2, 2});
  auto d = labels_only(t, 10);
  auto a = split(d, t, {0.3}, 0);
  auto c = generate_taxonomic(t, Traversal::Bfs);
  RehearsalBuffer b = update_buffer({}, {{1, a.samples.at(1)}, {2, a.samples.at(2)}}, 4, 0);
  auto ds = task_dataset(a, c.tasks[1], b, t, d);  // expands node 1 into leaves 3, 4
  std::size_t from_buffer = 0;
  for (const auto& ex : ds) {
    if (ex.current) continue;
    ++from_buffer;
    const NodeId covering = c.tasks[1].label_set[static_cast<std::size_t>(ex.label)];
    CHECK((covering == d.labels[ex.index] || t.parent(d.labels[ex.index]) == covering));
  }
  CHECK(from_buffer == b.total());
}

TEST_CASE("buffer quotas") {
  std::map<NodeId, std::vector<std::size_t>> pools;
  for (NodeId c = 0; c < 20; ++c)
    for (std::size_t i = 0; i < 300; ++i) pools[c].push_back(static_cast<std::size_t>(c) * 1000 + i);
  auto b = update_buffer({}, pools, 2000, 1);
  for (const auto& [c, idx] : b.entries) CHECK(idx.size() == 100);
  CHECK(b.total() == 2000);

  auto small = update_buffer({}, {{5, {1, 2, 3, 4, 5}}, {6, {6, 7, 8, 9}}, {7, {10, 11, 12, 13}}}, 10, 1);
  CHECK(small.entries.at(5).size() == 4);
  CHECK(small.entries.at(6).size() == 3);
  CHECK(small.entries.at(7).size() == 3);
  auto again = update_buffer({}, {{5, {1, 2, 3, 4, 5}}, {6, {6, 7, 8, 9}}, {7, {10, 11, 12, 13}}}, 10, 1);
  CHECK(again.entries == small.entries);
  // refill keeps old classes and stays within capacity
  auto grown = update_buffer(small, {{8, {20, 21, 22, 23}}}, 10, 2);
  CHECK(grown.entries.size() == 4);
  CHECK(grown.total() <= 10);
  for (const auto& [cls, idx] : grown.entries)
    if (cls != 8) CHECK(std::includes(small.entries.at(cls).begin(), small.entries.at(cls).end(), idx.begin(), idx.end()));
}

TEST_CASE("synthetic data") {
  auto t = make_balanced_tree({4, 5});
  auto d = synth_generate(t, 50, 16, {3.0, 1.0, 0.3}, 7);
  CHECK(d.size() == 1000);
  for (const auto& [leaf, n] : d.per_class_count()) CHECK(n == 50);
  CHECK(serialize_dataset(synth_generate(t, 50, 16, {3.0, 1.0, 0.3}, 7)) == serialize_dataset(d));

  // siblings are closer than cousins, averaged over seeds
  double sib = 0, cousin = 0;
  int ns = 0, nc = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto m = synth_means(t, 16, {3.0, 1.0, 0.3}, seed);
    for (NodeId a : t.leaves())
      for (NodeId b : t.leaves()) {
        if (a >= b) continue;
        double dist = 0;
        for (std::size_t k = 0; k < 16; ++k) dist += (m[a][k] - m[b][k]) * (m[a][k] - m[b][k]);
        dist = std::sqrt(dist);
        if (t.parent(a) == t.parent(b)) { sib += dist; ++ns; } else { cousin += dist; ++nc; }
      }
  }
  CHECK(sib / ns < cousin / nc);

  auto two = synth_generate(t, 3, 2, {3.0, 1.0, 0.3}, 0);
  CHECK(two.dim == 2);
}

TEST_CASE("dataset text round-trip is exact") {
  auto t = make_balanced_tree({2, 2});
  auto d = synth_generate(t, 5, 3, {2.0, 1.0, 0.5}, 1);
  auto back = parse_dataset(serialize_dataset(d));
  CHECK(back.features == d.features);
  CHECK(back.labels == d.labels);
  CHECK_THROWS_AS(parse_dataset("2 1\n0 1.0\n"), ParseError);
}
