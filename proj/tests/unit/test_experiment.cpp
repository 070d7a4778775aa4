#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "tcil/checkpoint.hpp"
#include "tcil/error.hpp"
#include "tcil/experiment.hpp"
#include "tcil/verify.hpp"

using namespace tcil;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"(# tiny
shape = 3x2
traversal = dfs
dims = 4
per_leaf = 12
test_per_leaf = 6
spreads = 3, 1.5, 0.5
rates = 0.3
modes = tcil, flat-random
seeds = 1, 2
epochs1 = 3
milestones1 = 2
lr1 = 0.01
epochs2 = 1
lr2 = 0.01
hidden = 6
delta = 3
buffer = 6
batch = 4
out = results
)";

}  // namespace

TEST_CASE("config parsing") {
  auto c = parse_experiment_config(kSmall, "/base");
  CHECK(c.shape == "3x2");
  CHECK(c.traversal == Traversal::Dfs);
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2});
  CHECK(c.modes == std::vector<std::string>{"tcil", "flat-random"});
  CHECK(c.train.stage1.milestones == std::vector<int>{2});
  CHECK(c.train.delta_per_depth == std::vector<std::size_t>{3});
  CHECK(c.out_dir == fs::path("/base/results"));

  CHECK_THROWS_AS(parse_experiment_config("shape = 2x2\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("shape = 2x2\nlr1 = fast\n"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("dims = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("shape = 2x2\nmodes = der\n"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("shape = 2x2\nseeds = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("shape 2x2\n"), ConfigError);
}

TEST_CASE("arms are deterministic and produce one record per task") {
  auto c = parse_experiment_config(kSmall);
  auto tree = experiment_tree(c);
  for (const auto& name : c.modes) {
    auto a = run_arm(c, tree, parse_mode_spec(name), 1);
    auto b = run_arm(c, tree, parse_mode_spec(name), 1);
    CHECK(to_csv(a.records) == to_csv(b.records));
    CHECK(static_cast<int>(a.records.size()) == a.history.n_coarse + a.history.n_fine);
  }
}

TEST_CASE("experiment writes csv, chart and summary") {
  const fs::path dir = fs::temp_directory_path() / "tcil_unit_experiment";
  fs::remove_all(dir);
  auto c = parse_experiment_config(kSmall);
  c.out_dir = dir;
  auto r = run_experiment(c);
  CHECK(fs::exists(dir / "metrics.csv"));
  CHECK(fs::exists(dir / "accuracy.svg"));
  CHECK(fs::exists(dir / "summary.txt"));
  CHECK(fs::exists(dir / "checkpoints" / "tcil_s1_t1.json"));
  CHECK(fs::exists(dir / "inheritance" / "tcil_s2.jsonl"));
  CHECK(fs::exists(dir / "logs" / "flat-random_s1.csv"));
  std::ifstream in(dir / "metrics.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "seed,mode,task,n_classes,accuracy");
  const auto svg = accuracy_svg(r.records);
  CHECK(svg.find("<svg") == 0);
  CHECK(std::count(svg.begin(), svg.end(), '\n') > 5);
  std::size_t lines = 0;
  for (std::size_t p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++lines;
  CHECK(lines == 2);
  fs::remove_all(dir);
}

TEST_CASE("checkpoint round-trip is exact") {
  auto tree = make_balanced_tree({3, 2});
  auto data = synth_generate(tree, 10, 4, {3.0, 1.5, 0.5}, 1);
  auto alloc = split(data, tree, {0.3}, 1);
  auto cur = generate_taxonomic(tree, Traversal::Bfs);
  TrainConfig cfg;
  cfg.epochs_stage1 = 2;
  cfg.epochs_stage2 = 1;
  cfg.stage1 = {0.01, {}, 0.1};
  cfg.hidden = 5;
  cfg.delta_per_depth = {3};
  cfg.buffer_capacity = 6;

  IncrementalLearner a(tree, cur, 4, cfg);
  a.train_task(cur.tasks[0], data, alloc);
  a.train_task(cur.tasks[1], data, alloc);
  const std::string text = save_checkpoint(a);

  IncrementalLearner b(tree, cur, 4, cfg);
  load_checkpoint(b, text);
  CHECK(save_checkpoint(b) == text);
  CHECK(b.classifier().weights.value == a.classifier().weights.value);
  CHECK(b.classifier().frozen_mask == a.classifier().frozen_mask);
  CHECK(b.buffer().entries == a.buffer().entries);

  // both continue identically
  a.train_task(cur.tasks[2], data, alloc);
  b.train_task(cur.tasks[2], data, alloc);
  CHECK(save_checkpoint(a) == save_checkpoint(b));

  CHECK_THROWS_AS(load_checkpoint(b, "{}"), ParseError);
  CHECK_THROWS_AS(load_checkpoint(b, "nope"), ParseError);
  auto bumped = text;
  bumped.replace(bumped.find("\"version\": 1"), 12, "\"version\": 9");
  CHECK_THROWS_AS(load_checkpoint(b, bumped), ParseError);

  const auto dump = inheritance_dump(a.classifier());
  CHECK(dump.find("\"I\"") != std::string::npos);
  CHECK(dump.find("\"kind\":\"tcil\"") != std::string::npos);
}

TEST_CASE("built-in verification passes") {
  for (const auto& r : run_verification(0)) {
    INFO(r.name, " ", r.detail);
    CHECK(r.passed);
  }
}
