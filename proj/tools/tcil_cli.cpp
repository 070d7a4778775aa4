// tcil: curriculum / split / run / verify.
//
// exit codes: 0 ok, 1 usage, 2 config error, 3 runtime error

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "tcil/curriculum.hpp"
#include "tcil/datagen.hpp"
#include "tcil/error.hpp"
#include "tcil/experiment.hpp"
#include "tcil/verify.hpp"

namespace fs = std::filesystem;
using namespace tcil;

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kRuntime = 3 };

struct Options {
  std::string config;
  std::string seeds;
  std::string out;
  std::string mode;
};

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      std::size_t used = 0;
      if (item.empty() || item[0] == '-') throw std::invalid_argument(item);
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad seed '" + item + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

ExperimentConfig load(const Options& o) {
  ExperimentConfig c = load_experiment_config(o.config);
  if (!o.seeds.empty()) c.seeds = parse_seeds(o.seeds);
  if (!o.out.empty()) c.out_dir = o.out;
  if (!o.mode.empty()) {
    parse_mode_spec(o.mode);
    c.modes = {o.mode};
  }
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_curriculum(const Options& o) {
  const ExperimentConfig c = load(o);
  const TaxonomyTree tree = experiment_tree(c);
  const ModeSpec mode = parse_mode_spec(o.mode.empty() ? "tcil" : o.mode);
  const Curriculum cur = experiment_curriculum(c, tree, mode, c.seeds.front());
  const TaskCounts n = task_counts(cur);
  const fs::path path = c.out_dir / "curriculum.jsonl";
  write_text(path, serialize_curriculum(cur));
  std::printf("N_c=%d N_f=%d N_T=%d\n", n.n_coarse, n.n_fine, n.n_total);
  std::printf("wrote %s\n", path.string().c_str());
  return kOk;
}

int cmd_split(const Options& o) {
  const ExperimentConfig c = load(o);
  const TaxonomyTree tree = experiment_tree(c);
  const DataPair data = experiment_data(c, tree, c.seeds.front());
  const SampleAllocation alloc = split(data.train, tree, experiment_rates(c, tree), derive_seed(c.seeds.front(), 4));

  std::map<int, std::pair<std::size_t, std::size_t>> per_depth;  // depth -> (nodes, samples)
  for (const auto& [node, idx] : alloc.samples) {
    auto& d = per_depth[tree.is_leaf(node) ? tree.height() : tree.depth(node)];
    d.first += 1;
    d.second += idx.size();
  }
  const double leaves = static_cast<double>(tree.leaves().size());
  for (const auto& [depth, d] : per_depth)
    std::printf("depth %d%s: %zu nodes, %zu samples (%.1f per leaf)\n", depth,
                depth == tree.height() ? " (leaf residual)" : "", d.first, d.second,
                static_cast<double>(d.second) / leaves);
  const fs::path path = c.out_dir / "allocation.json";
  write_text(path, allocation_manifest(alloc, tree));
  std::printf("wrote %s\n", path.string().c_str());
  return kOk;
}

int cmd_run(const Options& o) {
  const ExperimentConfig c = load(o);
  const ExperimentResult r = run_experiment(c);
  std::cout << summary_table(r.arms);
  std::printf("wrote %s\n", (c.out_dir / "metrics.csv").string().c_str());
  return kOk;
}

int cmd_verify(const Options& o) {
  const std::uint64_t seed = o.seeds.empty() ? 0 : parse_seeds(o.seeds).front();
  int failed = 0;
  for (const auto& r : run_verification(seed)) {
    std::printf("%s  %s%s%s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.empty() ? "" : "  ",
                r.detail.c_str());
    failed += r.passed ? 0 : 1;
  }
  return failed ? kRuntime : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Taxonomic class-incremental learning experiments"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", o.config, "experiment config file");
    if (needs_config) opt->required();
    sub->add_option("--seed", o.seeds, "seed or comma-separated seed list");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--mode", o.mode, "tcil, tc, flat-taxonomic, flat-random or flat-semantic");
  };
  auto* curriculum = app.add_subcommand("curriculum", "write the task sequence and print its counts");
  auto* split_cmd = app.add_subcommand("split", "split the training data over taxonomy nodes");
  auto* run = app.add_subcommand("run", "train and evaluate every mode and seed");
  auto* verify = app.add_subcommand("verify", "check training invariants on a small problem");
  add_common(curriculum, true);
  add_common(split_cmd, true);
  add_common(run, true);
  add_common(verify, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*curriculum) return cmd_curriculum(o);
    if (*split_cmd) return cmd_split(o);
    if (*run) return cmd_run(o);
    if (*verify) return cmd_verify(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kUsage;
}
