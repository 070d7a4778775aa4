#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tcil/curriculum.hpp"
#include "tcil/datagen.hpp"
#include "tcil/eval.hpp"
#include "tcil/taxonomy.hpp"
#include "tcil/trainer.hpp"

namespace tcil {

// A named experiment arm: how the classifier is trained and which
// curriculum it sees.
struct ModeSpec {
  std::string name;  // tcil, tc, flat-taxonomic, flat-random, flat-semantic
  Mode mode = Mode::Tcil;
  bool flat_curriculum = false;
  Traversal flat_policy = Traversal::FlatRandom;
};

ModeSpec parse_mode_spec(std::string_view name);

// Config file grammar: one `key = value` per line, '#' starts a comment,
// lists are comma separated. Relative paths resolve against the config
// file's directory. See README for the key list.
struct ExperimentConfig {
  std::filesystem::path taxonomy_path;  // either this ...
  std::string shape;                    // ... or a balanced shape like "5x4"
  Traversal traversal = Traversal::Bfs;
  std::uint64_t curriculum_seed = 0;
  std::size_t group_size = 0;  // flat-random task size; 0 = leaf siblings per parent

  std::filesystem::path data_path;  // dataset files; synthetic data when empty
  std::filesystem::path test_path;
  std::size_t dims = 16;
  std::size_t per_leaf = 50;
  std::size_t test_per_leaf = 50;
  std::vector<double> spreads;  // height + 1 entries; empty = 4, 2, 1, ... halving, noise last

  std::vector<double> rates;  // one per internal depth; empty = 0.3 each
  std::vector<std::string> modes{"tcil"};
  std::vector<std::uint64_t> seeds{0};
  TrainConfig train;
  std::filesystem::path out_dir = "out";
  bool checkpoints = true;
};

ExperimentConfig parse_experiment_config(std::string_view text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

TaxonomyTree experiment_tree(const ExperimentConfig& config);
Curriculum experiment_curriculum(const ExperimentConfig& config, const TaxonomyTree& tree,
                                 const ModeSpec& mode, std::uint64_t seed);
std::vector<double> experiment_rates(const ExperimentConfig& config, const TaxonomyTree& tree);
std::vector<double> experiment_spreads(const ExperimentConfig& config, const TaxonomyTree& tree);

struct DataPair {
  LabeledDataset train;
  LabeledDataset test;
};

DataPair experiment_data(const ExperimentConfig& config, const TaxonomyTree& tree, std::uint64_t seed);

struct ArmResult {
  std::string mode;
  std::uint64_t seed = 0;
  MetricsHistory history;
  std::vector<MetricRecord> records;
  std::vector<EpochLog> epochs;
};

// Runs one (mode, seed) arm end to end. When out_dir is non-empty, per-task
// checkpoints, inheritance dumps and epoch logs go under it.
ArmResult run_arm(const ExperimentConfig& config, const TaxonomyTree& tree, const ModeSpec& mode,
                  std::uint64_t seed, const std::filesystem::path& out_dir = {});

struct ExperimentResult {
  std::vector<ArmResult> arms;
  std::vector<MetricRecord> records;
};

// Every mode for every seed; writes metrics.csv, accuracy.svg and
// summary.txt into config.out_dir.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Accuracy-vs-task line chart, one polyline per mode (mean over seeds).
std::string accuracy_svg(const std::vector<MetricRecord>& records);

// Per mode: Acc@1 and AvgAcc as mean +- sample std over seeds.
std::string summary_table(const std::vector<ArmResult>& arms);

}  // namespace tcil
