#include "tcil/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "tcil/checkpoint.hpp"
#include "tcil/error.hpp"
#include "tcil/log.hpp"

namespace tcil {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const unsigned long long n = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
  return out;
}

std::vector<int> to_ints(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& item : split_list(v)) out.push_back(static_cast<int>(to_uint(key, item)));
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

ModeSpec parse_mode_spec(std::string_view name) {
  ModeSpec m;
  m.name = std::string(name);
  if (name == "tcil") {
    m.mode = Mode::Tcil;
  } else if (name == "tc") {
    m.mode = Mode::Tc;
  } else if (name == "flat-taxonomic") {
    m.mode = Mode::FlatCil;
  } else if (name == "flat-random" || name == "flat-semantic") {
    m.mode = Mode::FlatCil;
    m.flat_curriculum = true;
    m.flat_policy = name == "flat-random" ? Traversal::FlatRandom : Traversal::FlatSemantic;
  } else {
    throw ConfigError("unknown mode '" + std::string(name) +
                      "' (expected tcil, tc, flat-taxonomic, flat-random or flat-semantic)");
  }
  return m;
}

ExperimentConfig parse_experiment_config(std::string_view text, const fs::path& base_dir) {
  ExperimentConfig c;
  auto resolve = [&](const std::string& v) {
    fs::path p(v);
    return p.is_relative() && !base_dir.empty() ? (base_dir / p).lexically_normal() : p;
  };
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string v = trim(std::string_view(line).substr(eq + 1));
    TrainConfig& t = c.train;

    if (key == "taxonomy") c.taxonomy_path = resolve(v);
    else if (key == "shape") c.shape = v;
    else if (key == "traversal") c.traversal = parse_traversal(v);
    else if (key == "curriculum_seed") c.curriculum_seed = to_uint(key, v);
    else if (key == "group_size") c.group_size = to_uint(key, v);
    else if (key == "data") c.data_path = resolve(v);
    else if (key == "test_data") c.test_path = resolve(v);
    else if (key == "dims") c.dims = to_uint(key, v);
    else if (key == "per_leaf") c.per_leaf = to_uint(key, v);
    else if (key == "test_per_leaf") c.test_per_leaf = to_uint(key, v);
    else if (key == "spreads") c.spreads = to_doubles(key, v);
    else if (key == "rates") c.rates = to_doubles(key, v);
    else if (key == "buffer") t.buffer_capacity = to_uint(key, v);
    else if (key == "modes") {
      c.modes = split_list(v);
      for (const auto& m : c.modes) parse_mode_spec(m);
    } else if (key == "seeds") {
      c.seeds.clear();
      for (const auto& s : split_list(v)) c.seeds.push_back(to_uint(key, s));
    } else if (key == "out") c.out_dir = resolve(v);
    else if (key == "checkpoints") c.checkpoints = to_bool(key, v);
    else if (key == "gate") t.gate = parse_gate_strategy(v);
    else if (key == "epochs1") t.epochs_stage1 = static_cast<int>(to_uint(key, v));
    else if (key == "epochs2") t.epochs_stage2 = static_cast<int>(to_uint(key, v));
    else if (key == "lr1") t.stage1.lr = to_double(key, v);
    else if (key == "milestones1") t.stage1.milestones = to_ints(key, v);
    else if (key == "decay1") t.stage1.decay = to_double(key, v);
    else if (key == "lr2") t.stage2.lr = to_double(key, v);
    else if (key == "milestones2") t.stage2.milestones = to_ints(key, v);
    else if (key == "decay2") t.stage2.decay = to_double(key, v);
    else if (key == "momentum") t.momentum = to_double(key, v);
    else if (key == "weight_decay") t.weight_decay = to_double(key, v);
    else if (key == "lambda_ce") t.lambda_ce = to_double(key, v);
    else if (key == "lambda_aux") t.lambda_aux = to_double(key, v);
    else if (key == "batch") t.batch_size = to_uint(key, v);
    else if (key == "hidden") t.hidden = to_uint(key, v);
    else if (key == "delta") {
      t.delta_per_depth.clear();
      for (const auto& d : split_list(v)) t.delta_per_depth.push_back(to_uint(key, d));
    } else if (key == "v_init_scale") t.v_init_scale = to_double(key, v);
    else throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }

  if (c.taxonomy_path.empty() == c.shape.empty()) throw ConfigError("set exactly one of 'taxonomy' and 'shape'");
  if (c.data_path.empty() != c.test_path.empty()) throw ConfigError("'data' and 'test_data' go together");
  if (c.seeds.empty()) throw ConfigError("'seeds' is empty");
  if (c.modes.empty()) throw ConfigError("'modes' is empty");
  if (c.train.lambda_ce < 0 || c.train.lambda_aux < 0) throw ConfigError("loss weights must be >= 0");
  if (c.train.stage1.lr <= 0 || c.train.stage2.lr <= 0) throw ConfigError("learning rates must be positive");
  if (c.train.batch_size == 0) throw ConfigError("batch must be positive");
  if (c.train.hidden == 0) throw ConfigError("hidden must be positive");
  if (c.dims == 0 || c.per_leaf == 0 || c.test_per_leaf == 0) throw ConfigError("dataset sizes must be positive");
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), path.parent_path());
}

TaxonomyTree experiment_tree(const ExperimentConfig& config) {
  TaxonomyTree tree;
  if (!config.shape.empty()) {
    tree = make_balanced_tree(parse_shape(config.shape));
  } else {
    if (!fs::exists(config.taxonomy_path))
      throw ConfigError("taxonomy file " + config.taxonomy_path.string() + " not found");
    tree = load_taxonomy(config.taxonomy_path.string());
  }
  // expanding such a node leaves the label-set size unchanged
  for (NodeId n : tree.single_child_nodes())
    log_warning("node " + std::to_string(n) + " (" + tree.name(n) + ") has a single child");
  return tree;
}

Curriculum experiment_curriculum(const ExperimentConfig& config, const TaxonomyTree& tree, const ModeSpec& mode,
                                 std::uint64_t seed) {
  const std::uint64_t cseed = derive_seed(config.curriculum_seed, seed);
  if (!mode.flat_curriculum) {
    if (!is_taxonomic(config.traversal))
      throw ConfigError("mode " + mode.name + " needs a taxonomic traversal (bfs, dfs or random)");
    return generate_taxonomic(tree, config.traversal, cseed);
  }
  std::size_t group = config.group_size;
  if (group == 0) {
    for (NodeId p : tree.internal_nodes()) {
      const auto& ch = tree.children(p);
      if (!ch.empty() && tree.is_leaf(ch.front())) {
        group = ch.size();
        break;
      }
    }
  }
  return generate_flat(tree, mode.flat_policy, group, cseed);
}

std::vector<double> experiment_rates(const ExperimentConfig& config, const TaxonomyTree& tree) {
  if (!config.rates.empty()) return config.rates;
  return std::vector<double>(static_cast<std::size_t>(std::max(tree.height() - 1, 0)), 0.3);
}

std::vector<double> experiment_spreads(const ExperimentConfig& config, const TaxonomyTree& tree) {
  if (!config.spreads.empty()) return config.spreads;
  std::vector<double> s;
  double v = 4.0;
  for (int i = 0; i <= tree.height(); ++i, v /= 2.0) s.push_back(v);
  return s;
}

DataPair experiment_data(const ExperimentConfig& config, const TaxonomyTree& tree, std::uint64_t seed) {
  DataPair d;
  if (!config.data_path.empty()) {
    auto read = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      if (!in) throw ConfigError("cannot read dataset " + p.string());
      std::stringstream ss;
      ss << in.rdbuf();
      return parse_dataset(ss.str());
    };
    d.train = read(config.data_path);
    d.test = read(config.test_path);
    for (const auto* set : {&d.train, &d.test})
      for (NodeId y : set->labels)
        if (!tree.contains(y) || !tree.is_leaf(y))
          throw ConfigError("dataset label " + std::to_string(y) + " is not a leaf of the taxonomy");
    return d;
  }
  const auto spreads = experiment_spreads(config, tree);
  // Same class means for both splits; samples from disjoint streams.
  const auto means = synth_means(tree, config.dims, spreads, derive_seed(seed, 1));
  d.train = synth_sample(tree, means, config.per_leaf, spreads.back(), derive_seed(seed, 2));
  d.test = synth_sample(tree, means, config.test_per_leaf, spreads.back(), derive_seed(seed, 3));
  return d;
}

ArmResult run_arm(const ExperimentConfig& config, const TaxonomyTree& tree, const ModeSpec& mode,
                  std::uint64_t seed, const fs::path& out_dir) {
  const Curriculum curriculum = experiment_curriculum(config, tree, mode, seed);
  const DataPair data = experiment_data(config, tree, seed);
  const SampleAllocation alloc =
      (mode.flat_curriculum || tree.height() < 2)
          ? whole_leaf_allocation(data.train, tree)
          : split(data.train, tree, experiment_rates(config, tree), derive_seed(seed, 4));

  TrainConfig tc = config.train;
  tc.mode = mode.mode;
  tc.seed = derive_seed(seed, 5);
  IncrementalLearner learner(tree, curriculum, data.train.dim, tc);

  ArmResult r;
  r.mode = mode.name;
  r.seed = seed;
  r.history.n_coarse = curriculum.n_coarse;
  r.history.n_fine = curriculum.n_fine;
  const std::string stem = mode.name + "_s" + std::to_string(seed);
  std::string dumps;
  for (const Task& task : curriculum.tasks) {
    try {
      learner.train_task(task, data.train, alloc);
    } catch (const std::exception& e) {
      throw std::runtime_error(mode.name + " seed " + std::to_string(seed) + " task " +
                               std::to_string(task.index) + ": " + e.what());
    }
    const double acc = accuracy(learner.backbone(), learner.classifier(), tree, data.test);
    r.history.accuracies.push_back(acc);
    r.records.push_back({seed, mode.name, task.index, task.label_set.size(), acc});
    if (!out_dir.empty()) {
      dumps += inheritance_dump(learner.classifier());
      if (config.checkpoints)
        write_file(out_dir / "checkpoints" / (stem + "_t" + std::to_string(task.index) + ".json"),
                   save_checkpoint(learner));
    }
  }
  r.epochs = learner.epoch_log();
  if (!out_dir.empty()) {
    write_file(out_dir / "inheritance" / (stem + ".jsonl"), dumps);
    std::string log = "task,stage,epoch,loss\n";
    for (const auto& e : r.epochs)
      log += std::to_string(e.task) + "," + std::to_string(e.stage) + "," + std::to_string(e.epoch) + "," +
             fmt("%.9g", e.loss) + "\n";
    write_file(out_dir / "logs" / (stem + ".csv"), log);
  }
  return r;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const TaxonomyTree tree = experiment_tree(config);
  ExperimentResult res;
  for (const auto& name : config.modes) {
    const ModeSpec mode = parse_mode_spec(name);
    for (std::uint64_t seed : config.seeds) {
      res.arms.push_back(run_arm(config, tree, mode, seed, config.out_dir));
      const auto& recs = res.arms.back().records;
      res.records.insert(res.records.end(), recs.begin(), recs.end());
    }
  }
  write_file(config.out_dir / "metrics.csv", to_csv(res.records));
  write_file(config.out_dir / "accuracy.svg", accuracy_svg(res.records));
  write_file(config.out_dir / "summary.txt", summary_table(res.arms));
  return res;
}

std::string accuracy_svg(const std::vector<MetricRecord>& records) {
  // mean accuracy per (mode, task), modes in first-seen order
  std::vector<std::string> order;
  std::map<std::string, std::map<int, std::pair<double, int>>> acc;
  int max_task = 1;
  for (const auto& r : records) {
    if (!acc.count(r.mode)) order.push_back(r.mode);
    auto& cell = acc[r.mode][r.task];
    cell.first += r.accuracy;
    cell.second += 1;
    max_task = std::max(max_task, r.task);
  }
  const double w = 640, h = 400, left = 60, right = 150, top = 30, bottom = 50;
  const double pw = w - left - right, ph = h - top - bottom;
  auto x_of = [&](int t) { return left + (max_task == 1 ? pw / 2 : pw * (t - 1) / (max_task - 1)); };
  auto y_of = [&](double a) { return top + ph * (1.0 - a); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  s += "<line x1=\"" + fmt("%.1f", left) + "\" y1=\"" + fmt("%.1f", top + ph) + "\" x2=\"" + fmt("%.1f", left + pw) +
       "\" y2=\"" + fmt("%.1f", top + ph) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + fmt("%.1f", left) + "\" y1=\"" + fmt("%.1f", top) + "\" x2=\"" + fmt("%.1f", left) +
       "\" y2=\"" + fmt("%.1f", top + ph) + "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double a = k / 4.0;
    s += "<text x=\"" + fmt("%.1f", left - 8) + "\" y=\"" + fmt("%.1f", y_of(a) + 4) + "\" text-anchor=\"end\">" +
         fmt("%.2f", a) + "</text>\n";
  }
  for (int t = 1; t <= max_task; ++t) {
    if (max_task > 12 && t % 5 != 0 && t != 1) continue;
    s += "<text x=\"" + fmt("%.1f", x_of(t)) + "\" y=\"" + fmt("%.1f", top + ph + 18) +
         "\" text-anchor=\"middle\">" + std::to_string(t) + "</text>\n";
  }
  s += "<text x=\"" + fmt("%.1f", left + pw / 2) + "\" y=\"" + fmt("%.1f", h - 10) +
       "\" text-anchor=\"middle\">task</text>\n";
  s += "<text x=\"15\" y=\"" + fmt("%.1f", top + ph / 2) + "\" transform=\"rotate(-90 15 " +
       fmt("%.1f", top + ph / 2) + ")\" text-anchor=\"middle\">accuracy</text>\n";
  for (std::size_t m = 0; m < order.size(); ++m) {
    const char* color = colors[m % std::size(colors)];
    std::string pts;
    for (const auto& [t, cell] : acc[order[m]]) {
      if (!pts.empty()) pts += ' ';
      pts += fmt("%.1f", x_of(t)) + "," + fmt("%.1f", y_of(cell.first / cell.second));
    }
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    const double ly = top + 10 + 18.0 * static_cast<double>(m);
    s += "<line x1=\"" + fmt("%.1f", left + pw + 15) + "\" y1=\"" + fmt("%.1f", ly) + "\" x2=\"" +
         fmt("%.1f", left + pw + 35) + "\" y2=\"" + fmt("%.1f", ly) + "\" stroke=\"" + color +
         "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + fmt("%.1f", left + pw + 40) + "\" y=\"" + fmt("%.1f", ly + 4) + "\">" + order[m] + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string summary_table(const std::vector<ArmResult>& arms) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<Summary>> by_mode;
  for (const auto& a : arms) {
    if (!by_mode.count(a.mode)) order.push_back(a.mode);
    by_mode[a.mode].push_back(summarize(a.history));
  }
  auto stats = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    return fmt("%6.2f", 100 * mean) + " +- " + fmt("%5.2f", 100 * sd);
  };
  char head[128];
  std::snprintf(head, sizeof head, "%-16s %5s  %-16s %-16s\n", "mode", "seeds", "Acc@1 (%)", "AvgAcc (%)");
  std::string s = head;
  for (const auto& m : order) {
    std::vector<double> last, avg;
    for (const auto& x : by_mode[m]) {
      last.push_back(x.acc_last);
      avg.push_back(x.avg_acc);
    }
    char line[160];
    std::snprintf(line, sizeof line, "%-16s %5zu  %-16s %-16s\n", m.c_str(), last.size(), stats(last).c_str(),
                  stats(avg).c_str());
    s += line;
  }
  return s;
}

}  // namespace tcil
