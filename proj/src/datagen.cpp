#include "tcil/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tcil/error.hpp"
#include "tcil/log.hpp"
#include "tcil/random.hpp"

namespace tcil {

std::map<NodeId, std::size_t> LabeledDataset::per_class_count() const {
  std::map<NodeId, std::size_t> counts;
  for (NodeId y : labels) ++counts[y];
  return counts;
}

std::map<NodeId, std::vector<std::size_t>> LabeledDataset::indices_by_class() const {
  std::map<NodeId, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(i);
  return out;
}

namespace {

void check_labels(const LabeledDataset& data, const TaxonomyTree& tree) {
  for (NodeId y : data.labels)
    if (!tree.contains(y) || !tree.is_leaf(y))
      throw std::invalid_argument("dataset label " + std::to_string(y) + " is not a leaf");
}

}  // namespace

SampleAllocation split(const LabeledDataset& data, const TaxonomyTree& tree,
                       const std::vector<double>& rates, std::uint64_t seed) {
  if (tree.height() < 2) throw ConfigError("split needs a tree of depth >= 2");
  if (rates.size() != static_cast<std::size_t>(tree.height() - 1))
    throw ConfigError("expected " + std::to_string(tree.height() - 1) + " sample rates, got " +
                      std::to_string(rates.size()));
  double total = 0.0;
  for (double r : rates) {
    if (!(r > 0.0 && r < 1.0)) throw ConfigError("sample rates must lie in (0, 1)");
    total += r;
  }
  if (!(total < 1.0)) throw ConfigError("sample rates must sum to less than 1");
  check_labels(data, tree);

  SampleAllocation alloc;
  for (std::size_t n = 1; n < tree.size(); ++n) alloc.samples[static_cast<NodeId>(n)];

  auto by_class = data.indices_by_class();
  Rng rng(seed);
  for (NodeId leaf : tree.leaves()) {
    std::vector<std::size_t> pool = by_class[leaf];
    rng.shuffle(std::span<std::size_t>(pool));
    const double count = static_cast<double>(pool.size());
    std::size_t cursor = 0;
    for (NodeId a : tree.ancestors(leaf)) {
      const int d = tree.depth(a);
      if (d == 0) continue;
      // Tolerance absorbs representation error such as 0.3 * 500.
      const auto take = static_cast<std::size_t>(std::floor(rates[static_cast<std::size_t>(d - 1)] * count + 1e-9));
      if (cursor + take >= pool.size()) {
        cursor = pool.size();
        break;
      }
      auto& dest = alloc.samples[a];
      dest.insert(dest.end(), pool.begin() + static_cast<std::ptrdiff_t>(cursor),
                  pool.begin() + static_cast<std::ptrdiff_t>(cursor + take));
      cursor += take;
    }
    if (cursor >= pool.size())
      throw ConfigError("leaf class " + std::to_string(leaf) + " (" + std::to_string(pool.size()) +
                        " examples) is too small to keep residual data");
    alloc.samples[leaf].assign(pool.begin() + static_cast<std::ptrdiff_t>(cursor), pool.end());
  }
  for (auto& [node, idx] : alloc.samples) std::sort(idx.begin(), idx.end());
  return alloc;
}

SampleAllocation whole_leaf_allocation(const LabeledDataset& data, const TaxonomyTree& tree) {
  check_labels(data, tree);
  SampleAllocation alloc;
  for (std::size_t n = 1; n < tree.size(); ++n) alloc.samples[static_cast<NodeId>(n)];
  for (auto& [leaf, idx] : data.indices_by_class()) alloc.samples[leaf] = idx;
  return alloc;
}

std::size_t RehearsalBuffer::total() const {
  std::size_t n = 0;
  for (const auto& [k, v] : entries) n += v.size();
  return n;
}

RehearsalBuffer update_buffer(const RehearsalBuffer& buffer,
                              const std::map<NodeId, std::vector<std::size_t>>& new_class_samples,
                              std::size_t capacity, std::uint64_t seed) {
  if (capacity == 0) throw std::invalid_argument("buffer capacity must be positive");
  std::map<NodeId, std::vector<std::size_t>> pools = buffer.entries;
  for (const auto& [cls, idx] : new_class_samples) {
    auto& pool = pools[cls];
    pool.insert(pool.end(), idx.begin(), idx.end());
  }
  const std::size_t k = pools.size();
  RehearsalBuffer out;
  out.capacity = capacity;
  if (k == 0) return out;
  if (capacity < k)
    log_warning("buffer capacity " + std::to_string(capacity) + " is smaller than " +
                std::to_string(k) + " classes; some classes get no entries");
  const std::size_t base = capacity / k;
  const std::size_t extra = capacity % k;
  std::size_t rank = 0;
  for (auto& [cls, pool] : pools) {
    const std::size_t quota = base + (rank < extra ? 1 : 0);
    ++rank;
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(cls)));
    rng.shuffle(std::span<std::size_t>(pool));
    pool.resize(std::min(quota, pool.size()));
    std::sort(pool.begin(), pool.end());
    if (!pool.empty()) out.entries[cls] = std::move(pool);
  }
  return out;
}

std::vector<TaskExample> task_dataset(const SampleAllocation& allocation, const Task& task,
                                      const RehearsalBuffer& buffer, const TaxonomyTree& tree,
                                      const LabeledDataset& data) {
  std::vector<TaskExample> out;
  const std::size_t first_new = task.old_count();
  for (std::size_t j = 0; j < task.new_classes.size(); ++j) {
    auto it = allocation.samples.find(task.new_classes[j]);
    if (it == allocation.samples.end())
      throw std::invalid_argument("no allocation for class " + std::to_string(task.new_classes[j]));
    for (std::size_t idx : it->second)
      out.push_back({idx, static_cast<int>(first_new + j), true});
  }
  LabelMap map(tree, task.label_set);
  for (const auto& [cls, idx] : buffer.entries) {
    for (std::size_t i : idx) {
      const int row = map.row(data.labels.at(i));
      if (row >= 0) out.push_back({i, row, false});
    }
  }
  return out;
}

std::vector<std::vector<double>> synth_means(const TaxonomyTree& tree, std::size_t dims,
                                             const std::vector<double>& spreads, std::uint64_t seed) {
  if (dims == 0) throw std::invalid_argument("dims must be positive");
  if (spreads.size() != static_cast<std::size_t>(tree.height()) + 1)
    throw ConfigError("expected " + std::to_string(tree.height() + 1) + " spreads, got " +
                      std::to_string(spreads.size()));
  // The last entry is example noise and may be anything.
  for (std::size_t i = 1; i + 1 < spreads.size(); ++i)
    if (!(spreads[i] < spreads[i - 1])) {
      log_warning("synthetic spreads are not strictly decreasing with depth");
      break;
    }
  Rng rng(seed);
  std::vector<std::vector<double>> means(tree.size(), std::vector<double>(dims, 0.0));
  for (std::size_t n = 1; n < tree.size(); ++n) {
    const NodeId id = static_cast<NodeId>(n);
    const auto& parent = means[static_cast<std::size_t>(tree.parent(id))];
    const double s = spreads[static_cast<std::size_t>(tree.depth(id) - 1)];
    for (std::size_t k = 0; k < dims; ++k) means[n][k] = parent[k] + s * rng.normal();
  }
  return means;
}

LabeledDataset synth_sample(const TaxonomyTree& tree, const std::vector<std::vector<double>>& means,
                            std::size_t per_leaf, double noise, std::uint64_t seed) {
  if (per_leaf == 0) throw std::invalid_argument("per_leaf must be positive");
  if (means.size() != tree.size()) throw std::invalid_argument("means do not match tree");
  LabeledDataset data;
  data.dim = means.front().size();
  Rng rng(seed);
  for (NodeId leaf : tree.leaves()) {
    const auto& mu = means[static_cast<std::size_t>(leaf)];
    for (std::size_t i = 0; i < per_leaf; ++i) {
      for (double m : mu) data.features.push_back(m + noise * rng.normal());
      data.labels.push_back(leaf);
    }
  }
  return data;
}

LabeledDataset synth_generate(const TaxonomyTree& tree, std::size_t per_leaf, std::size_t dims,
                              const std::vector<double>& spreads, std::uint64_t seed) {
  auto means = synth_means(tree, dims, spreads, derive_seed(seed, 1));
  return synth_sample(tree, means, per_leaf, spreads.back(), derive_seed(seed, 2));
}

std::string serialize_dataset(const LabeledDataset& data) {
  std::string out = std::to_string(data.dim) + ' ' + std::to_string(data.size()) + '\n';
  char buf[40];
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += std::to_string(data.labels[i]);
    for (double v : data.row(i)) {
      std::snprintf(buf, sizeof(buf), " %.17g", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

LabeledDataset parse_dataset(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  LabeledDataset data;
  std::size_t expected = 0;
  bool header = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    if (!header) {
      long long dim = 0, count = 0;
      if (!(fields >> dim)) continue;
      if (!(fields >> count) || dim <= 0 || count < 0)
        throw ParseError("dataset line " + std::to_string(line_no) + ": bad header");
      data.dim = static_cast<std::size_t>(dim);
      expected = static_cast<std::size_t>(count);
      header = true;
      continue;
    }
    long long label = 0;
    if (!(fields >> label)) continue;
    data.labels.push_back(static_cast<NodeId>(label));
    for (std::size_t k = 0; k < data.dim; ++k) {
      std::string token;
      if (!(fields >> token))
        throw ParseError("dataset line " + std::to_string(line_no) + ": too few values");
      char* end = nullptr;
      double v = std::strtod(token.c_str(), &end);
      if (end != token.c_str() + token.size())
        throw ParseError("dataset line " + std::to_string(line_no) + ": bad value '" + token + "'");
      data.features.push_back(v);
    }
    std::string extra;
    if (fields >> extra)
      throw ParseError("dataset line " + std::to_string(line_no) + ": too many values");
  }
  if (!header) throw ParseError("dataset: missing header");
  if (data.size() != expected)
    throw ParseError("dataset: header promises " + std::to_string(expected) + " records, found " +
                     std::to_string(data.size()));
  return data;
}

std::string allocation_manifest(const SampleAllocation& allocation, const TaxonomyTree& tree) {
  nlohmann::json out = nlohmann::json::object();
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& [node, idx] : allocation.samples) {
    nodes.push_back({{"node", node},
                     {"depth", tree.depth(node)},
                     {"leaf", tree.is_leaf(node)},
                     {"indices", idx}});
  }
  out["nodes"] = std::move(nodes);
  return out.dump(1) + "\n";
}

std::string buffer_manifest(const RehearsalBuffer& buffer) {
  nlohmann::json out = {{"capacity", buffer.capacity}};
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [cls, idx] : buffer.entries) entries.push_back({{"class", cls}, {"indices", idx}});
  out["entries"] = std::move(entries);
  return out.dump(1) + "\n";
}

}  // namespace tcil
