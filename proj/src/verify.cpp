#include "tcil/verify.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "tcil/curriculum.hpp"
#include "tcil/datagen.hpp"
#include "tcil/trainer.hpp"

namespace tcil {

namespace {

struct Problem {
  TaxonomyTree tree = make_balanced_tree({3, 2, 2});
  LabeledDataset data;
  SampleAllocation alloc;
  SampleAllocation whole;

  explicit Problem(std::uint64_t seed) {
    data = synth_generate(tree, 20, 6, {3.0, 1.5, 0.75, 0.5}, seed);
    alloc = split(data, tree, {0.2, 0.3}, derive_seed(seed, 1));
    whole = whole_leaf_allocation(data, tree);
  }
};

TrainConfig small_config(Mode mode, GateStrategy gate, std::uint64_t seed) {
  TrainConfig c;
  c.mode = mode;
  c.gate = gate;
  c.epochs_stage1 = 3;
  c.epochs_stage2 = 2;
  c.stage1 = {0.05, {2}, 0.1};
  c.stage2 = {0.05, {}, 0.1};
  c.hidden = 8;
  c.delta_per_depth = {4, 3};
  c.buffer_capacity = 24;
  c.batch_size = 8;
  c.seed = seed;
  return c;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

CheckResult gradient_check(const Problem& p, const std::string& label, Mode mode, Traversal policy,
                           std::uint64_t seed) {
  const Curriculum cur = is_taxonomic(policy) ? generate_taxonomic(p.tree, policy, seed)
                                              : generate_flat(p.tree, policy, 2, seed);
  const SampleAllocation& alloc = is_taxonomic(policy) ? p.alloc : p.whole;
  IncrementalLearner learner(p.tree, cur, p.data.dim, small_config(mode, GateStrategy::Hierarchical, seed));
  double worst = 0.0;
  for (int t = 1; t <= 2; ++t) {
    const Task& task = cur.tasks[static_cast<std::size_t>(t - 1)];
    learner.begin_task(task);
    auto examples = task_dataset(alloc, task, learner.buffer(), p.tree, p.data);
    if (examples.size() > 12) examples.resize(12);
    learner.zero_grads();
    learner.total_loss(examples, p.data, true);
    auto params = learner.trainable_params(1);
    const FdReport rep = fd_check([&] { return learner.total_loss(examples, p.data).total; }, params, 1e-5, 40, seed);
    worst = std::max(worst, rep.max_rel_error);
    learner.zero_grads();
    learner.run_stage(1, task_dataset(alloc, task, learner.buffer(), p.tree, p.data), p.data);
    learner.end_task(p.data, alloc);
  }
  return {"gradient " + label, worst < 1e-5, "max rel error " + num(worst)};
}

}  // namespace

std::vector<CheckResult> run_verification(std::uint64_t seed) {
  std::vector<CheckResult> out;
  const Problem p(seed);

  out.push_back(gradient_check(p, "tcil", Mode::Tcil, Traversal::Bfs, seed));
  out.push_back(gradient_check(p, "tc", Mode::Tc, Traversal::Dfs, seed));
  out.push_back(gradient_check(p, "flat-taxonomic", Mode::FlatCil, Traversal::Bfs, seed));
  out.push_back(gradient_check(p, "flat-random", Mode::FlatCil, Traversal::FlatRandom, seed));

  // Split: per-node samples are pairwise disjoint and cover the data.
  {
    std::set<std::size_t> seen;
    std::size_t total = 0;
    for (const auto& [node, idx] : p.alloc.samples) {
      total += idx.size();
      seen.insert(idx.begin(), idx.end());
    }
    const bool ok = seen.size() == total && total == p.data.size();
    out.push_back({"split disjoint", ok, std::to_string(total) + " samples over " +
                                             std::to_string(p.alloc.samples.size()) + " nodes"});
  }

  for (GateStrategy gate : {GateStrategy::Hierarchical, GateStrategy::Orthogonal}) {
    const Curriculum cur = generate_taxonomic(p.tree, Traversal::Random, seed);
    IncrementalLearner learner(p.tree, cur, p.data.dim, small_config(Mode::Tcil, gate, seed));
    bool frozen_ok = true, gate_ok = true, sum_ok = true, block_ok = true;
    double worst_sum = 0.0;
    for (const Task& task : cur.tasks) {
      learner.begin_task(task);
      const auto before = learner.classifier().weights.value;
      const auto examples = task_dataset(p.alloc, task, learner.buffer(), p.tree, p.data);
      learner.run_stage(1, examples, p.data);
      if (task.index > 1) learner.run_stage(2, balanced_subsample(examples, seed), p.data);
      learner.end_task(p.data, p.alloc);
      const auto& c = learner.classifier();
      for (std::size_t k = 0; k < c.weights.value.size(); ++k) {
        if (c.frozen_mask[k] && c.weights.value.data[k] != before.data[k]) frozen_ok = false;
        if (!c.gate_mask[k] && c.weights.value.data[k] != 0.0) gate_ok = false;
      }
      for (std::size_t r = 0; r < c.rows(); ++r) {
        const auto rec = c.reconstruct_row(r);
        for (std::size_t j = 0; j < c.cols(); ++j) worst_sum = std::max(worst_sum, std::abs(rec[j] - c.weights.value(r, j)));
      }
    }
    sum_ok = worst_sum <= 1e-12;
    if (gate == GateStrategy::Orthogonal) {
      // Each row lives in the feature block of the task that created it.
      const auto& c = learner.classifier();
      for (std::size_t r = 0; r < c.rows(); ++r) {
        const int t = c.perturbation_log[r].back().task;
        std::size_t lo = 0;
        for (int i = 1; i < t; ++i) lo += c.segments[static_cast<std::size_t>(i - 1)];
        const std::size_t hi = lo + c.segments[static_cast<std::size_t>(t - 1)];
        for (std::size_t j = 0; j < c.cols(); ++j)
          if ((j < lo || j >= hi) && c.weights.value(r, j) != 0.0) block_ok = false;
      }
    }
    const std::string g = to_string(gate);
    out.push_back({"frozen entries unchanged (" + g + ")", frozen_ok, ""});
    out.push_back({"gated-off entries zero (" + g + ")", gate_ok, ""});
    out.push_back({"ancestor sums (" + g + ")", sum_ok, "max deviation " + num(worst_sum)});
    if (gate == GateStrategy::Orthogonal) out.push_back({"block diagonal (orthogonal)", block_ok, ""});
  }
  return out;
}

}  // namespace tcil
