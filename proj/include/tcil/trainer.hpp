#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tcil/curriculum.hpp"
#include "tcil/datagen.hpp"
#include "tcil/inheritance.hpp"
#include "tcil/model.hpp"
#include "tcil/taxonomy.hpp"

namespace tcil {

// FlatCil: unconstrained classifier over an expanding backbone (DER-style).
// Tc: taxonomic classifier over one shared extractor.
// Tcil: taxonomic classifier over an expanding backbone.
enum class Mode { FlatCil, Tc, Tcil };

std::string to_string(Mode m);
Mode parse_mode(std::string_view name);

// Step decay: lr * decay^(number of milestones <= epoch).
struct LrSchedule {
  double lr = 0.1;
  std::vector<int> milestones;
  double decay = 0.1;

  double at(int epoch) const;
};

struct TrainConfig {
  Mode mode = Mode::Tcil;
  GateStrategy gate = GateStrategy::Hierarchical;
  int epochs_stage1 = 40;
  int epochs_stage2 = 10;
  LrSchedule stage1{0.1, {25, 35}, 0.1};
  LrSchedule stage2{0.05, {}, 0.1};
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double lambda_ce = 1.0;
  double lambda_aux = 1.0;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  std::size_t hidden = 64;
  // delta for tasks whose new classes sit at depth d: delta_per_depth[d-1],
  // clamped to the last entry.
  std::vector<std::size_t> delta_per_depth{32};
  double v_init_scale = 1.0;
  std::size_t buffer_capacity = 200;
};

struct LossWeights {
  double node = 1.0;
  double ce = 1.0;
  double aux = 1.0;
};

struct LossBreakdown {
  double total = 0.0;
  double node = 0.0;
  double ce = 0.0;
  double aux = 0.0;
};

struct EpochLog {
  int task = 0;
  int stage = 0;
  int epoch = 0;
  double loss = 0.0;
};

// Aux label of a label-set row: 0 for old classes, 1..|C(N_t)| for new ones.
int aux_label(int y, const Task& task);

// Class-balanced subsample: every label is cut down to the smallest
// per-label count, keeping a seeded uniform subset.
std::vector<TaskExample> balanced_subsample(std::span<const TaskExample> examples, std::uint64_t seed);

// Owns the model state across a curriculum and runs the per-task cycle:
// expand/inherit, stage 1 (features + trainable classifier entries + aux
// head on D_t and the buffer), stage 2 (classifier only on a balanced
// subsample, t > 1), finalize, buffer refresh.
class IncrementalLearner {
 public:
  IncrementalLearner(const TaxonomyTree& tree, const Curriculum& curriculum, std::size_t input_dim,
                     TrainConfig config);

  // Full task cycle. Tasks must arrive in curriculum order.
  void train_task(const Task& task, const LabeledDataset& data, const SampleAllocation& allocation);

  // The pieces of train_task, exposed for tests and verification.
  void begin_task(const Task& task);
  void run_stage(int stage, const std::vector<TaskExample>& examples, const LabeledDataset& data);
  void end_task(const LabeledDataset& data, const SampleAllocation& allocation);

  // Mean losses over a batch; with backward, also accumulates gradients
  // into the trainable blocks of the given stage. Stage 2 uses plain CE.
  LossBreakdown evaluate(std::span<const TaskExample> batch, const LabeledDataset& data,
                         const LossWeights& weights, bool backward, int stage = 1);

  double loss_ce(std::span<const TaskExample> batch, const LabeledDataset& data);
  double loss_node(std::span<const TaskExample> batch, const LabeledDataset& data);
  double loss_aux(std::span<const TaskExample> batch, const LabeledDataset& data);
  LossBreakdown total_loss(std::span<const TaskExample> batch, const LabeledDataset& data,
                           bool backward = false);

  std::vector<ParamBlock*> trainable_params(int stage);
  void zero_grads();

  const TaxonomyTree& tree() const { return *tree_; }
  const Curriculum& curriculum() const { return *curriculum_; }
  const TrainConfig& config() const { return config_; }
  const ExpandingBackbone& backbone() const { return backbone_; }
  ExpandingBackbone& backbone() { return backbone_; }
  const StructuredClassifier& classifier() const { return classifier_; }
  StructuredClassifier& classifier() { return classifier_; }
  const RehearsalBuffer& buffer() const { return buffer_; }
  RehearsalBuffer& buffer() { return buffer_; }
  const std::optional<AuxHead>& aux_head() const { return aux_; }
  AuxHead* aux_head() { return aux_ ? &*aux_ : nullptr; }
  const std::optional<Task>& current_task() const { return task_; }
  int tasks_done() const { return tasks_done_; }
  // Checkpoint restore: marks `n` tasks as complete.
  void restore_position(int n);
  const std::vector<EpochLog>& epoch_log() const { return log_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

  // Feature width for a task (per-depth override).
  std::size_t delta_for(const Task& task) const;

 private:
  struct Forward {
    std::vector<double> f;
    std::vector<FeatureExtractor::Cache> caches;  // per extractor, trainable ones only
  };
  Forward forward(std::size_t index, const LabeledDataset& data, bool keep_caches);

  const TaxonomyTree* tree_;
  const Curriculum* curriculum_;
  TrainConfig config_;
  ExpandingBackbone backbone_;
  StructuredClassifier classifier_;
  RehearsalBuffer buffer_;
  std::optional<AuxHead> aux_;
  std::optional<Task> task_;
  int tasks_done_ = 0;
  Rng rng_;
  std::vector<EpochLog> log_;
  // Outputs of the leading frozen extractors, reused within a stage.
  bool cache_enabled_ = false;
  std::size_t cache_prefix_ = 0;
  std::unordered_map<std::size_t, std::vector<double>> frozen_cache_;
};

}  // namespace tcil
