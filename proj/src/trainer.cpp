#include "tcil/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "tcil/error.hpp"
#include "tcil/log.hpp"

namespace tcil {

namespace {

// Seed streams.
constexpr std::uint64_t kShuffleStream = 7;
constexpr std::uint64_t kExtractorStream = 100;
constexpr std::uint64_t kClassifierStream = 200;
constexpr std::uint64_t kAuxStream = 300;
constexpr std::uint64_t kBalanceStream = 400;
constexpr std::uint64_t kBufferStream = 500;

std::uint64_t stream(std::uint64_t base, int task) { return base + static_cast<std::uint64_t>(task); }

}  // namespace

std::string to_string(Mode m) {
  switch (m) {
    case Mode::FlatCil: return "flatcil";
    case Mode::Tc: return "tc";
    case Mode::Tcil: return "tcil";
  }
  return "?";
}

Mode parse_mode(std::string_view name) {
  for (Mode m : {Mode::FlatCil, Mode::Tc, Mode::Tcil})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown training mode '" + std::string(name) + "'");
}

double LrSchedule::at(int epoch) const {
  double lr_now = lr;
  for (int m : milestones)
    if (epoch >= m) lr_now *= decay;
  return lr_now;
}

int aux_label(int y, const Task& task) {
  const int first_new = static_cast<int>(task.old_count());
  return y >= first_new ? y - first_new + 1 : 0;
}

std::vector<TaskExample> balanced_subsample(std::span<const TaskExample> examples, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < examples.size(); ++i) by_label[examples[i].label].push_back(i);
  if (by_label.empty()) return {};
  std::size_t least = examples.size();
  for (const auto& [label, pos] : by_label) least = std::min(least, pos.size());

  std::vector<std::size_t> keep;
  for (auto& [label, pos] : by_label) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(label)));
    rng.shuffle(std::span<std::size_t>(pos));
    keep.insert(keep.end(), pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(least));
  }
  std::sort(keep.begin(), keep.end());
  std::vector<TaskExample> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(examples[i]);
  return out;
}

IncrementalLearner::IncrementalLearner(const TaxonomyTree& tree, const Curriculum& curriculum,
                                       std::size_t input_dim, TrainConfig config)
    : tree_(&tree),
      curriculum_(&curriculum),
      config_(std::move(config)),
      backbone_(input_dim, config_.hidden),
      rng_(derive_seed(config_.seed, kShuffleStream)) {
  if (config_.lambda_ce < 0 || config_.lambda_aux < 0) throw ConfigError("loss weights must be >= 0");
  if (config_.epochs_stage1 < 0 || config_.epochs_stage2 < 0) throw ConfigError("epochs must be >= 0");
  if (config_.batch_size == 0) throw ConfigError("batch size must be positive");
  if (config_.delta_per_depth.empty()) throw ConfigError("delta_per_depth is empty");
  for (std::size_t d : config_.delta_per_depth)
    if (d == 0) throw ConfigError("feature widths must be positive");

  const bool taxonomic = is_taxonomic(curriculum.policy);
  if (!taxonomic && config_.mode != Mode::FlatCil)
    throw ConfigError("mode " + to_string(config_.mode) + " needs a taxonomic curriculum");

  buffer_.capacity = config_.buffer_capacity;
  if (config_.mode == Mode::Tc) {
    // One extractor for the whole curriculum.
    const std::size_t delta = config_.delta_per_depth.front();
    backbone_.expand(delta, derive_seed(config_.seed, stream(kExtractorStream, 0)));
    classifier_ = initial_classifier(tree.root(), delta);
  } else if (taxonomic) {
    classifier_ = initial_classifier(tree.root(), 0);
  } else {
    classifier_ = empty_classifier(0);
  }
}

std::size_t IncrementalLearner::delta_for(const Task& task) const {
  if (task.new_classes.empty()) return config_.delta_per_depth.front();
  const int depth = tree_->depth(task.new_classes.front());
  const std::size_t k = static_cast<std::size_t>(std::max(depth, 1) - 1);
  return config_.delta_per_depth[std::min(k, config_.delta_per_depth.size() - 1)];
}

void IncrementalLearner::begin_task(const Task& task) {
  if (task.index != tasks_done_ + 1)
    throw std::logic_error("task " + std::to_string(task.index) + " out of order; expected " +
                           std::to_string(tasks_done_ + 1));
  if (task.new_classes.empty()) throw std::invalid_argument("task has no new classes");
  const int t = task.index;
  const InitOptions init{config_.v_init_scale, derive_seed(config_.seed, stream(kClassifierStream, t))};

  if (config_.mode == Mode::Tc) {
    if (task.is_flat()) throw ConfigError("tc mode needs a taxonomic curriculum");
    classifier_ = inherit_tc(classifier_, static_cast<std::size_t>(task.expanded_row), task.new_classes, t, init);
  } else {
    const std::size_t delta = delta_for(task);
    backbone_.expand(delta, derive_seed(config_.seed, stream(kExtractorStream, t)));
    if (config_.mode == Mode::Tcil) {
      if (task.is_flat()) throw ConfigError("tcil mode needs a taxonomic curriculum");
      const std::vector<bool> gate = make_gate(*curriculum_, *tree_, t, config_.gate);
      classifier_ = inherit_tcil(classifier_, static_cast<std::size_t>(task.expanded_row), task.new_classes,
                                 delta, gate, t, init);
    } else if (task.is_flat()) {
      classifier_ = inherit_cil(classifier_, task.new_classes, delta, t, init);
    } else {
      classifier_ = inherit_cil_taxonomic(classifier_, static_cast<std::size_t>(task.expanded_row),
                                          task.new_classes, delta, t, init);
    }
  }
  if (classifier_.row_labels != task.label_set)
    throw std::logic_error("classifier rows diverged from the label set at task " + std::to_string(t));
  if (classifier_.cols() != backbone_.dim()) throw std::logic_error("classifier width does not match backbone");

  aux_.reset();
  if (t > 1) {
    Rng rng(derive_seed(config_.seed, stream(kAuxStream, t)));
    const std::size_t last = backbone_.size() - 1;
    aux_.emplace(task.new_classes.size(), backbone_.extractor(last).delta(), rng);
  }
  task_ = task;
  frozen_cache_.clear();
}

IncrementalLearner::Forward IncrementalLearner::forward(std::size_t index, const LabeledDataset& data,
                                                        bool keep_caches) {
  const auto x = data.row(index);
  Forward out;
  out.f.assign(backbone_.dim(), 0.0);
  out.caches.resize(backbone_.size());

  std::size_t prefix = 0;
  while (prefix < backbone_.size() && backbone_.extractor(prefix).frozen()) ++prefix;
  std::size_t start = 0;
  if (cache_enabled_ && prefix > 0) {
    if (prefix != cache_prefix_) {
      frozen_cache_.clear();
      cache_prefix_ = prefix;
    }
    const std::size_t width = backbone_.offset(prefix);
    auto it = frozen_cache_.find(index);
    if (it == frozen_cache_.end()) {
      std::vector<double> head(width);
      for (std::size_t i = 0; i < prefix; ++i) {
        auto& e = backbone_.extractor(i);
        e.forward(x, std::span<double>(head).subspan(backbone_.offset(i), e.delta()));
      }
      it = frozen_cache_.emplace(index, std::move(head)).first;
    }
    std::copy(it->second.begin(), it->second.end(), out.f.begin());
    start = prefix;
  }
  for (std::size_t i = start; i < backbone_.size(); ++i) {
    auto& e = backbone_.extractor(i);
    auto slot = std::span<double>(out.f).subspan(backbone_.offset(i), e.delta());
    const bool keep = keep_caches && !e.frozen();
    e.forward(x, slot, keep ? &out.caches[i] : nullptr);
  }
  return out;
}

LossBreakdown IncrementalLearner::evaluate(std::span<const TaskExample> batch, const LabeledDataset& data,
                                           const LossWeights& weights, bool backward, int stage) {
  if (!task_) throw std::logic_error("no task in progress");
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const Task& task = *task_;
  const std::size_t rows = classifier_.rows();
  const std::size_t n_new = task.new_classes.size();
  const std::size_t first_new = task.old_count();
  const bool use_node = stage == 1 && weights.node != 0.0;
  const bool use_aux = stage == 1 && weights.aux != 0.0 && aux_.has_value();
  const double w_ce = stage == 1 ? weights.ce : 1.0;

  std::size_t n_current = 0;
  for (const auto& ex : batch) {
    if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= rows)
      throw std::out_of_range("label " + std::to_string(ex.label) + " outside the label set");
    if (ex.current) {
      if (static_cast<std::size_t>(ex.label) < first_new)
        throw std::invalid_argument("current-task example labeled with an old class");
      ++n_current;
    }
  }
  if (use_node && n_current == 0 && !cache_enabled_) log_warning("node loss over a batch without current-task examples");

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const double inv_cur = n_current ? 1.0 / static_cast<double>(n_current) : 0.0;
  const std::size_t last = backbone_.size() ? backbone_.size() - 1 : 0;
  const std::size_t aux_off = backbone_.size() ? backbone_.offset(last) : 0;

  LossBreakdown out;
  std::vector<double> logits(rows), dlogits(rows), df(backbone_.dim());
  std::vector<double> aux_logits, daux;
  if (use_aux) {
    aux_logits.resize(aux_->weights.value.rows);
    daux.resize(aux_logits.size());
  }

  for (const auto& ex : batch) {
    Forward fw = forward(ex.index, data, backward && stage == 1);
    affine_forward(fw.f, classifier_.weights, nullptr, logits);
    std::fill(dlogits.begin(), dlogits.end(), 0.0);
    const std::span<double> grad = backward ? std::span<double>(dlogits) : std::span<double>();
    const auto y = static_cast<std::size_t>(ex.label);

    out.ce += inv_b * softmax_ce(logits, y, grad, w_ce * inv_b);
    if (use_node && ex.current) {
      auto cur = std::span<const double>(logits).subspan(first_new, n_new);
      auto gcur = backward ? grad.subspan(first_new, n_new) : std::span<double>();
      out.node += inv_cur * softmax_ce(cur, y - first_new, gcur, weights.node * inv_cur);
    }
    std::fill(df.begin(), df.end(), 0.0);
    if (use_aux) {
      auto ft = std::span<const double>(fw.f).subspan(aux_off, backbone_.extractor(last).delta());
      affine_forward(ft, aux_->weights, nullptr, aux_logits);
      std::fill(daux.begin(), daux.end(), 0.0);
      const auto ya = static_cast<std::size_t>(aux_label(ex.label, task));
      out.aux += inv_b * softmax_ce(aux_logits, ya, backward ? std::span<double>(daux) : std::span<double>(),
                                    weights.aux * inv_b);
      if (backward)
        affine_backward(ft, daux, aux_->weights, nullptr, std::span<double>(df).subspan(aux_off, ft.size()));
    }
    if (!backward) continue;
    affine_backward(fw.f, dlogits, classifier_.weights, nullptr, stage == 1 ? std::span<double>(df) : std::span<double>());
    if (stage != 1) continue;
    for (std::size_t i = 0; i < backbone_.size(); ++i) {
      auto& e = backbone_.extractor(i);
      if (e.frozen()) continue;
      e.backward(data.row(ex.index), fw.caches[i],
                 std::span<const double>(df).subspan(backbone_.offset(i), e.delta()));
    }
  }
  out.total = stage == 1 ? weights.node * out.node + w_ce * out.ce + weights.aux * out.aux : out.ce;
  return out;
}

double IncrementalLearner::loss_ce(std::span<const TaskExample> batch, const LabeledDataset& data) {
  return evaluate(batch, data, {0.0, 1.0, 0.0}, false).ce;
}

double IncrementalLearner::loss_node(std::span<const TaskExample> batch, const LabeledDataset& data) {
  return evaluate(batch, data, {1.0, 0.0, 0.0}, false).node;
}

double IncrementalLearner::loss_aux(std::span<const TaskExample> batch, const LabeledDataset& data) {
  if (!aux_) return 0.0;
  return evaluate(batch, data, {0.0, 0.0, 1.0}, false).aux;
}

LossBreakdown IncrementalLearner::total_loss(std::span<const TaskExample> batch, const LabeledDataset& data,
                                             bool backward) {
  return evaluate(batch, data, {1.0, config_.lambda_ce, config_.lambda_aux}, backward);
}

std::vector<ParamBlock*> IncrementalLearner::trainable_params(int stage) {
  std::vector<ParamBlock*> out{&classifier_.weights};
  if (stage != 1) return out;
  for (std::size_t i = 0; i < backbone_.size(); ++i) {
    auto& e = backbone_.extractor(i);
    if (e.frozen()) continue;
    for (ParamBlock* p : e.params()) out.push_back(p);
  }
  if (aux_ && config_.lambda_aux != 0.0) out.push_back(&aux_->weights);
  return out;
}

void IncrementalLearner::zero_grads() {
  classifier_.weights.zero_grad();
  for (std::size_t i = 0; i < backbone_.size(); ++i)
    for (ParamBlock* p : backbone_.extractor(i).params()) p->zero_grad();
  if (aux_) aux_->weights.zero_grad();
}

void IncrementalLearner::run_stage(int stage, const std::vector<TaskExample>& examples,
                                   const LabeledDataset& data) {
  if (!task_) throw std::logic_error("no task in progress");
  if (examples.empty()) throw std::invalid_argument("empty task data");
  const int epochs = stage == 1 ? config_.epochs_stage1 : config_.epochs_stage2;
  const LrSchedule& schedule = stage == 1 ? config_.stage1 : config_.stage2;
  const LossWeights weights{1.0, config_.lambda_ce, config_.lambda_aux};

  // Stage 2 trains the classifier only.
  std::vector<bool> was_frozen;
  if (stage == 2) {
    for (std::size_t i = 0; i < backbone_.size(); ++i) {
      was_frozen.push_back(backbone_.extractor(i).frozen());
      backbone_.extractor(i).set_frozen(true);
    }
  }
  std::vector<ParamBlock*> params = trainable_params(stage);
  for (ParamBlock* p : params) {
    std::fill(p->velocity.data.begin(), p->velocity.data.end(), 0.0);
    p->zero_grad();
  }
  cache_enabled_ = true;

  std::vector<TaskExample> order = examples;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const SgdOptions opts{schedule.at(epoch), config_.momentum, config_.weight_decay};
    rng_.shuffle(std::span<TaskExample>(order));
    double sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
      const std::size_t n = std::min(config_.batch_size, order.size() - start);
      auto batch = std::span<const TaskExample>(order).subspan(start, n);
      const LossBreakdown l = evaluate(batch, data, weights, true, stage);
      sgd_step(params, opts);
      sum += l.total * static_cast<double>(n);
    }
    const double mean = sum / static_cast<double>(order.size());
    if (!std::isfinite(mean))
      throw std::runtime_error("training diverged at task " + std::to_string(task_->index) + " stage " +
                               std::to_string(stage) + " epoch " + std::to_string(epoch) +
                               " (non-finite loss); lower the learning rate");
    log_.push_back({task_->index, stage, epoch, mean});
  }

  cache_enabled_ = false;
  frozen_cache_.clear();
  for (std::size_t i = 0; i < was_frozen.size(); ++i) backbone_.extractor(i).set_frozen(was_frozen[i]);
}

void IncrementalLearner::end_task(const LabeledDataset& data, const SampleAllocation& allocation) {
  (void)data;
  if (!task_) throw std::logic_error("no task in progress");
  classifier_.finalize_task();
  aux_.reset();
  if (config_.buffer_capacity > 0) {
    std::map<NodeId, std::vector<std::size_t>> fresh;
    for (NodeId c : task_->new_classes) fresh[c] = allocation.samples.at(c);
    buffer_ = update_buffer(buffer_, fresh, config_.buffer_capacity,
                            derive_seed(config_.seed, stream(kBufferStream, task_->index)));
  }
  ++tasks_done_;
}

void IncrementalLearner::restore_position(int n) {
  if (n < 0 || n > curriculum_->n_tasks()) throw std::out_of_range("task position out of range");
  tasks_done_ = n;
  aux_.reset();
  frozen_cache_.clear();
  if (n > 0)
    task_ = curriculum_->tasks[static_cast<std::size_t>(n - 1)];
  else
    task_.reset();
}

void IncrementalLearner::train_task(const Task& task, const LabeledDataset& data,
                                    const SampleAllocation& allocation) {
  begin_task(task);
  const std::vector<TaskExample> examples = task_dataset(allocation, task, buffer_, *tree_, data);
  if (examples.empty()) throw std::invalid_argument("task " + std::to_string(task.index) + " has no data");
  run_stage(1, examples, data);
  if (task.index > 1 && config_.epochs_stage2 > 0)
    run_stage(2, balanced_subsample(examples, derive_seed(config_.seed, stream(kBalanceStream, task.index))),
              data);
  end_task(data, allocation);
}

}  // namespace tcil
