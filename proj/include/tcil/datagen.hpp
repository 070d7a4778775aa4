#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tcil/curriculum.hpp"
#include "tcil/taxonomy.hpp"

namespace tcil {

// Examples labeled with leaf classes; features are stored row-major.
struct LabeledDataset {
  std::size_t dim = 0;
  std::vector<double> features;
  std::vector<NodeId> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * dim, dim};
  }
  std::map<NodeId, std::size_t> per_class_count() const;
  std::map<NodeId, std::vector<std::size_t>> indices_by_class() const;
};

// Disjoint per-node samples S_n. Every non-root node owns a sample; a
// leaf's sample is its residual data after all ancestor draws.
struct SampleAllocation {
  std::map<NodeId, std::vector<std::size_t>> samples;

  const std::vector<std::size_t>& residual(NodeId leaf) const { return samples.at(leaf); }
};

// Splits each leaf class's examples top-down: the depth-d ancestor takes
// floor(rates[d-1] * c_y) examples of leaf y, drawn uniformly without
// replacement; the leaf keeps the rest. Requires rates in (0,1), sum < 1,
// and one rate per internal depth (tree height - 1).
SampleAllocation split(const LabeledDataset& data, const TaxonomyTree& tree,
                       const std::vector<double>& rates, std::uint64_t seed);

// Allocation without coarse samples: every leaf keeps all of its data.
SampleAllocation whole_leaf_allocation(const LabeledDataset& data, const TaxonomyTree& tree);

struct RehearsalBuffer {
  std::size_t capacity = 0;
  // Keyed by the class the examples were stored for; may be a coarse class
  // that has since been expanded.
  std::map<NodeId, std::vector<std::size_t>> entries;

  std::size_t total() const;
};

// Refills the buffer over every class seen so far (existing keys plus the
// new classes). Quotas are capacity / K with the remainder going to the
// lowest ids; each class keeps a seeded uniform subset of its pool.
RehearsalBuffer update_buffer(const RehearsalBuffer& buffer,
                              const std::map<NodeId, std::vector<std::size_t>>& new_class_samples,
                              std::size_t capacity, std::uint64_t seed);

struct TaskExample {
  std::size_t index = 0;  // into the LabeledDataset
  int label = 0;          // row in the task's label set
  bool current = true;    // drawn from D_t rather than the buffer
};

// D_t (samples of the new classes, labeled by their node) followed by the
// buffer entries, each labeled with the label-set row covering its leaf.
std::vector<TaskExample> task_dataset(const SampleAllocation& allocation, const Task& task,
                                      const RehearsalBuffer& buffer, const TaxonomyTree& tree,
                                      const LabeledDataset& data);

// Hierarchical Gaussian class means: the root sits at 0 and each child is
// offset from its parent by N(0, spreads[depth-1]^2 I). spreads has
// height + 1 entries; the last is the per-example noise level.
std::vector<std::vector<double>> synth_means(const TaxonomyTree& tree, std::size_t dims,
                                             const std::vector<double>& spreads, std::uint64_t seed);

LabeledDataset synth_sample(const TaxonomyTree& tree, const std::vector<std::vector<double>>& means,
                            std::size_t per_leaf, double noise, std::uint64_t seed);

LabeledDataset synth_generate(const TaxonomyTree& tree, std::size_t per_leaf, std::size_t dims,
                              const std::vector<double>& spreads, std::uint64_t seed);

// Dataset text format:
//
//   <d_in> <count>
//   <leaf-id> <x_1> ... <x_d_in>      (count lines)
//
// '#' starts a comment. Values are written with 17 significant digits.
std::string serialize_dataset(const LabeledDataset& data);
LabeledDataset parse_dataset(std::string_view text);

// Index-list manifests for audits (JSON).
std::string allocation_manifest(const SampleAllocation& allocation, const TaxonomyTree& tree);
std::string buffer_manifest(const RehearsalBuffer& buffer);

}  // namespace tcil
