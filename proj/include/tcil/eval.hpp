#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tcil/datagen.hpp"
#include "tcil/inheritance.hpp"
#include "tcil/model.hpp"
#include "tcil/taxonomy.hpp"

namespace tcil {

// The node of label_set that is `leaf` or one of its ancestors. The label
// set must cover every leaf exactly once.
NodeId map_to_label_set(const TaxonomyTree& tree, NodeId leaf, const std::vector<NodeId>& label_set);

// Fraction of examples whose predicted row is the label-set node covering
// their leaf. Examples with no covering node (flat curricula: classes not
// seen yet) are skipped.
double accuracy(const ExpandingBackbone& backbone, const StructuredClassifier& cls, const TaxonomyTree& tree,
                const LabeledDataset& test);

struct MetricsHistory {
  std::vector<double> accuracies;  // A_1 .. A_t
  int n_coarse = 0;
  int n_fine = 0;

  bool complete() const { return static_cast<int>(accuracies.size()) == n_coarse + n_fine; }
};

struct Summary {
  double acc_last = 0.0;  // Acc@1
  double avg_acc = 0.0;   // mean over the fine tasks
};

Summary summarize(const MetricsHistory& history);

struct MetricRecord {
  std::uint64_t seed = 0;
  std::string mode;
  int task = 0;
  std::size_t n_classes = 0;
  double accuracy = 0.0;
};

inline constexpr const char* kCsvHeader = "seed,mode,task,n_classes,accuracy";

std::string csv_row(const MetricRecord& r);
std::string to_csv(const std::vector<MetricRecord>& records);

}  // namespace tcil
