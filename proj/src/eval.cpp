#include "tcil/eval.hpp"

#include <cstdio>
#include <stdexcept>

namespace tcil {

NodeId map_to_label_set(const TaxonomyTree& tree, NodeId leaf, const std::vector<NodeId>& label_set) {
  NodeId found = kNoNode;
  for (NodeId n : label_set) {
    if (n != leaf && !tree.is_ancestor(n, leaf)) continue;
    if (found != kNoNode) throw std::logic_error("label set is not an antichain");
    found = n;
  }
  return found;
}

double accuracy(const ExpandingBackbone& backbone, const StructuredClassifier& cls, const TaxonomyTree& tree,
                const LabeledDataset& test) {
  if (test.size() == 0) throw std::invalid_argument("empty test set");
  const LabelMap map(tree, cls.row_labels);
  std::size_t seen = 0, correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const int target = map.row(test.labels[i]);
    if (target < 0) continue;
    ++seen;
    const auto f = backbone.features(test.row(i));
    if (predict_row(cls, f) == static_cast<std::size_t>(target)) ++correct;
  }
  if (seen == 0) throw std::invalid_argument("no test example belongs to a known class");
  return static_cast<double>(correct) / static_cast<double>(seen);
}

Summary summarize(const MetricsHistory& history) {
  if (history.n_fine <= 0) throw std::invalid_argument("history has no fine tasks");
  if (!history.complete())
    throw std::invalid_argument("history has " + std::to_string(history.accuracies.size()) + " of " +
                                std::to_string(history.n_coarse + history.n_fine) + " tasks");
  double sum = 0.0;
  for (int i = history.n_coarse; i < history.n_coarse + history.n_fine; ++i)
    sum += history.accuracies[static_cast<std::size_t>(i)];
  return {history.accuracies.back(), sum / history.n_fine};
}

std::string csv_row(const MetricRecord& r) {
  char acc[32];
  std::snprintf(acc, sizeof acc, "%.6f", r.accuracy);
  return std::to_string(r.seed) + "," + r.mode + "," + std::to_string(r.task) + "," +
         std::to_string(r.n_classes) + "," + acc;
}

std::string to_csv(const std::vector<MetricRecord>& records) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : records) out += csv_row(r) + "\n";
  return out;
}

}  // namespace tcil
