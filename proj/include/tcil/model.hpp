#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tcil/inheritance.hpp"
#include "tcil/numerics.hpp"

namespace tcil {

// One-hidden-layer MLP: d_in -> hidden (ReLU) -> delta.
class FeatureExtractor {
 public:
  struct Cache {
    std::vector<double> pre;
    std::vector<double> hidden;
  };

  FeatureExtractor(std::size_t d_in, std::size_t hidden, std::size_t delta, Rng& rng);

  std::size_t delta() const { return w2_.value.rows; }
  std::size_t input_dim() const { return w1_.value.cols; }
  bool frozen() const { return w1_.frozen; }
  void set_frozen(bool frozen);

  void forward(std::span<const double> x, std::span<double> out, Cache* cache = nullptr) const;
  // Accumulates parameter gradients for dL/dout; no-op when frozen.
  void backward(std::span<const double> x, const Cache& cache, std::span<const double> dout);

  std::vector<ParamBlock*> params() { return {&w1_, &b1_, &w2_, &b2_}; }
  std::vector<const ParamBlock*> params() const { return {&w1_, &b1_, &w2_, &b2_}; }

 private:
  ParamBlock w1_, b1_, w2_, b2_;
};

// Per-task extractors whose outputs are concatenated in task order.
class ExpandingBackbone {
 public:
  ExpandingBackbone(std::size_t d_in, std::size_t hidden) : d_in_(d_in), hidden_(hidden) {}

  // Freezes every existing extractor and appends a trainable one.
  void expand(std::size_t delta, std::uint64_t seed);

  std::size_t input_dim() const { return d_in_; }
  std::size_t hidden() const { return hidden_; }
  std::size_t dim() const;
  std::size_t size() const { return extractors_.size(); }
  std::size_t offset(std::size_t i) const;

  FeatureExtractor& extractor(std::size_t i) { return extractors_.at(i); }
  const FeatureExtractor& extractor(std::size_t i) const { return extractors_.at(i); }

  std::vector<double> features(std::span<const double> x) const;

 private:
  std::size_t d_in_;
  std::size_t hidden_;
  std::vector<FeatureExtractor> extractors_;
};

// Per-task auxiliary classifier over the newest extractor: row 0 stands for
// every old class, rows 1..n for the new classes.
struct AuxHead {
  ParamBlock weights;

  AuxHead(std::size_t n_new, std::size_t delta, Rng& rng);
};

// softmax(M f).
std::vector<double> posterior(const StructuredClassifier& cls, std::span<const double> f);

// Argmax of M f, ties to the lowest row.
std::size_t predict_row(const StructuredClassifier& cls, std::span<const double> f);

}  // namespace tcil
