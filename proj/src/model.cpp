#include "tcil/model.hpp"

#include <stdexcept>

namespace tcil {

FeatureExtractor::FeatureExtractor(std::size_t d_in, std::size_t hidden, std::size_t delta, Rng& rng)
    : w1_("extractor.w1", hidden, d_in),
      b1_("extractor.b1", hidden, 1),
      w2_("extractor.w2", delta, hidden),
      b2_("extractor.b2", delta, 1) {
  if (d_in == 0 || hidden == 0 || delta == 0) throw std::invalid_argument("extractor sizes must be positive");
  init_fan_in(w1_, d_in, rng);
  init_fan_in(w2_, hidden, rng);
}

void FeatureExtractor::set_frozen(bool frozen) {
  for (ParamBlock* p : params()) {
    p->frozen = frozen;
    p->zero_grad();
  }
}

void FeatureExtractor::forward(std::span<const double> x, std::span<double> out, Cache* cache) const {
  if (x.size() != input_dim()) throw std::invalid_argument("extractor input dimension mismatch");
  const std::size_t h = w1_.value.rows;
  std::vector<double> pre(h), hid(h);
  affine_forward(x, w1_, &b1_, pre);
  relu_forward(pre, hid);
  affine_forward(hid, w2_, &b2_, out);
  if (cache) {
    cache->pre = std::move(pre);
    cache->hidden = std::move(hid);
  }
}

void FeatureExtractor::backward(std::span<const double> x, const Cache& cache, std::span<const double> dout) {
  if (frozen()) return;
  const std::size_t h = w1_.value.rows;
  std::vector<double> dhid(h, 0.0), dpre(h, 0.0);
  affine_backward(cache.hidden, dout, w2_, &b2_, dhid);
  relu_backward(cache.pre, dhid, dpre);
  affine_backward(x, dpre, w1_, &b1_, {});
}

void ExpandingBackbone::expand(std::size_t delta, std::uint64_t seed) {
  if (delta == 0) throw std::invalid_argument("delta must be positive");
  for (auto& e : extractors_) e.set_frozen(true);
  Rng rng(seed);
  extractors_.emplace_back(d_in_, hidden_, delta, rng);
}

std::size_t ExpandingBackbone::dim() const {
  std::size_t d = 0;
  for (const auto& e : extractors_) d += e.delta();
  return d;
}

std::size_t ExpandingBackbone::offset(std::size_t i) const {
  std::size_t d = 0;
  for (std::size_t k = 0; k < i; ++k) d += extractors_.at(k).delta();
  return d;
}

std::vector<double> ExpandingBackbone::features(std::span<const double> x) const {
  if (x.size() != d_in_) throw std::invalid_argument("feature input dimension mismatch");
  std::vector<double> f(dim());
  std::size_t off = 0;
  for (const auto& e : extractors_) {
    e.forward(x, std::span<double>(f).subspan(off, e.delta()));
    off += e.delta();
  }
  return f;
}

AuxHead::AuxHead(std::size_t n_new, std::size_t delta, Rng& rng) : weights("aux", n_new + 1, delta) {
  init_fan_in(weights, delta, rng);
}

std::vector<double> posterior(const StructuredClassifier& cls, std::span<const double> f) {
  if (f.size() != cls.cols()) throw std::invalid_argument("feature size does not match classifier");
  std::vector<double> logits(cls.rows()), p(cls.rows());
  affine_forward(f, cls.weights, nullptr, logits);
  softmax(logits, p);
  return p;
}

std::size_t predict_row(const StructuredClassifier& cls, std::span<const double> f) {
  if (f.size() != cls.cols()) throw std::invalid_argument("feature size does not match classifier");
  std::vector<double> logits(cls.rows());
  affine_forward(f, cls.weights, nullptr, logits);
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best]) best = i;
  return best;
}

}  // namespace tcil
