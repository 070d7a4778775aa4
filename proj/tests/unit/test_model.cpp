#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <utility>

#include "tcil/model.hpp"

using namespace tcil;

TEST_CASE("backbone concatenates extractors in order") {
  ExpandingBackbone bb(4, 6);
  bb.expand(3, 1);
  CHECK(bb.dim() == 3);
  std::vector<double> x{0.5, -1, 2, 0.1};
  const auto f1 = bb.features(x);
  bb.expand(2, 2);
  CHECK(bb.dim() == 5);
  CHECK(bb.offset(1) == 3);
  const auto f2 = bb.features(x);
  CHECK(f2.size() == 5);
  CHECK(std::equal(f1.begin(), f1.end(), f2.begin()));
  CHECK(bb.extractor(0).frozen());
  CHECK_FALSE(bb.extractor(1).frozen());
  CHECK_THROWS(bb.features(std::vector<double>(3)));
  CHECK_THROWS(bb.expand(0, 3));
}

TEST_CASE("frozen extractors produce identical outputs after later expansion") {
  ExpandingBackbone bb(3, 5);
  bb.expand(2, 7);
  Rng rng(1);
  std::vector<std::vector<double>> probes(100, std::vector<double>(3));
  std::vector<std::vector<double>> before;
  for (auto& p : probes) {
    for (double& v : p) v = rng.normal();
    before.push_back(bb.features(p));
  }
  bb.expand(4, 8);
  // backward through the frozen extractor must not touch it
  FeatureExtractor::Cache cache;
  std::vector<double> out(2);
  bb.extractor(0).forward(probes[0], out, &cache);
  bb.extractor(0).backward(probes[0], cache, std::vector<double>{1, 1});
  for (const ParamBlock* p : std::as_const(bb.extractor(0)).params())
    CHECK(std::all_of(p->grad.data.begin(), p->grad.data.end(), [](double g) { return g == 0.0; }));
  for (std::size_t i = 0; i < probes.size(); ++i) {
    auto f = bb.features(probes[i]);
    CHECK(std::equal(before[i].begin(), before[i].end(), f.begin()));
  }
}

TEST_CASE("extractor backward matches central differences") {
  Rng rng(2);
  FeatureExtractor e(3, 4, 2, rng);
  std::vector<double> x{0.3, -0.2, 0.9}, c{1.5, -0.5};
  auto loss = [&] {
    std::vector<double> out(2);
    e.forward(x, out);
    return out[0] * c[0] + out[1] * c[1];
  };
  FeatureExtractor::Cache cache;
  std::vector<double> out(2);
  e.forward(x, out, &cache);
  e.backward(x, cache, c);
  auto params = e.params();
  CHECK(fd_check(loss, params).max_rel_error < 1e-6);
}

TEST_CASE("posterior") {
  auto c = initial_classifier(0, 2);
  c.weights = ParamBlock("m", 3, 2);
  c.row_labels = {1, 2, 3};
  auto p = posterior(c, std::vector<double>{0.4, -1});
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 3));

  StructuredClassifier two;
  two.weights = ParamBlock("m", 2, 2);
  two.weights.value.data = {1, 0, 0, 1};
  auto q = posterior(two, std::vector<double>{2, 0});
  CHECK(q[0] == doctest::Approx(0.8808).epsilon(1e-4));
  CHECK(q[1] == doctest::Approx(0.1192).epsilon(1e-3));
  CHECK(std::accumulate(q.begin(), q.end(), 0.0) == doctest::Approx(1.0));
  CHECK(predict_row(two, std::vector<double>{0, 0}) == 0);  // tie goes low
  CHECK_THROWS(posterior(two, std::vector<double>{1, 2, 3}));
}

TEST_CASE("aux head shape") {
  Rng rng(3);
  AuxHead h(5, 7, rng);
  CHECK(h.weights.value.rows == 6);
  CHECK(h.weights.value.cols == 7);
}
