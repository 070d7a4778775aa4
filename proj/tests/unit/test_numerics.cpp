#include <doctest.h>

#include <cmath>
#include <numeric>

#include "tcil/numerics.hpp"

using namespace tcil;

namespace {

ParamBlock random_block(const char* name, std::size_t r, std::size_t c, Rng& rng) {
  ParamBlock b(name, r, c);
  for (double& v : b.value.data) v = rng.uniform(-1, 1);
  return b;
}

// Hand-rolled central differences, independent of fd_check.
double central(const std::function<double()>& f, double& x, double h = 1e-6) {
  const double s = x;
  x = s + h;
  const double up = f();
  x = s - h;
  const double dn = f();
  x = s;
  return (up - dn) / (2 * h);
}

}  // namespace

TEST_CASE("affine with identity weights is the identity") {
  ParamBlock w("w", 3, 3), b("b", 3, 1);
  w.value = Mat::identity(3);
  std::vector<double> x{1.5, -2, 0.25}, y(3);
  affine_forward(x, w, &b, y);
  CHECK(y == x);
  std::vector<double> ones(3, 1.0);
  affine_backward(x, ones, w, &b, {});
  CHECK(b.grad.data == ones);
}

TEST_CASE("affine gradients match central differences") {
  Rng rng(1);
  auto w = random_block("w", 5, 3, rng);
  auto b = random_block("b", 5, 1, rng);
  std::vector<double> x{0.3, -0.7, 1.1}, c{1, -2, 0.5, 0.25, 3};
  auto f = [&] {
    std::vector<double> y(5);
    affine_forward(x, w, &b, y);
    return std::inner_product(y.begin(), y.end(), c.begin(), 0.0);
  };
  std::vector<double> dx(3, 0.0);
  affine_backward(x, c, w, &b, dx);
  for (std::size_t k = 0; k < w.value.size(); ++k) {
    const double n = central(f, w.value.data[k]);
    CHECK(std::abs(n - w.grad.data[k]) / std::max(std::abs(n), 1e-3) < 1e-6);
  }
  for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(central(f, b.value.data[k]) - b.grad.data[k]) < 1e-6);
  for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(central(f, x[k]) - dx[k]) < 1e-6);
}

TEST_CASE("softmax cross-entropy") {
  std::vector<double> z(4, 0.0);
  CHECK(softmax_ce(z, 2) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(softmax_ce(z, 2) == doctest::Approx(1.3862944).epsilon(1e-7));
  std::vector<double> big{0, 1e6, 0};
  CHECK(softmax_ce(big, 1) < 1e-12);

  Rng rng(2);
  std::vector<double> l(7);
  for (double& v : l) v = rng.uniform(-3, 3);
  std::vector<double> g(7, 0.0);
  softmax_ce(l, 4, g);
  for (std::size_t k = 0; k < 7; ++k) {
    const double n = central([&] { return softmax_ce(l, 4); }, l[k]);
    CHECK(std::abs(n - g[k]) < 1e-6);
  }
  CHECK_THROWS(softmax_ce(l, 7));

  std::vector<double> p(7), q(7);
  softmax(l, p);
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  for (double& v : l) v += 123.0;
  softmax(l, q);
  for (std::size_t k = 0; k < 7; ++k) CHECK(std::abs(p[k] - q[k]) < 1e-12);
}

TEST_CASE("relu subgradient at zero is zero") {
  std::vector<double> pre{-1, 0, 2}, out(3), din(3, 0.0), up{1, 1, 1};
  relu_forward(pre, out);
  CHECK(out == std::vector<double>{0, 0, 2});
  relu_backward(pre, up, din);
  CHECK(din == std::vector<double>{0, 0, 1});
}

TEST_CASE("sgd") {
  ParamBlock p("p", 1, 2);
  p.value.data = {1.0, 2.0};
  p.grad.data = {0.5, -1.0};
  std::vector<ParamBlock*> ps{&p};
  sgd_step(ps, {0.1, 0.0, 0.0});
  CHECK(p.value.data[0] == doctest::Approx(0.95));
  CHECK(p.value.data[1] == doctest::Approx(2.1));
  CHECK(p.grad.data == std::vector<double>{0, 0});

  // momentum 0.9, constant g, two steps: displacement lr g (1 + 1.9)
  ParamBlock m("m", 1, 1);
  std::vector<ParamBlock*> ms{&m};
  for (int i = 0; i < 2; ++i) {
    m.grad.data[0] = 2.0;
    sgd_step(ms, {0.1, 0.9, 0.0});
  }
  CHECK(m.value.data[0] == doctest::Approx(-0.1 * 2.0 * 2.9).epsilon(1e-12));

  ParamBlock f("f", 2, 2);
  f.value.data = {1, 2, 3, 4};
  f.grad.data = {9, 9, 9, 9};
  f.frozen = true;
  const auto before = f.value;
  std::vector<ParamBlock*> fs{&f};
  sgd_step(fs, {0.5, 0.9, 0.1});
  CHECK(f.value == before);

  ParamBlock u("u", 1, 2);
  u.update_mask = {1, 0};
  u.grad.data = {1, 1};
  std::vector<ParamBlock*> us{&u};
  sgd_step(us, {1.0, 0.0, 0.0});
  CHECK(u.value.data == std::vector<double>{-1, 0});
  CHECK_THROWS(sgd_step(us, {0.0, 0.0, 0.0}));
}

TEST_CASE("fd_check") {
  Rng rng(5);
  auto w = random_block("w", 3, 4, rng);
  std::vector<double> x{1, -1, 0.5, 2}, c{1, 2, 3};
  std::vector<ParamBlock*> ps{&w};
  auto linear = [&] {
    std::vector<double> y(3);
    affine_forward(x, w, nullptr, y);
    return std::inner_product(y.begin(), y.end(), c.begin(), 0.0);
  };
  affine_backward(x, c, w, nullptr, {});
  CHECK(fd_check(linear, ps) .max_rel_error < 1e-9);

  // two-layer ReLU MLP with a CE head
  auto w1 = random_block("w1", 6, 4, rng), b1 = random_block("b1", 6, 1, rng);
  auto w2 = random_block("w2", 3, 6, rng), b2 = random_block("b2", 3, 1, rng);
  std::vector<ParamBlock*> mlp{&w1, &b1, &w2, &b2};
  auto fwd = [&](bool grad) {
    std::vector<double> pre(6), h(6), z(3), dz(3, 0.0), dh(6, 0.0), dpre(6, 0.0);
    affine_forward(x, w1, &b1, pre);
    relu_forward(pre, h);
    affine_forward(h, w2, &b2, z);
    const double loss = softmax_ce(z, 1, grad ? std::span<double>(dz) : std::span<double>());
    if (grad) {
      affine_backward(h, dz, w2, &b2, dh);
      relu_backward(pre, dh, dpre);
      affine_backward(x, dpre, w1, &b1, {});
    }
    return loss;
  };
  fwd(true);
  CHECK(fd_check([&] { return fwd(false); }, mlp, 1e-5).max_rel_error < 1e-5);

  w2.grad.data[3] += 0.5;  // corrupted
  CHECK(fd_check([&] { return fwd(false); }, mlp, 1e-5).max_rel_error > 1e-2);
  CHECK_THROWS(fd_check(linear, ps, 0.1));
}
