#include "tcil/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tcil {

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul shape mismatch");
  Mat c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

void init_fan_in(ParamBlock& block, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  for (double& v : block.value.data) v = rng.uniform(-bound, bound);
}

void affine_forward(std::span<const double> x, const ParamBlock& w, const ParamBlock* b,
                    std::span<double> y) {
  const Mat& m = w.value;
  if (x.size() != m.cols || y.size() != m.rows || (b && b->value.size() != m.rows))
    throw std::invalid_argument("affine shape mismatch");
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* r = m.data.data() + i * m.cols;
    double acc = b ? b->value.data[i] : 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) acc += r[j] * x[j];
    y[i] = acc;
  }
}

void affine_backward(std::span<const double> x, std::span<const double> dy, ParamBlock& w,
                     ParamBlock* b, std::span<double> dx) {
  const std::size_t rows = w.value.rows;
  const std::size_t cols = w.value.cols;
  if (x.size() != cols || dy.size() != rows || (!dx.empty() && dx.size() != cols))
    throw std::invalid_argument("affine backward shape mismatch");
  for (std::size_t i = 0; i < rows; ++i) {
    const double g = dy[i];
    if (g == 0.0) continue;
    if (!w.frozen) {
      double* gr = w.grad.data.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) gr[j] += g * x[j];
    }
    if (!dx.empty()) {
      const double* r = w.value.data.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) dx[j] += g * r[j];
    }
  }
  if (b && !b->frozen)
    for (std::size_t i = 0; i < rows; ++i) b->grad.data[i] += dy[i];
}

void relu_forward(std::span<const double> pre, std::span<double> out) {
  for (std::size_t i = 0; i < pre.size(); ++i) out[i] = pre[i] > 0.0 ? pre[i] : 0.0;
}

void relu_backward(std::span<const double> pre, std::span<const double> dout, std::span<double> din) {
  for (std::size_t i = 0; i < pre.size(); ++i) din[i] += pre[i] > 0.0 ? dout[i] : 0.0;
}

void softmax(std::span<const double> logits, std::span<double> out) {
  if (logits.empty()) return;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    z += out[i];
  }
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] /= z;
}

double softmax_ce(std::span<const double> logits, std::size_t y, std::span<double> grad, double scale) {
  if (y >= logits.size()) throw std::out_of_range("class index out of range");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  const double log_z = std::log(z);
  if (!grad.empty()) {
    for (std::size_t i = 0; i < logits.size(); ++i) {
      const double p = std::exp(logits[i] - mx - log_z);
      grad[i] += scale * (p - (i == y ? 1.0 : 0.0));
    }
  }
  return log_z - (logits[y] - mx);
}

void sgd_step(std::span<ParamBlock* const> params, const SgdOptions& opts) {
  if (!(opts.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  for (ParamBlock* p : params) {
    if (p->frozen) {
      p->zero_grad();
      continue;
    }
    auto& value = p->value.data;
    auto& vel = p->velocity.data;
    const auto& grad = p->grad.data;
    const bool masked = !p->update_mask.empty();
    for (std::size_t k = 0; k < value.size(); ++k) {
      if (masked && p->update_mask[k] == 0) continue;
      vel[k] = opts.momentum * vel[k] + grad[k] + opts.weight_decay * value[k];
      value[k] -= opts.lr * vel[k];
    }
    p->zero_grad();
  }
}

FdReport fd_check(const std::function<double()>& loss, std::span<ParamBlock* const> params,
                  double eps, std::size_t max_coords, std::uint64_t seed) {
  if (!(eps > 0.0 && eps <= 1e-2)) throw std::invalid_argument("eps must lie in (0, 1e-2]");
  FdReport report;
  Rng rng(seed);
  for (ParamBlock* p : params) {
    if (p->frozen) continue;
    std::vector<std::size_t> coords;
    for (std::size_t k = 0; k < p->value.size(); ++k)
      if (p->trainable(k)) coords.push_back(k);
    if (max_coords > 0 && coords.size() > max_coords) {
      rng.shuffle(std::span<std::size_t>(coords));
      coords.resize(max_coords);
    }
    for (std::size_t k : coords) {
      const double saved = p->value.data[k];
      p->value.data[k] = saved + eps;
      const double up = loss();
      p->value.data[k] = saved - eps;
      const double down = loss();
      p->value.data[k] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p->grad.data[k];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), kFdScaleFloor});
      const double err = std::abs(numeric - analytic) / denom;
      ++report.coords_checked;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_block = p->name;
        report.worst_index = k;
      }
    }
  }
  return report;
}

}  // namespace tcil
