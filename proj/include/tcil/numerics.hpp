#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tcil/random.hpp"

namespace tcil {

// Dense row-major matrix of doubles.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::size_t size() const { return data.size(); }

  static Mat identity(std::size_t n);
  bool operator==(const Mat&) const = default;
};

Mat matmul(const Mat& a, const Mat& b);

// A trainable tensor. Frozen blocks never receive gradient or updates;
// update_mask (empty means all ones) restricts updates entry-wise.
struct ParamBlock {
  std::string name;
  Mat value;
  Mat grad;
  Mat velocity;
  bool frozen = false;
  std::vector<std::uint8_t> update_mask;

  ParamBlock() = default;
  ParamBlock(std::string n, std::size_t rows, std::size_t cols)
      : name(std::move(n)), value(rows, cols), grad(rows, cols), velocity(rows, cols) {}

  bool trainable(std::size_t k) const {
    return !frozen && (update_mask.empty() || update_mask[k] != 0);
  }
  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

// Uniform in +-sqrt(6 / fan_in).
void init_fan_in(ParamBlock& block, std::size_t fan_in, Rng& rng);

// y = W x (+ b).
void affine_forward(std::span<const double> x, const ParamBlock& w, const ParamBlock* b,
                    std::span<double> y);

// Accumulates dL/dW and dL/db (skipped for frozen blocks) and, when dx is
// non-empty, adds W^T dy into dx.
void affine_backward(std::span<const double> x, std::span<const double> dy, ParamBlock& w,
                     ParamBlock* b, std::span<double> dx);

void relu_forward(std::span<const double> pre, std::span<double> out);
// Subgradient at 0 is 0.
void relu_backward(std::span<const double> pre, std::span<const double> dout, std::span<double> din);

void softmax(std::span<const double> logits, std::span<double> out);

// -log softmax(logits)[y], with max subtraction. When grad is non-empty,
// adds scale * (softmax - onehot(y)) into it.
double softmax_ce(std::span<const double> logits, std::size_t y, std::span<double> grad = {},
                  double scale = 1.0);

struct SgdOptions {
  double lr = 0.1;
  double momentum = 0.0;
  double weight_decay = 0.0;
};

// v <- momentum v + grad + wd value; value <- value - lr v, on trainable
// entries only. Gradients are zeroed afterwards.
void sgd_step(std::span<ParamBlock* const> params, const SgdOptions& opts);

struct FdReport {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  std::string worst_block;
  std::size_t worst_index = 0;
};

// Denominator floor for the relative error; keeps near-zero gradients from
// turning round-off into large ratios.
inline constexpr double kFdScaleFloor = 1e-2;

// Compares the analytic gradients already stored in params against central
// differences of loss() on trainable coordinates. max_coords limits the
// coordinates per block (0 = all), chosen with the given seed.
FdReport fd_check(const std::function<double()>& loss, std::span<ParamBlock* const> params,
                  double eps = 1e-5, std::size_t max_coords = 0, std::uint64_t seed = 0);

}  // namespace tcil
