#include "daal/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "daal/error.hpp"

namespace daal {

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw InputError("Mat: data length " + std::to_string(data_.size()) + " != " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vec matvec(const Mat& m, std::span<const double> x) {
  if (m.cols() != x.size()) {
    throw InputError("matvec: matrix has " + std::to_string(m.cols()) +
                     " columns but vector has length " + std::to_string(x.size()));
  }
  Vec y(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) y[i] = dot(m.row(i), x);
  return y;
}

Vec matvec_transposed(const Mat& m, std::span<const double> x) {
  if (m.rows() != x.size()) {
    throw InputError("matvec_transposed: matrix has " + std::to_string(m.rows()) +
                     " rows but vector has length " + std::to_string(x.size()));
  }
  Vec y(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) axpy(x[i], m.row(i), y);
  return y;
}

void add_outer(Mat& m, std::span<const double> a, std::span<const double> b, double scale) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = scale * a[i];
    if (ai == 0.0) continue;
    axpy(ai, b, m.row(i));
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double scale, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += scale * x[i];
}

Vec softmax(std::span<const double> x) {
  if (x.empty()) throw InputError("softmax: empty input");
  const double mx = *std::max_element(x.begin(), x.end());
  Vec out(x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - mx);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

double log_sum_exp(std::span<const double> x) {
  if (x.empty()) throw InputError("log_sum_exp: empty input");
  const double mx = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  for (double v : x) total += std::exp(v - mx);
  return mx + std::log(total);
}

std::uint64_t Rng::below(std::uint64_t n) noexcept {
  // Reject draws from the incomplete top bucket so the result is unbiased.
  for (;;) {
    const std::uint64_t x = next();
    const std::uint64_t r = x % n;
    if (x - r <= std::numeric_limits<std::uint64_t>::max() - (n - 1)) return r;
  }
}

double Rng::normal() noexcept {
  const double u1 = uniform_open();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::exponential(double rate) noexcept { return -std::log(uniform_open()) / rate; }

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) noexcept {
  Rng r(master ^ (tag * 0xD1B54A32D192ED03ULL));
  r.next();
  return r.next();
}

Mat glorot_init(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) throw InputError("glorot_init: dimensions must be positive");
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Mat m(rows, cols);
  for (double& v : m.values()) v = a * (2.0 * rng.uniform() - 1.0);
  return m;
}

}  // namespace daal
