#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace daal {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Mat identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// y = m x. Throws InputError when m.cols() != x.size().
Vec matvec(const Mat& m, std::span<const double> x);

/// y = m^T x. Throws InputError when m.rows() != x.size().
Vec matvec_transposed(const Mat& m, std::span<const double> x);

/// m += scale * a b^T
void add_outer(Mat& m, std::span<const double> a, std::span<const double> b, double scale = 1.0);

double dot(std::span<const double> a, std::span<const double> b);

/// y += scale * x
void axpy(double scale, std::span<const double> x, std::span<double> y);

/// Max-shifted softmax. Throws InputError on empty input.
Vec softmax(std::span<const double> x);

/// Max-shifted log(sum(exp(x))).
double log_sum_exp(std::span<const double> x);

/// splitmix64 generator. Streams depend only on the seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state() const noexcept { return state_; }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  /// Uniform in (0, 1]; safe as a log argument.
  double uniform_open() noexcept { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;
  /// Standard normal via Box-Muller; consumes two draws.
  double normal() noexcept;
  /// Exponential with the given rate; consumes one draw.
  double exponential(double rate) noexcept;

 private:
  std::uint64_t state_;
};

/// Derives an independent seed from a master seed and a stream tag.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) noexcept;

/// Fisher-Yates shuffle driven by Rng.
template <class T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

/// Glorot-uniform: entries uniform in [-a, a], a = sqrt(6 / (rows + cols)),
/// drawn in row-major order.
Mat glorot_init(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace daal
