#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace demandcast {

/// Raised when operand shapes do not conform.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative decomposition fails to converge.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  /// n x 1 matrix holding `values`.
  static Matrix column(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  double operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return entries_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {entries_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {entries_.data() + r * cols_, cols_}; }
  std::span<const double> entries() const noexcept { return entries_; }
  std::span<double> entries() noexcept { return entries_; }

  std::vector<double> column_values(std::size_t c) const;
  Matrix transposed() const;
  /// Rows [first, first + count).
  Matrix row_block(std::size_t first, std::size_t count) const;
  bool all_finite() const noexcept;
  std::string shape() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

Matrix matmul(const Matrix& a, const Matrix& b);

/// Thin singular value decomposition a = u * diag(s) * v^T for rows >= cols.
struct Svd {
  Matrix u;                       // rows x cols, orthonormal columns
  std::vector<double> singular;   // cols entries, descending
  Matrix v;                       // cols x cols, orthogonal
};

/// One-sided Jacobi SVD. Requires a.rows() >= a.cols().
Svd svd_jacobi(const Matrix& a);

inline constexpr double kDefaultRcond = 1e-12;

/// Moore-Penrose pseudo-inverse; singular values below rcond * max are dropped.
Matrix pseudo_inverse(const Matrix& a, double rcond = kDefaultRcond);

/// Minimum-norm x minimizing ||a x - b||_2.
Matrix solve_least_squares(const Matrix& a, const Matrix& b, double rcond = kDefaultRcond);

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);

/// Seeded generator: 64-bit Mersenne Twister (std::mt19937_64, fully
/// specified by the standard) with uniform and normal draws derived from its
/// raw output in a platform-independent way, so streams replay bit-identically.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via the Marsaglia polar method.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Uniform integer in [0, n); n > 0.
  std::size_t index(std::size_t n);
  /// `count` distinct indices drawn from [0, n), in draw order.
  std::vector<std::size_t> sample_distinct(std::size_t n, std::size_t count);
  /// Generator for an independent sub-stream (e.g. one per sweep entry).
  Rng split(std::uint64_t stream);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Mixes a seed with a stream id (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace demandcast
