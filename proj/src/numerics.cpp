#include "demandcast/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace demandcast {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), entries_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (entries_.size() != rows * cols) {
    throw ShapeError("matrix " + shape() + " given " + std::to_string(entries_.size()) +
                     " entries");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> entries;
  entries.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged initializer rows");
    entries.insert(entries.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(entries));
}

Matrix Matrix::column(std::span<const double> values) {
  return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

std::vector<double> Matrix::column_values(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::row_block(std::size_t first, std::size_t count) const {
  if (first + count > rows_) {
    throw ShapeError("row block [" + std::to_string(first) + ", " +
                     std::to_string(first + count) + ") outside " + shape());
  }
  const auto begin = entries_.begin() + static_cast<std::ptrdiff_t>(first * cols_);
  return Matrix(count, cols_,
                std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(count * cols_)));
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(entries_.begin(), entries_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + a.shape() + " times " + b.shape());
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

namespace {

constexpr int kMaxJacobiSweeps = 80;

// Column-major working copy keeps the column rotations contiguous.
struct ColumnStore {
  std::size_t rows;
  std::size_t cols;
  std::vector<double> data;
  double* col(std::size_t c) { return data.data() + c * rows; }
};

}  // namespace

Svd svd_jacobi(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (m == 0 || n == 0) throw ShapeError("svd of empty matrix " + a.shape());
  if (m < n) throw ShapeError("svd_jacobi needs rows >= cols, got " + a.shape());
  if (!a.all_finite()) throw std::invalid_argument("svd of matrix with non-finite entries");

  ColumnStore u{m, n, std::vector<double>(m * n)};
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) u.data[c * m + r] = a(r, c);
  ColumnStore v{n, n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) v.data[i * n + i] = 1.0;

  const double eps = std::numeric_limits<double>::epsilon();
  bool converged = false;
  for (int sweep = 0; sweep < kMaxJacobiSweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double* up = u.col(p);
        double* uq = u.col(q);
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += up[i] * up[i];
          beta += uq[i] * uq[i];
          gamma += up[i] * uq[i];
        }
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double x = up[i];
          const double y = uq[i];
          up[i] = c * x - s * y;
          uq[i] = s * x + c * y;
        }
        double* vp = v.col(p);
        double* vq = v.col(q);
        for (std::size_t i = 0; i < n; ++i) {
          const double x = vp[i];
          const double y = vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
      }
    }
  }

  std::vector<double> sigma(n);
  for (std::size_t c = 0; c < n; ++c) sigma[c] = norm2({u.col(c), m});

  if (!converged) {
    const auto [lo, hi] = std::minmax_element(sigma.begin(), sigma.end());
    std::ostringstream msg;
    msg << "one-sided Jacobi SVD did not converge in " << kMaxJacobiSweeps
        << " sweeps on " << a.shape() << " matrix (condition estimate "
        << (*lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity()) << ")";
    throw ConvergenceError(msg.str());
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  Svd out{Matrix(m, n), std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t c = order[k];
    out.singular[k] = sigma[c];
    const double* uc = u.col(c);
    for (std::size_t i = 0; i < m; ++i) out.u(i, k) = sigma[c] > 0.0 ? uc[i] / sigma[c] : 0.0;
    const double* vc = v.col(c);
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = vc[i];
  }
  return out;
}

Matrix pseudo_inverse(const Matrix& a, double rcond) {
  if (a.empty()) throw ShapeError("pseudo_inverse of empty matrix");
  if (!(rcond > 0.0 && rcond < 1.0)) {
    throw std::invalid_argument("pseudo_inverse: rcond must lie in (0, 1)");
  }
  if (a.rows() < a.cols()) return pseudo_inverse(a.transposed(), rcond).transposed();

  const Svd svd = svd_jacobi(a);
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  const double cutoff = rcond * svd.singular.front();
  // pinv = V * diag(1/s) * U^T
  Matrix out(n, m);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = svd.singular[k];
    if (s <= cutoff || s == 0.0) continue;
    const double inv = 1.0 / s;
    for (std::size_t i = 0; i < n; ++i) {
      const double vik = svd.v(i, k) * inv;
      if (vik == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < m; ++j) out_row[j] += vik * svd.u(j, k);
    }
  }
  return out;
}

Matrix solve_least_squares(const Matrix& a, const Matrix& b, double rcond) {
  if (a.rows() != b.rows()) {
    throw ShapeError("solve_least_squares: " + a.shape() + " against rhs " + b.shape());
  }
  return matmul(pseudo_inverse(a, rcond), b);
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double x, y, s;
  do {
    x = 2.0 * uniform() - 1.0;
    y = 2.0 * uniform() - 1.0;
    s = x * x + y * y;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = y * scale;
  has_spare_ = true;
  return x * scale;
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::index on empty range");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw;
  do {
    draw = engine_();
  } while (draw >= limit);
  return static_cast<std::size_t>(draw % bound);
}

std::vector<std::size_t> Rng::sample_distinct(std::size_t n, std::size_t count) {
  if (count > n) throw std::invalid_argument("sample_distinct: count exceeds population");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) std::swap(pool[i], pool[i + index(n - i)]);
  pool.resize(count);
  return pool;
}

Rng Rng::split(std::uint64_t stream) { return Rng(derive_seed(next_u64(), stream)); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace demandcast
