#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "partfilter/error.hpp"
#include "partfilter/numeric.hpp"

namespace partfilter {

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// Sparse nonnegative matrix in compressed-row form.
///
/// Entries are kept in sorted (row, col) order and every stored value is
/// strictly positive, so the stored pattern is exactly the support. Products
/// go through a dense row accumulator, which is the dense fallback for small
/// state spaces and stays linear in the output pattern for large ones.
class NonnegMatrix {
 public:
  NonnegMatrix() = default;
  NonnegMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

  /// Builds from (i, j, v) triplets. Zero values are dropped; negative,
  /// non-finite, out-of-range and duplicate entries are rejected.
  static NonnegMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries) {
    for (const auto& t : entries) {
      if (t.row >= rows || t.col >= cols)
        throw InvariantError("matrix indices in range",
                             "(" + std::to_string(t.row) + "," + std::to_string(t.col) + ") outside " +
                                 std::to_string(rows) + "x" + std::to_string(cols));
      if (!std::isfinite(t.value) || t.value < 0.0)
        throw InvariantError("matrix entries nonnegative",
                             "(" + std::to_string(t.row) + "," + std::to_string(t.col) + ") = " + format_roundtrip(t.value));
    }
    std::sort(entries.begin(), entries.end(),
              [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
    for (std::size_t k = 1; k < entries.size(); ++k)
      if (entries[k].row == entries[k - 1].row && entries[k].col == entries[k - 1].col)
        throw InvariantError("no duplicate matrix entries",
                             "(" + std::to_string(entries[k].row) + "," + std::to_string(entries[k].col) + ")");
    NonnegMatrix m(rows, cols);
    for (const auto& t : entries) {
      if (t.value == 0.0) continue;
      m.col_idx_.push_back(t.col);
      m.values_.push_back(t.value);
      ++m.row_ptr_[t.row + 1];
    }
    for (std::size_t i = 0; i < rows; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];
    return m;
  }

  /// Row-major dense input.
  static NonnegMatrix from_dense(std::size_t rows, std::size_t cols, std::span<const double> data) {
    if (data.size() != rows * cols) throw InvariantError("dense data matches dimensions", "");
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j)
        if (data[i * cols + j] != 0.0) t.push_back({i, j, data[i * cols + j]});
    return from_triplets(rows, cols, std::move(t));
  }

  static NonnegMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.front().size() : 0;
    std::vector<double> flat;
    for (const auto& row : rows) {
      if (row.size() != c) throw InvariantError("rectangular matrix", "ragged rows");
      flat.insert(flat.end(), row.begin(), row.end());
    }
    return from_dense(r, c, flat);
  }

  static NonnegMatrix identity(std::size_t n) {
    NonnegMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      m.col_idx_.push_back(i);
      m.values_.push_back(1.0);
      m.row_ptr_[i + 1] = i + 1;
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }
  bool is_zero() const noexcept { return values_.empty(); }

  std::span<const std::size_t> row_cols(std::size_t i) const noexcept {
    return {col_idx_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const double> row_values(std::size_t i) const noexcept {
    return {values_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }

  double at(std::size_t i, std::size_t j) const noexcept {
    auto cols = row_cols(i);
    auto it = std::lower_bound(cols.begin(), cols.end(), j);
    if (it == cols.end() || *it != j) return 0.0;
    return values_[row_ptr_[i] + static_cast<std::size_t>(it - cols.begin())];
  }

  double row_sum(std::size_t i) const noexcept {
    KahanSum s;
    for (double v : row_values(i)) s += v;
    return s.value();
  }

  std::vector<Triplet> triplets() const {
    std::vector<Triplet> out;
    out.reserve(nnz());
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) out.push_back({i, col_idx_[k], values_[k]});
    return out;
  }

  std::vector<double> to_dense() const {
    std::vector<double> d(rows_ * cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) d[i * cols_ + col_idx_[k]] = values_[k];
    return d;
  }

  /// out = x M (row vector times matrix).
  void left_multiply(std::span<const double> x, std::span<double> out) const noexcept {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) out[col_idx_[k]] += xi * values_[k];
    }
  }

  std::vector<double> left_multiply(std::span<const double> x) const {
    std::vector<double> out(cols_);
    left_multiply(x, out);
    return out;
  }

  /// ||x M||_1 for nonnegative x, without materializing the product.
  double left_mass(std::span<const double> x) const noexcept {
    KahanSum s;
    for (std::size_t i = 0; i < rows_; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += xi * values_[k];
    }
    return s.value();
  }

  NonnegMatrix scaled(double factor) const {
    if (!(factor >= 0.0) || !std::isfinite(factor)) throw InvariantError("nonnegative scale factor", "");
    NonnegMatrix m = *this;
    if (factor == 0.0) return NonnegMatrix(rows_, cols_);
    for (double& v : m.values_) v *= factor;
    m.drop_underflow();
    return m;
  }

  /// Columns carrying at least one nonzero entry.
  std::vector<std::size_t> nonzero_columns() const {
    std::vector<char> seen(cols_, 0);
    for (std::size_t c : col_idx_) seen[c] = 1;
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < cols_; ++j)
      if (seen[j]) out.push_back(j);
    return out;
  }

  std::vector<std::size_t> nonzero_rows() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rows_; ++i)
      if (row_ptr_[i + 1] > row_ptr_[i]) out.push_back(i);
    return out;
  }

  friend bool operator==(const NonnegMatrix&, const NonnegMatrix&) = default;

  friend NonnegMatrix multiply(const NonnegMatrix& a, const NonnegMatrix& b) {
    if (a.cols_ != b.rows_)
      throw InvariantError("compatible matrix dimensions",
                           std::to_string(a.rows_) + "x" + std::to_string(a.cols_) + " * " + std::to_string(b.rows_) +
                               "x" + std::to_string(b.cols_));
    NonnegMatrix m(a.rows_, b.cols_);
    std::vector<double> acc(b.cols_, 0.0);
    std::vector<char> touched(b.cols_, 0);
    std::vector<std::size_t> pattern;
    for (std::size_t i = 0; i < a.rows_; ++i) {
      pattern.clear();
      for (std::size_t k = a.row_ptr_[i]; k < a.row_ptr_[i + 1]; ++k) {
        const std::size_t mid = a.col_idx_[k];
        const double av = a.values_[k];
        for (std::size_t l = b.row_ptr_[mid]; l < b.row_ptr_[mid + 1]; ++l) {
          const std::size_t j = b.col_idx_[l];
          if (!touched[j]) {
            touched[j] = 1;
            pattern.push_back(j);
          }
          acc[j] += av * b.values_[l];
        }
      }
      std::sort(pattern.begin(), pattern.end());
      for (std::size_t j : pattern) {
        if (acc[j] > 0.0) {
          m.col_idx_.push_back(j);
          m.values_.push_back(acc[j]);
        }
        acc[j] = 0.0;
        touched[j] = 0;
      }
      m.row_ptr_[i + 1] = m.values_.size();
    }
    return m;
  }

  friend NonnegMatrix add(const NonnegMatrix& a, const NonnegMatrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw InvariantError("equal matrix dimensions for sum", "");
    NonnegMatrix m(a.rows_, a.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      std::size_t p = a.row_ptr_[i], q = b.row_ptr_[i];
      const std::size_t pe = a.row_ptr_[i + 1], qe = b.row_ptr_[i + 1];
      while (p < pe || q < qe) {
        if (q == qe || (p < pe && a.col_idx_[p] < b.col_idx_[q])) {
          m.col_idx_.push_back(a.col_idx_[p]);
          m.values_.push_back(a.values_[p++]);
        } else if (p == pe || b.col_idx_[q] < a.col_idx_[p]) {
          m.col_idx_.push_back(b.col_idx_[q]);
          m.values_.push_back(b.values_[q++]);
        } else {
          m.col_idx_.push_back(a.col_idx_[p]);
          m.values_.push_back(a.values_[p++] + b.values_[q++]);
        }
      }
      m.row_ptr_[i + 1] = m.values_.size();
    }
    return m;
  }

 private:
  void drop_underflow() {
    std::vector<std::size_t> ptr(rows_ + 1, 0);
    std::size_t w = 0;
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        if (values_[k] > 0.0) {
          col_idx_[w] = col_idx_[k];
          values_[w] = values_[k];
          ++w;
        }
      }
      ptr[i + 1] = w;
    }
    col_idx_.resize(w);
    values_.resize(w);
    row_ptr_ = std::move(ptr);
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

/// Induced l1 operator norm sup{||xM|| : ||x|| = 1}; for a nonnegative
/// matrix this is the largest row sum.
inline double operator_norm(const NonnegMatrix& m) noexcept {
  double best = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) best = std::max(best, m.row_sum(i));
  return best;
}

/// Square nonnegative matrix with unit row sums (within kProbTolerance).
/// Rows are validated, not rescaled, so stored values stay exactly as given.
class TransitionMatrix {
 public:
  TransitionMatrix() = default;

  explicit TransitionMatrix(NonnegMatrix m) : inner_(std::move(m)) {
    if (inner_.rows() != inner_.cols())
      throw InvariantError("transition matrix is square",
                           std::to_string(inner_.rows()) + "x" + std::to_string(inner_.cols()));
    if (inner_.rows() == 0) throw InvariantError("state space size >= 1", "");
    for (std::size_t i = 0; i < inner_.rows(); ++i) {
      const double s = inner_.row_sum(i);
      if (std::abs(s - 1.0) > kProbTolerance)
        throw InvariantError("transition matrix rows sum to 1 within 1e-9",
                             "row " + std::to_string(i) + " sums to " + format_roundtrip(s));
    }
  }

  std::size_t size() const noexcept { return inner_.rows(); }
  const NonnegMatrix& matrix() const noexcept { return inner_; }
  operator const NonnegMatrix&() const noexcept { return inner_; }

  friend bool operator==(const TransitionMatrix&, const TransitionMatrix&) = default;

 private:
  NonnegMatrix inner_;
};

}  // namespace partfilter
