#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace hpelm {

// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);

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

  // Copies the rows [first, first + count).
  DenseMatrix row_block(std::size_t first, std::size_t count) const;
  // Copies the listed rows, in order.
  DenseMatrix select_rows(std::span<const std::size_t> indices) const;
  // Copies the listed columns, in order.
  DenseMatrix select_cols(std::span<const std::size_t> indices) const;

  bool all_finite() const noexcept;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);
double frobenius_norm(const DenseMatrix& a);
// Horizontal concatenation [a | b].
DenseMatrix hconcat(const DenseMatrix& a, const DenseMatrix& b);

// c += aᵀ·a restricted to the upper triangle of c (j >= i).
void add_gram_upper(DenseMatrix& c, const DenseMatrix& a);
// c += aᵀ·b.
void add_cross(DenseMatrix& c, const DenseMatrix& a, const DenseMatrix& b);

// Running sums of HᵀH and HᵀT over row blocks of H and T.
class NormalEqAccumulator {
 public:
  NormalEqAccumulator(std::size_t hidden, std::size_t outputs);

  // Adds h_blockᵀh_block and h_blockᵀt_block. Throws ShapeError naming the
  // offending operand when shapes disagree.
  void accumulate(const DenseMatrix& h_block, const DenseMatrix& t_block);
  // Entrywise sum with an accumulator of the same shape.
  void merge(const NormalEqAccumulator& other);

  const DenseMatrix& gram() const noexcept { return gram_; }
  const DenseMatrix& cross() const noexcept { return cross_; }
  std::size_t rows_seen() const noexcept { return rows_seen_; }
  std::size_t hidden() const noexcept { return gram_.rows(); }
  std::size_t outputs() const noexcept { return cross_.cols(); }

 private:
  DenseMatrix gram_;
  DenseMatrix cross_;
  std::size_t rows_seen_ = 0;
};

struct SolveReport {
  DenseMatrix beta;
  double ridge_used = 0.0;
  int escalations = 0;
};

// Ridge used when none is given: 1e-9 · trace(gram) / L.
double default_ridge(const NormalEqAccumulator& acc);

// Solves (gram + ridge·I)β = cross by Cholesky factorization. On a failed
// factorization the ridge is multiplied by 100, up to three times (a zero
// ridge first becomes 1e-12 · trace(gram) / L). Throws SingularSystemError
// carrying the last ridge tried.
SolveReport solve_normal(const NormalEqAccumulator& acc, double ridge);

// ‖hβ − t‖_F.
double residual_norm(const DenseMatrix& h, const DenseMatrix& beta, const DenseMatrix& t);

// Cholesky factor U (upper, gram = UᵀU) or nothing if a pivot is not
// safely positive. Exposed for tests.
bool cholesky_upper(DenseMatrix& a);

// Thin SVD a = U·diag(s)·Vᵀ by one-sided Jacobi rotations.
struct SvdResult {
  DenseMatrix u;  // rows × k
  std::vector<double> s;
  DenseMatrix v;  // cols × k
};
SvdResult jacobi_svd(const DenseMatrix& a);

// h†·t through the SVD, with singular values below
// max(rows, cols) · eps · σ_max treated as zero. Verification oracle for
// solve_normal; intended for matrices up to a few hundred on a side.
DenseMatrix pinv_oracle(const DenseMatrix& h, const DenseMatrix& t);

}  // namespace hpelm
