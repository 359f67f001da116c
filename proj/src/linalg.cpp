#include "hpelm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hpelm/error.hpp"

namespace hpelm {

namespace {

std::string shape_of(const DenseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Packed panel kernel for c(i, j) += sign · Σ_k a(k, i)·a(k, j), j >= i.
// `a` is r × n with leading dimension lda; `c` is n × n with leading
// dimension ldc. Summation order depends only on (r, n), never on the data
// or the caller, so results are reproducible bit for bit.
constexpr std::size_t kPanel = 4;
constexpr std::size_t kDepth = 256;
constexpr std::size_t kPanelsPerBlock = 32;

void gram_update(double* c, std::size_t ldc, const double* a, std::size_t lda, std::size_t r,
                 std::size_t n, double sign) {
  if (r == 0 || n == 0) return;
  const std::size_t panels = (n + kPanel - 1) / kPanel;
  std::vector<double> pack(panels * kDepth * kPanel);

  for (std::size_t k0 = 0; k0 < r; k0 += kDepth) {
    const std::size_t kc = std::min(kDepth, r - k0);
    std::fill(pack.begin(), pack.end(), 0.0);
    for (std::size_t k = 0; k < kc; ++k) {
      const double* src = a + (k0 + k) * lda;
      for (std::size_t j = 0; j < n; ++j) {
        pack[(j / kPanel) * kc * kPanel + k * kPanel + j % kPanel] = src[j];
      }
    }

    for (std::size_t jb = 0; jb < panels; jb += kPanelsPerBlock) {
      const std::size_t je = std::min(panels, jb + kPanelsPerBlock);
      for (std::size_t ip = 0; ip < je; ++ip) {
        const double* pa = pack.data() + ip * kc * kPanel;
        for (std::size_t jp = std::max(ip, jb); jp < je; ++jp) {
          const double* pb = pack.data() + jp * kc * kPanel;
          double acc[kPanel][kPanel] = {};
          for (std::size_t k = 0; k < kc; ++k) {
            const double* av = pa + k * kPanel;
            const double* bv = pb + k * kPanel;
            for (std::size_t ii = 0; ii < kPanel; ++ii) {
              for (std::size_t jj = 0; jj < kPanel; ++jj) acc[ii][jj] += av[ii] * bv[jj];
            }
          }
          for (std::size_t ii = 0; ii < kPanel; ++ii) {
            const std::size_t i = ip * kPanel + ii;
            if (i >= n) break;
            for (std::size_t jj = 0; jj < kPanel; ++jj) {
              const std::size_t j = jp * kPanel + jj;
              if (j >= n) break;
              if (j >= i) c[i * ldc + j] += sign * acc[ii][jj];
            }
          }
        }
      }
    }
  }
}

void mirror_upper(DenseMatrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = i + 1; j < m.cols(); ++j) m(j, i) = m(i, j);
  }
}

// Solves UᵀU x = b in place on the rows of b.
void cholesky_solve(const DenseMatrix& u, DenseMatrix& b) {
  const std::size_t n = u.rows();
  const std::size_t m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    auto bi = b.row(i);
    const double d = u(i, i);
    for (std::size_t c = 0; c < m; ++c) bi[c] /= d;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double f = u(i, j);
      if (f == 0.0) continue;
      auto bj = b.row(j);
      for (std::size_t c = 0; c < m; ++c) bj[c] -= f * bi[c];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    auto bi = b.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double f = u(i, j);
      if (f == 0.0) continue;
      auto bj = b.row(j);
      for (std::size_t c = 0; c < m; ++c) bi[c] -= f * bj[c];
    }
    const double d = u(i, i);
    for (std::size_t c = 0; c < m; ++c) bi[c] /= d;
  }
}

// cross − (gram + ridge·I)·beta
DenseMatrix normal_residual(const DenseMatrix& gram, const DenseMatrix& cross, double ridge,
                            const DenseMatrix& beta) {
  DenseMatrix r = cross;
  const std::size_t n = gram.rows();
  const std::size_t m = cross.cols();
  for (std::size_t i = 0; i < n; ++i) {
    auto ri = r.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double g = gram(i, j) + (i == j ? ridge : 0.0);
      auto bj = beta.row(j);
      for (std::size_t c = 0; c < m; ++c) ri[c] -= g * bj[c];
    }
  }
  return r;
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data has " + std::to_string(data_.size()) + " values, expected " +
                     std::to_string(rows * cols));
  }
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::row_block(std::size_t first, std::size_t count) const {
  if (first + count > rows_) throw ShapeError("row block out of range");
  DenseMatrix out(count, cols_);
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_), count * cols_,
              out.data_.begin());
  return out;
}

DenseMatrix DenseMatrix::select_rows(std::span<const std::size_t> indices) const {
  DenseMatrix out(indices.size(), cols_);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= rows_) throw ShapeError("row index out of range");
    auto src = row(indices[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

DenseMatrix DenseMatrix::select_cols(std::span<const std::size_t> indices) const {
  for (std::size_t c : indices) {
    if (c >= cols_) throw ShapeError("column index out of range");
  }
  DenseMatrix out(rows_, indices.size());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < indices.size(); ++c) out(r, c) = (*this)(r, indices[c]);
  }
  return out;
}

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: left is " + shape_of(a) + ", right is " + shape_of(b));
  }
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double f = a(i, k);
      if (f == 0.0) continue;
      auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += f * bk[j];
    }
  }
  return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

double frobenius_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

DenseMatrix hconcat(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("hconcat: left is " + shape_of(a) + ", right is " + shape_of(b));
  }
  DenseMatrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
    std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

void add_gram_upper(DenseMatrix& c, const DenseMatrix& a) {
  if (c.rows() != a.cols() || c.cols() != a.cols()) {
    throw ShapeError("gram update: accumulator is " + shape_of(c) + ", block is " + shape_of(a));
  }
  gram_update(c.values().data(), c.cols(), a.values().data(), a.cols(), a.rows(), a.cols(), 1.0);
}

void add_cross(DenseMatrix& c, const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || c.rows() != a.cols() || c.cols() != b.cols()) {
    throw ShapeError("cross update: accumulator is " + shape_of(c) + ", operands are " +
                     shape_of(a) + " and " + shape_of(b));
  }
  DenseMatrix block(c.rows(), c.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto ak = a.row(k);
    auto bk = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double f = ak[i];
      auto pi = block.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) pi[j] += f * bk[j];
    }
  }
  for (std::size_t i = 0; i < c.size(); ++i) c.values()[i] += block.values()[i];
}

NormalEqAccumulator::NormalEqAccumulator(std::size_t hidden, std::size_t outputs)
    : gram_(hidden, hidden), cross_(hidden, outputs) {}

void NormalEqAccumulator::accumulate(const DenseMatrix& h_block, const DenseMatrix& t_block) {
  if (h_block.cols() != hidden()) {
    throw ShapeError("accumulate: h_block is " + shape_of(h_block) + ", expected " +
                     std::to_string(hidden()) + " columns");
  }
  if (t_block.cols() != outputs()) {
    throw ShapeError("accumulate: t_block is " + shape_of(t_block) + ", expected " +
                     std::to_string(outputs()) + " columns");
  }
  if (t_block.rows() != h_block.rows()) {
    throw ShapeError("accumulate: t_block has " + std::to_string(t_block.rows()) +
                     " rows but h_block has " + std::to_string(h_block.rows()));
  }
  if (h_block.rows() == 0) throw ShapeError("accumulate: h_block has no rows");
  add_gram_upper(gram_, h_block);
  mirror_upper(gram_);
  add_cross(cross_, h_block, t_block);
  rows_seen_ += h_block.rows();
}

void NormalEqAccumulator::merge(const NormalEqAccumulator& other) {
  if (other.hidden() != hidden() || other.outputs() != outputs()) {
    throw ShapeError("merge: accumulator shapes differ");
  }
  auto g = gram_.values();
  auto og = other.gram_.values();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += og[i];
  auto c = cross_.values();
  auto oc = other.cross_.values();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += oc[i];
  rows_seen_ += other.rows_seen_;
}

double default_ridge(const NormalEqAccumulator& acc) {
  const std::size_t n = acc.hidden();
  if (n == 0) return 0.0;
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += acc.gram()(i, i);
  return 1e-9 * trace / static_cast<double>(n);
}

bool cholesky_upper(DenseMatrix& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw ShapeError("cholesky: matrix is " + shape_of(a));
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i));
  if (!(max_diag > 0.0) || !std::isfinite(max_diag)) return false;
  const double tol = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * max_diag;

  constexpr std::size_t kBlock = 64;
  double* base = a.values().data();
  for (std::size_t kb = 0; kb < n; kb += kBlock) {
    const std::size_t ke = std::min(n, kb + kBlock);
    // Factor the block row [kb, ke) across all remaining columns.
    for (std::size_t i = kb; i < ke; ++i) {
      double d = a(i, i);
      if (!(d > tol) || !std::isfinite(d)) return false;
      d = std::sqrt(d);
      double* ri = base + i * n;
      ri[i] = d;
      const double inv = 1.0 / d;
      for (std::size_t j = i + 1; j < n; ++j) ri[j] *= inv;
      for (std::size_t p = i + 1; p < ke; ++p) {
        const double f = ri[p];
        double* rp = base + p * n;
        for (std::size_t j = p; j < n; ++j) rp[j] -= f * ri[j];
      }
    }
    // Trailing update A22 −= U12ᵀ·U12.
    if (ke < n) {
      gram_update(base + ke * n + ke, n, base + kb * n + ke, n, ke - kb, n - ke, -1.0);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) a(i, j) = 0.0;
  }
  return true;
}

SolveReport solve_normal(const NormalEqAccumulator& acc, double ridge) {
  if (acc.rows_seen() == 0) throw NumericError("solve_normal: no rows accumulated");
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
    throw ConfigError("solve_normal: ridge must be a finite non-negative number");
  }
  const std::size_t n = acc.hidden();
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale += acc.gram()(i, i);
  scale = scale > 0.0 ? scale / static_cast<double>(n) : 1.0;

  double current = ridge;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    if (attempt > 0) current = current > 0.0 ? current * 100.0 : 1e-12 * scale;
    DenseMatrix factor = acc.gram();
    for (std::size_t i = 0; i < n; ++i) factor(i, i) += current;
    if (!cholesky_upper(factor)) continue;

    DenseMatrix beta = acc.cross();
    cholesky_solve(factor, beta);
    // One step of iterative refinement, kept only if it helps.
    DenseMatrix r = normal_residual(acc.gram(), acc.cross(), current, beta);
    DenseMatrix delta = r;
    cholesky_solve(factor, delta);
    DenseMatrix refined = beta;
    for (std::size_t i = 0; i < refined.size(); ++i) refined.values()[i] += delta.values()[i];
    if (refined.all_finite() &&
        frobenius_norm(normal_residual(acc.gram(), acc.cross(), current, refined)) <
            frobenius_norm(r)) {
      beta = std::move(refined);
    }
    if (!beta.all_finite()) continue;
    return SolveReport{std::move(beta), current, attempt};
  }
  throw SingularSystemError("solve_normal: factorization failed after ridge escalation to " +
                                std::to_string(current),
                            current);
}

double residual_norm(const DenseMatrix& h, const DenseMatrix& beta, const DenseMatrix& t) {
  DenseMatrix y = matmul(h, beta);
  if (y.rows() != t.rows() || y.cols() != t.cols()) {
    throw ShapeError("residual: prediction is " + shape_of(y) + ", target is " + shape_of(t));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y.values()[i] - t.values()[i];
    s += d * d;
  }
  return std::sqrt(s);
}

SvdResult jacobi_svd(const DenseMatrix& a) {
  if (a.rows() < a.cols()) {
    SvdResult t = jacobi_svd(transpose(a));
    return SvdResult{std::move(t.v), std::move(t.s), std::move(t.u)};
  }
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  // Columns of A and V stored as rows for contiguous rotations.
  DenseMatrix w = transpose(a);
  DenseMatrix v = DenseMatrix::identity(n);
  const double eps = std::numeric_limits<double>::epsilon();

  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        auto wp = w.row(p);
        auto wq = w.row(q);
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
          alpha += wp[k] * wp[k];
          beta += wq[k] * wq[k];
          gamma += wp[k] * wq[k];
        }
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t k = 0; k < m; ++k) {
          const double x = wp[k], y = wq[k];
          wp[k] = c * x - s * y;
          wq[k] = s * x + c * y;
        }
        auto vp = v.row(p);
        auto vq = v.row(q);
        for (std::size_t k = 0; k < n; ++k) {
          const double x = vp[k], y = vq[k];
          vp[k] = c * x - s * y;
          vq[k] = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (double x : w.row(j)) s += x * x;
    sigma[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  SvdResult out{DenseMatrix(m, n), std::vector<double>(n), DenseMatrix(n, n)};
  for (std::size_t col = 0; col < n; ++col) {
    const std::size_t j = order[col];
    out.s[col] = sigma[j];
    for (std::size_t k = 0; k < m; ++k) out.u(k, col) = sigma[j] > 0.0 ? w(j, k) / sigma[j] : 0.0;
    for (std::size_t k = 0; k < n; ++k) out.v(k, col) = v(j, k);
  }
  return out;
}

DenseMatrix pinv_oracle(const DenseMatrix& h, const DenseMatrix& t) {
  if (h.rows() == 0) throw ShapeError("pinv_oracle: h has no rows");
  if (h.rows() != t.rows()) {
    throw ShapeError("pinv_oracle: h is " + shape_of(h) + ", t is " + shape_of(t));
  }
  const SvdResult svd = jacobi_svd(h);
  const std::size_t k = svd.s.size();
  const double smax = k == 0 ? 0.0 : svd.s.front();
  const double cutoff = static_cast<double>(std::max(h.rows(), h.cols())) *
                        std::numeric_limits<double>::epsilon() * smax;
  // Uᵀt scaled by 1/σ, then V·(that).
  DenseMatrix ut = matmul(transpose(svd.u), t);
  for (std::size_t i = 0; i < k; ++i) {
    const double inv = svd.s[i] > cutoff ? 1.0 / svd.s[i] : 0.0;
    for (double& x : ut.row(i)) x *= inv;
  }
  return matmul(svd.v, ut);
}

}  // namespace hpelm
