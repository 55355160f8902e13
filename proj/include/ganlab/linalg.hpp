#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace ganlab {

// Row-major dense matrix, plain storage only. The autodiff Tensor handles
// training; this type handles the spectral analysis after training.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> d)
      : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != rows * cols) {
      throw std::invalid_argument("Matrix: data length mismatch");
    }
  }

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  const double* row(std::size_t i) const { return data.data() + i * cols; }
  double* row(std::size_t i) { return data.data() + i * cols; }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }

  Matrix transposed() const {
    Matrix t(cols, rows);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) t.at(j, i) = at(i, j);
    }
    return t;
  }
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dim mismatch");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      const double* bk = b.row(k);
      double* ci = c.row(i);
      for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

inline std::vector<double> matvec(const Matrix& a,
                                  const std::vector<double>& x) {
  if (a.cols != x.size()) throw std::invalid_argument("matvec: dim mismatch");
  std::vector<double> y(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double acc = 0.0;
    const double* row = a.row(i);
    for (std::size_t j = 0; j < a.cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm2(const std::vector<double>& a) {
  return std::sqrt(dot(a, a));
}

// Thin SVD of an m x n matrix: A = U diag(sigma) V^T with singular values in
// descending order. U is m x p, V is n x p, p = min(m, n).
struct Svd {
  Matrix u;
  std::vector<double> sigma;
  Matrix v;
};

namespace detail {

// One-sided Jacobi on the columns of `work` (m x n, column-major here for
// cache-friendly column rotations). On exit columns are mutually orthogonal;
// their norms are the singular values and `v` accumulates the rotations.
inline void jacobi_sweep_columns(std::vector<double>& work, std::size_t m,
                                 std::size_t n, Matrix& v) {
  auto col = [&](std::size_t j) { return work.data() + j * m; };
  const double eps = 1e-15;
  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double* cp = col(p);
        double* cq = col(q);
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          app += cp[i] * cp[i];
          aqq += cq[i] * cq[i];
          apq += cp[i] * cq[i];
        }
        if (std::abs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0) {
          continue;
        }
        rotated = true;
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double a = cp[i], b = cq[i];
          cp[i] = c * a - s * b;
          cq[i] = s * a + c * b;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double a = v.at(i, p), b = v.at(i, q);
          v.at(i, p) = c * a - s * b;
          v.at(i, q) = s * a + c * b;
        }
      }
    }
    if (!rotated) return;
  }
}

}  // namespace detail

inline Svd svd(const Matrix& a) {
  const std::size_t m = a.rows, n = a.cols;
  if (m == 0 || n == 0) throw std::invalid_argument("svd: empty matrix");
  if (m < n) {
    // Work on the transpose and swap the factors back.
    Svd t = svd(a.transposed());
    return Svd{std::move(t.v), std::move(t.sigma), std::move(t.u)};
  }

  // Column-major copy of A.
  std::vector<double> work(m * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) work[j * m + i] = a.at(i, j);
  }
  Matrix v = Matrix::identity(n);
  detail::jacobi_sweep_columns(work, m, n, v);

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += work[j * m + i] * work[j * m + i];
    sigma[j] = std::sqrt(s);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) {
                     return sigma[x] > sigma[y];
                   });

  Svd out;
  out.sigma.resize(n);
  out.u = Matrix(m, n);
  out.v = Matrix(n, n);
  for (std::size_t jj = 0; jj < n; ++jj) {
    const std::size_t j = order[jj];
    out.sigma[jj] = sigma[j];
    for (std::size_t i = 0; i < n; ++i) out.v.at(i, jj) = v.at(i, j);
    if (sigma[j] > 0.0) {
      for (std::size_t i = 0; i < m; ++i) {
        out.u.at(i, jj) = work[j * m + i] / sigma[j];
      }
    }
  }
  return out;
}

constexpr double kRankTol = 1e-8;

inline std::size_t numeric_rank(const std::vector<double>& sigma,
                                double rel_tol = kRankTol) {
  if (sigma.empty()) return 0;
  const double cutoff = sigma.front() * rel_tol;
  std::size_t r = 0;
  for (const double s : sigma) {
    if (s > cutoff && s > 0.0) ++r;
  }
  return r;
}

// Orthonormal bases for the row space and null space of a matrix. Basis
// vectors are stored as rows; row_basis is r x n, null_basis is (n-r) x n.
struct SubspaceBases {
  Matrix row_basis;
  Matrix null_basis;
  std::size_t rank = 0;
  double tol = kRankTol;
};

inline SubspaceBases row_null_basis(const Matrix& a,
                                    double rel_tol = kRankTol) {
  const std::size_t n = a.cols;
  Svd s = svd(a);
  const std::size_t r = numeric_rank(s.sigma, rel_tol);

  SubspaceBases out;
  out.rank = r;
  out.tol = rel_tol;
  out.row_basis = Matrix(r, n);
  out.null_basis = Matrix(n - r, n);
  // Right singular vectors: first r span the row space, the rest the null
  // space. The thin V has min(m, n) columns; if fewer than n, complete the
  // basis by Gram-Schmidt against the coordinate axes.
  const std::size_t p = s.v.cols;
  for (std::size_t j = 0; j < r; ++j) {
    for (std::size_t i = 0; i < n; ++i) out.row_basis.at(j, i) = s.v.at(i, j);
  }
  std::size_t have = 0;
  for (std::size_t j = r; j < p && have < n - r; ++j) {
    // Thin factors swapped through the transpose path leave zero columns for
    // zero singular values; only unit-norm columns are genuine null vectors.
    double nl = 0.0;
    for (std::size_t i = 0; i < n; ++i) nl += s.v.at(i, j) * s.v.at(i, j);
    if (nl < 0.25) continue;
    for (std::size_t i = 0; i < n; ++i) {
      out.null_basis.at(have, i) = s.v.at(i, j);
    }
    ++have;
  }
  if (have < n - r) {
    // Collect the vectors already fixed (row basis + null vectors so far).
    std::vector<std::vector<double>> fixed;
    fixed.reserve(r + have);
    for (std::size_t j = 0; j < r; ++j) {
      fixed.emplace_back(out.row_basis.row(j), out.row_basis.row(j) + n);
    }
    for (std::size_t j = 0; j < have; ++j) {
      fixed.emplace_back(out.null_basis.row(j), out.null_basis.row(j) + n);
    }
    for (std::size_t axis = 0; axis < n && have < n - r; ++axis) {
      std::vector<double> cand(n, 0.0);
      cand[axis] = 1.0;
      // Two rounds of modified Gram-Schmidt for orthogonality at 1e-14.
      for (int round = 0; round < 2; ++round) {
        for (const auto& f : fixed) {
          const double d = dot(cand, f);
          for (std::size_t i = 0; i < n; ++i) cand[i] -= d * f[i];
        }
      }
      const double nl = norm2(cand);
      if (nl < 1e-8) continue;
      for (std::size_t i = 0; i < n; ++i) cand[i] /= nl;
      for (std::size_t i = 0; i < n; ++i) out.null_basis.at(have, i) = cand[i];
      fixed.push_back(cand);
      ++have;
    }
    if (have != n - r) {
      throw std::runtime_error("row_null_basis: basis completion failed");
    }
  }
  return out;
}

// Coordinates of x in the (row-stored orthonormal) basis B: B x.
inline std::vector<double> basis_coordinates(const Matrix& basis,
                                             const std::vector<double>& x) {
  return matvec(basis, x);
}

// Projection of x onto span(B): B^T B x.
inline std::vector<double> project_onto(const Matrix& basis,
                                        const std::vector<double>& x) {
  std::vector<double> coords = matvec(basis, x);
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t j = 0; j < basis.rows; ++j) {
    const double c = coords[j];
    const double* b = basis.row(j);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += c * b[i];
  }
  return y;
}

// Minimum-norm least-squares solution of A x = b via the SVD pseudo-inverse.
inline std::vector<double> lstsq_min_norm(const Matrix& a,
                                          const std::vector<double>& b,
                                          double rel_tol = kRankTol) {
  if (a.rows != b.size()) throw std::invalid_argument("lstsq: dim mismatch");
  Svd s = svd(a);
  const double cutoff =
      s.sigma.empty() ? 0.0 : s.sigma.front() * rel_tol;
  std::vector<double> x(a.cols, 0.0);
  for (std::size_t j = 0; j < s.sigma.size(); ++j) {
    if (s.sigma[j] <= cutoff || s.sigma[j] == 0.0) continue;
    double uj_b = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i) uj_b += s.u.at(i, j) * b[i];
    const double c = uj_b / s.sigma[j];
    for (std::size_t i = 0; i < a.cols; ++i) x[i] += c * s.v.at(i, j);
  }
  return x;
}

}  // namespace ganlab
