#ifndef LIPNN_MATRIX_HPP
#define LIPNN_MATRIX_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace lipnn {

using Vec = std::vector<double>;

// Which induced operator norm / vector norm is meant.
enum class Norm { L1, L2, LInf };

std::string to_string(Norm p);
Norm norm_from_string(const std::string& s);

// Dense real matrix, row-major, double precision.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(const std::vector<Vec>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  Vec& data() { return data_; }
  const Vec& data() const { return data_; }

  bool all_finite() const;
  Matrix transposed() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double c);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vec data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double c);
Matrix operator*(double c, Matrix a);

// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A * B^T
Matrix matmul_transB(const Matrix& a, const Matrix& b);
// C = A^T * B
Matrix matmul_transA(const Matrix& a, const Matrix& b);
// y = A x
Vec matvec(const Matrix& a, const Vec& x);
// y = A^T x
Vec matvec_transposed(const Matrix& a, const Vec& x);

// Vector helpers.
double dot(const Vec& a, const Vec& b);
double vec_norm(const Vec& x, Norm p = Norm::L2);
double frobenius_norm(const Matrix& m);

// Largest singular value with its singular vectors: W v = sigma u.
struct SpectralTriple {
  double sigma = 0.0;
  Vec u;
  Vec v;
};

// Full SVD, values sorted descending. U is rows x k, V is cols x k with
// k = min(rows, cols); M = U diag(s) V^T.
struct SvdResult {
  Matrix u;
  Vec singular_values;
  Matrix v;
};

// Induced operator p-norm. p=1: max absolute column sum, p=inf: max absolute
// row sum, p=2: largest singular value via power iteration. Throws
// std::invalid_argument("non-finite input") on NaN/Inf entries.
double induced_norm(const Matrix& m, Norm p);

// Power iteration for the top singular triple. Deterministic: the default
// start vector is the normalized all-ones vector perturbed by fixed-seed
// noise. Converges when the relative change in the sigma estimate drops
// below `tolerance` (1e-12 by default), capped at 200 iterations. A zero
// matrix returns sigma = 0 with u, v set to the first canonical basis
// vectors. The training loop passes a looser tolerance: a warm-started
// subgradient direction does not need twelve digits per minibatch.
SpectralTriple power_iteration(const Matrix& m, const Vec* warm_start = nullptr,
                               double tolerance = 1e-12);

// One-sided Jacobi SVD for desk-scale matrices (min dimension <= 4096).
SvdResult full_svd(const Matrix& m);

// sigma_max / sigma_min over singular values above the numerical-rank
// threshold sigma_max * 1e-12 * max(rows, cols). Throws on the zero matrix.
double condition_number(const Matrix& m);

// u1 v1^T from power iteration: a rank-1 subgradient of the spectral norm.
Matrix spectral_norm_subgradient(const Matrix& m);

// Solve A X = I by Gauss-Jordan with partial pivoting. Throws
// std::runtime_error on (numerically) singular input.
Matrix inverse(const Matrix& a);

void require_finite(const Matrix& m);

}  // namespace lipnn

#endif  // LIPNN_MATRIX_HPP
