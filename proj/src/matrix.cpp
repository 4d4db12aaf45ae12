#include "lipnn/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#else
static int omp_get_num_threads() { return 1; }
static int omp_get_thread_num() { return 0; }
#endif

#include "lipnn/rng.hpp"

namespace lipnn {

std::string to_string(Norm p) {
  switch (p) {
    case Norm::L1: return "1";
    case Norm::L2: return "2";
    case Norm::LInf: return "inf";
  }
  return "?";
}

Norm norm_from_string(const std::string& s) {
  if (s == "1") return Norm::L1;
  if (s == "2") return Norm::L2;
  if (s == "inf" || s == "Inf" || s == "INF") return Norm::LInf;
  throw std::invalid_argument("unknown norm: " + s);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("matrix dimensions must be >= 1");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<Vec>& rows) {
  if (rows.empty() || rows[0].empty()) throw std::invalid_argument("matrix dimensions must be >= 1");
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) throw std::invalid_argument("ragged rows");
    std::copy(rows[i].begin(), rows[i].end(), m.row(i));
  }
  return m;
}

bool Matrix::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

void require_finite(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) throw std::invalid_argument("empty matrix");
  if (!m.all_finite()) throw std::invalid_argument("non-finite input");
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw std::invalid_argument("shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw std::invalid_argument("shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double c) {
  for (double& x : data_) x *= c;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double c) { return a *= c; }
Matrix operator*(double c, Matrix a) { return a *= c; }

namespace {

// Raw-pointer GEMM kernels. The OpenMP parallel regions live in the public
// wrappers; keeping the inner loops in plain functions lets them vectorize
// cleanly.

// C[i0:i1) = A[i0:i1) * B^T with 2x4 register tiles.
void kernel_abT(const double* a, const double* b, double* c, std::size_t i0, std::size_t i1,
                std::size_t k, std::size_t n) {
  for (std::size_t i = i0; i < i1; i += 2) {
    const std::size_t ilim = std::min(i1, i + 2);
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + j * k;
      const double* b1 = b + (j + 1) * k;
      const double* b2 = b + (j + 2) * k;
      const double* b3 = b + (j + 3) * k;
      for (std::size_t ii = i; ii < ilim; ++ii) {
        const double* ai = a + ii * k;
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
#pragma omp simd reduction(+ : s0, s1, s2, s3)
        for (std::size_t l = 0; l < k; ++l) {
          const double av = ai[l];
          s0 += av * b0[l];
          s1 += av * b1[l];
          s2 += av * b2[l];
          s3 += av * b3[l];
        }
        double* ci = c + ii * n + j;
        ci[0] = s0;
        ci[1] = s1;
        ci[2] = s2;
        ci[3] = s3;
      }
    }
    for (; j < n; ++j) {
      const double* bj = b + j * k;
      for (std::size_t ii = i; ii < ilim; ++ii) {
        const double* ai = a + ii * k;
        double s = 0.0;
#pragma omp simd reduction(+ : s)
        for (std::size_t l = 0; l < k; ++l) s += ai[l] * bj[l];
        c[ii * n + j] = s;
      }
    }
  }
}

// C[i0:i1) = A[i0:i1) * B, row-major accumulation over k.
void kernel_ab(const double* a, const double* b, double* c, std::size_t i0, std::size_t i1,
               std::size_t k, std::size_t n) {
  for (std::size_t i = i0; i < i1; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t l = 0; l < k; ++l) {
      const double ail = ai[l];
      const double* bl = b + l * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) ci[j] += ail * bl[j];
    }
  }
}

// C[i0:i1) = (A^T B)[i0:i1): row i of C is column i of A against B.
void kernel_aTb(const double* a, const double* b, double* c, std::size_t i0, std::size_t i1,
                std::size_t k, std::size_t n, std::size_t a_cols) {
  for (std::size_t i = i0; i < i1; ++i) {
    double* ci = c + i * n;
    for (std::size_t l = 0; l < k; ++l) {
      const double ali = a[l * a_cols + i];
      const double* bl = b + l * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) ci[j] += ali * bl[j];
    }
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul shape mismatch");
  Matrix c(a.rows(), b.cols());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (m * n * k > 262144) {
#pragma omp parallel
    {
      const std::size_t threads = static_cast<std::size_t>(omp_get_num_threads());
      const std::size_t tid = static_cast<std::size_t>(omp_get_thread_num());
      const std::size_t chunk = (m + threads - 1) / threads;
      const std::size_t i0 = std::min(m, tid * chunk), i1 = std::min(m, i0 + chunk);
      if (i0 < i1) kernel_ab(a.data().data(), b.data().data(), c.data().data(), i0, i1, k, n);
    }
  } else {
    kernel_ab(a.data().data(), b.data().data(), c.data().data(), 0, m, k, n);
  }
  return c;
}

Matrix matmul_transB(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_transB shape mismatch");
  Matrix c(a.rows(), b.rows());
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (m * n * k > 262144) {
#pragma omp parallel
    {
      const std::size_t threads = static_cast<std::size_t>(omp_get_num_threads());
      const std::size_t tid = static_cast<std::size_t>(omp_get_thread_num());
      std::size_t chunk = (m + threads - 1) / threads;
      chunk += chunk % 2;  // keep tile pairs intact
      const std::size_t i0 = std::min(m, tid * chunk), i1 = std::min(m, i0 + chunk);
      if (i0 < i1) kernel_abT(a.data().data(), b.data().data(), c.data().data(), i0, i1, k, n);
    }
  } else {
    kernel_abT(a.data().data(), b.data().data(), c.data().data(), 0, m, k, n);
  }
  return c;
}

Matrix matmul_transA(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul_transA shape mismatch");
  Matrix c(a.cols(), b.cols());
  const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
  if (m * n * k > 262144) {
#pragma omp parallel
    {
      const std::size_t threads = static_cast<std::size_t>(omp_get_num_threads());
      const std::size_t tid = static_cast<std::size_t>(omp_get_thread_num());
      const std::size_t chunk = (m + threads - 1) / threads;
      const std::size_t i0 = std::min(m, tid * chunk), i1 = std::min(m, i0 + chunk);
      if (i0 < i1) kernel_aTb(a.data().data(), b.data().data(), c.data().data(), i0, i1, k, n, m);
    }
  } else {
    kernel_aTb(a.data().data(), b.data().data(), c.data().data(), 0, m, k, n, m);
  }
  return c;
}

Vec matvec(const Matrix& a, const Vec& x) {
  if (a.cols() != x.size()) throw std::invalid_argument("matvec shape mismatch");
  Vec y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    double s = 0.0;
#pragma omp simd reduction(+ : s)
    for (std::size_t j = 0; j < a.cols(); ++j) s += ai[j] * x[j];
    y[i] = s;
  }
  return y;
}

Vec matvec_transposed(const Matrix& a, const Vec& x) {
  if (a.rows() != x.size()) throw std::invalid_argument("matvec shape mismatch");
  Vec y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    const double xi = x[i];
#pragma omp simd
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += ai[j] * xi;
  }
  return y;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double vec_norm(const Vec& x, Norm p) {
  double s = 0.0;
  switch (p) {
    case Norm::L1:
      for (double v : x) s += std::fabs(v);
      return s;
    case Norm::L2:
      for (double v : x) s += v * v;
      return std::sqrt(s);
    case Norm::LInf:
      for (double v : x) s = std::max(s, std::fabs(v));
      return s;
  }
  return s;
}

double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

double induced_norm(const Matrix& m, Norm p) {
  require_finite(m);
  switch (p) {
    case Norm::L1: {
      double best = 0.0;
      for (std::size_t j = 0; j < m.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i) s += std::fabs(m(i, j));
        best = std::max(best, s);
      }
      return best;
    }
    case Norm::LInf: {
      double best = 0.0;
      for (std::size_t i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        const double* row = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) s += std::fabs(row[j]);
        best = std::max(best, s);
      }
      return best;
    }
    case Norm::L2:
      return power_iteration(m).sigma;
  }
  return 0.0;
}

namespace {

void normalize_l2(Vec& v) {
  const double n = vec_norm(v, Norm::L2);
  if (n > 0.0)
    for (double& x : v) x /= n;
}

Vec default_start_vector(std::size_t n) {
  Rng rng(0x5eed5eedULL);
  Vec v(n, 1.0);
  for (double& x : v) x += 1e-3 * (rng.uniform() - 0.5);
  normalize_l2(v);
  return v;
}

}  // namespace

namespace {

// Orthonormalize w against q (both unit length on success). Returns false
// when w is (numerically) in the span of q.
bool orthonormalize_against(Vec& w, const Vec& q) {
  for (int pass = 0; pass < 2; ++pass) {
    const double d = dot(w, q);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= d * q[i];
  }
  const double n = vec_norm(w, Norm::L2);
  if (n < 1e-14) return false;
  for (double& x : w) x /= n;
  return true;
}

}  // namespace

// Block-2 subspace iteration with Rayleigh-Ritz extraction: converges at the
// (sigma_3/sigma_1)^2 rate, so a near-tie between the top two singular
// values cannot stall it the way it stalls a single power vector.
SpectralTriple power_iteration(const Matrix& m, const Vec* warm_start, double tolerance) {
  require_finite(m);
  const std::size_t nr = m.rows(), nc = m.cols();

  SpectralTriple out;
  out.u.assign(nr, 0.0);
  out.v.assign(nc, 0.0);

  if (frobenius_norm(m) == 0.0) {
    // Zero matrix convention: sigma = 0 with canonical basis vectors.
    out.u[0] = 1.0;
    out.v[0] = 1.0;
    return out;
  }

  Vec v1 = (warm_start != nullptr && warm_start->size() == nc) ? *warm_start
                                                               : default_start_vector(nc);
  normalize_l2(v1);
  if (vec_norm(v1, Norm::L2) == 0.0) v1 = default_start_vector(nc);

  // Deterministic second basis vector.
  Vec v2(nc, 0.0);
  {
    Rng rng(0xb10cb10cULL);
    for (double& x : v2) x = rng.uniform() - 0.5;
    if (!orthonormalize_against(v2, v1)) v2.assign(nc, 0.0);
  }
  const bool block2 = nc >= 2 && vec_norm(v2, Norm::L2) > 0.0;

  double sigma = 0.0;
  Vec y = {1.0, 0.0};  // Ritz coefficients in the current basis
  Vec b1(nr), b2(nr);
  for (int iter = 0; iter < 200; ++iter) {
    b1 = matvec(m, v1);
    if (block2) b2 = matvec(m, v2);

    // Rayleigh-Ritz on span{v1, v2}: G = (MV)^T (MV).
    const double g11 = dot(b1, b1);
    const double g12 = block2 ? dot(b1, b2) : 0.0;
    const double g22 = block2 ? dot(b2, b2) : 0.0;
    double lambda;
    if (block2) {
      const double half_tr = 0.5 * (g11 + g22);
      const double disc = std::sqrt(0.25 * (g11 - g22) * (g11 - g22) + g12 * g12);
      lambda = half_tr + disc;
      // Eigenvector of the 2x2 Gram matrix for its top eigenvalue.
      if (std::fabs(g12) > 1e-300) {
        y = {g12, lambda - g11};
      } else {
        y = g11 >= g22 ? Vec{1.0, 0.0} : Vec{0.0, 1.0};
      }
      const double yn = std::sqrt(y[0] * y[0] + y[1] * y[1]);
      y[0] /= yn;
      y[1] /= yn;
    } else {
      lambda = g11;
      y = {1.0, 0.0};
    }
    const double sigma_new = std::sqrt(std::max(lambda, 0.0));
    const double rel = std::fabs(sigma_new - sigma) / std::max(sigma_new, 1e-300);
    sigma = sigma_new;
    if ((rel < tolerance && iter > 0) || sigma == 0.0) break;
    if (iter + 1 == 200) break;

    // Next subspace: V <- orthonormalized M^T (M V).
    Vec w1 = matvec_transposed(m, b1);
    normalize_l2(w1);
    if (vec_norm(w1, Norm::L2) == 0.0) {
      // v1 fell into the null space; recover from the second direction.
      w1 = block2 ? v2 : default_start_vector(nc);
      normalize_l2(w1);
    }
    if (block2) {
      Vec w2 = matvec_transposed(m, b2);
      if (!orthonormalize_against(w2, w1)) {
        Rng rng(0xdecafULL + static_cast<std::uint64_t>(iter));
        for (double& x : w2) x = rng.uniform() - 0.5;
        if (!orthonormalize_against(w2, w1)) w2.assign(nc, 0.0);
      }
      v2 = std::move(w2);
    }
    v1 = std::move(w1);
  }

  // Assemble the Ritz pair: v = V y, u = M v / sigma.
  for (std::size_t i = 0; i < nc; ++i) out.v[i] = y[0] * v1[i] + (block2 ? y[1] * v2[i] : 0.0);
  normalize_l2(out.v);
  out.u = matvec(m, out.v);
  const double un = vec_norm(out.u, Norm::L2);
  out.sigma = un;
  if (un > 0.0)
    for (double& x : out.u) x /= un;
  else
    out.u[0] = 1.0;
  return out;
}

SvdResult full_svd(const Matrix& m) {
  require_finite(m);
  if (std::min(m.rows(), m.cols()) > 4096) throw std::invalid_argument("full_svd: matrix too large");

  // Work on the tall orientation so the Jacobi sweeps run over the short side.
  const bool transposed = m.rows() < m.cols();
  Matrix a = transposed ? m.transposed() : m;
  const std::size_t nr = a.rows(), nc = a.cols();

  Matrix v = Matrix::identity(nc);

  // One-sided Jacobi: orthogonalize column pairs of A, accumulating the
  // rotations in V, until all pairs are orthogonal to working precision.
  const int max_sweeps = 60;
  const double tol = 1e-14;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < nc; ++p) {
      for (std::size_t q = p + 1; q < nc; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < nr; ++i) {
          const double* ai = a.row(i);
          app += ai[p] * ai[p];
          aqq += ai[q] * ai[q];
          apq += ai[p] * ai[q];
        }
        if (std::fabs(apq) <= tol * std::sqrt(app * aqq) || apq == 0.0) continue;
        rotated = true;
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < nr; ++i) {
          double* ai = a.row(i);
          const double aip = ai[p], aiq = ai[q];
          ai[p] = c * aip - s * aiq;
          ai[q] = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < nc; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
    if (!rotated) break;
  }

  Vec sigma(nc, 0.0);
  Matrix u(nr, nc);
  for (std::size_t j = 0; j < nc; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < nr; ++i) s += a(i, j) * a(i, j);
    sigma[j] = std::sqrt(s);
    if (sigma[j] > 0.0) {
      for (std::size_t i = 0; i < nr; ++i) u(i, j) = a(i, j) / sigma[j];
    } else {
      u(std::min(j, nr - 1), j) = 1.0;  // placeholder for a zero direction
    }
  }

  // Sort descending by singular value.
  std::vector<std::size_t> order(nc);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

  SvdResult out;
  out.singular_values.resize(nc);
  out.u = Matrix(nr, nc);
  out.v = Matrix(nc, nc);
  for (std::size_t j = 0; j < nc; ++j) {
    out.singular_values[j] = sigma[order[j]];
    for (std::size_t i = 0; i < nr; ++i) out.u(i, j) = u(i, order[j]);
    for (std::size_t i = 0; i < nc; ++i) out.v(i, j) = v(i, order[j]);
  }

  if (transposed) std::swap(out.u, out.v);
  return out;
}

double condition_number(const Matrix& m) {
  require_finite(m);
  if (frobenius_norm(m) == 0.0) throw std::invalid_argument("zero matrix has no condition number");
  const SvdResult svd = full_svd(m);
  const double smax = svd.singular_values.front();
  const double threshold = smax * 1e-12 * static_cast<double>(std::max(m.rows(), m.cols()));
  double smin = smax;
  for (double s : svd.singular_values)
    if (s > threshold) smin = s;
  return smax / smin;
}

Matrix spectral_norm_subgradient(const Matrix& m) {
  const SpectralTriple t = power_iteration(m);
  Matrix g(m.rows(), m.cols());
  if (t.sigma == 0.0) return g;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) g(i, j) = t.u[i] * t.v[j];
  return g;
}

Matrix inverse(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("inverse: matrix not square");
  const std::size_t n = a.rows();
  Matrix work = a;
  Matrix inv = Matrix::identity(n);
  double scale = 0.0;
  for (double x : a.data()) scale = std::max(scale, std::fabs(x));
  const double tiny = std::max(scale, 1.0) * 1e-13;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t i = col + 1; i < n; ++i)
      if (std::fabs(work(i, col)) > std::fabs(work(pivot, col))) pivot = i;
    if (std::fabs(work(pivot, col)) < tiny) throw std::runtime_error("singular matrix");
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(work(pivot, j), work(col, j));
        std::swap(inv(pivot, j), inv(col, j));
      }
    }
    const double d = work(col, col);
    for (std::size_t j = 0; j < n; ++j) {
      work(col, j) /= d;
      inv(col, j) /= d;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i == col) continue;
      const double f = work(i, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        work(i, j) -= f * work(col, j);
        inv(i, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

}  // namespace lipnn
