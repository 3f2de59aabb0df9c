// SPDX-License-Identifier: Apache-2.0
//
// Reference computations for the tests. Each one takes a different route
// from the library code it checks: Taylor series instead of Pade,
// Kronecker-product linear systems instead of Schur forms, Newton and
// fixed-point iteration instead of invariant subspaces, quadrature instead
// of block exponentials.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace testing_support {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Portable uniform draws (no implementation-defined distributions).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform(double lo = -1.0, double hi = 1.0) {
    const double u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  int integer(int lo, int hi) { return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1)); }

 private:
  std::mt19937_64 eng_;
};

inline Matrix random_matrix(int n, Rng& rng, double scale = 1.0) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = scale * rng.uniform();
  return m;
}

inline double max_real_eig(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a, false);
  return es.eigenvalues().real().maxCoeff();
}

/// Random drift with its rightmost eigenvalue at `target` (negative: stable).
inline Matrix random_drift(int n, Rng& rng, double target = -0.5) {
  Matrix a = random_matrix(n, rng, 1.5);
  a += (target - max_real_eig(a)) * Matrix::Identity(n, n);
  return a;
}

inline Matrix random_spd(int n, Rng& rng) {
  const Matrix b = random_matrix(n, rng);
  Matrix s = b * b.transpose() + 0.5 * Matrix::Identity(n, n);
  return 0.5 * (s + s.transpose());
}

/// e^{M t} by scaling and squaring of a long Taylor series.
inline Matrix taylor_expm(const Matrix& m, double t = 1.0) {
  Matrix x = m * t;
  const double norm = x.cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  if (norm > 0.125) s = static_cast<int>(std::ceil(std::log2(norm / 0.125)));
  x /= std::ldexp(1.0, s);
  const auto n = x.rows();
  Matrix term = Matrix::Identity(n, n);
  Matrix sum = term;
  for (int k = 1; k <= 30; ++k) {
    term = term * x / static_cast<double>(k);
    sum += term;
  }
  for (int k = 0; k < s; ++k) sum = sum * sum;
  return sum;
}

/// A X + X A^T + Q = 0 through the n^2 x n^2 Kronecker system.
inline Matrix kron_lyapunov(const Matrix& a, const Matrix& q) {
  const auto n = a.rows();
  const Matrix id = Matrix::Identity(n, n);
  Matrix k = Matrix::Zero(n * n, n * n);
  // vec(A X) = (I kron A) vec X, vec(X A^T) = (A kron I) vec X (column-major vec)
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      k.block(i * n, j * n, n, n) += id(i, j) * a;
      k.block(i * n, j * n, n, n) += a(i, j) * id;
    }
  const Vector rhs = -Eigen::Map<const Vector>(q.data(), n * n);
  const Vector x = k.fullPivLu().solve(rhs);
  Matrix out = Eigen::Map<const Matrix>(x.data(), n, n);
  return 0.5 * (out + out.transpose());
}

/// int_0^h e^{Au} Q e^{A^T u} du by composite Simpson.
inline Matrix simpson_van_loan(const Matrix& a, const Matrix& q, double h, int intervals = 200) {
  if (intervals % 2) ++intervals;
  const double step = h / intervals;
  const Matrix e1 = taylor_expm(a, step);
  Matrix e = Matrix::Identity(a.rows(), a.cols());
  Matrix sum = Matrix::Zero(a.rows(), a.cols());
  for (int k = 0; k <= intervals; ++k) {
    const double w = (k == 0 || k == intervals) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    sum += w * e * q * e.transpose();
    e = e * e1;
  }
  return sum * step / 3.0;
}

/// Newton-Kleinman iteration for A P + P A^T - P R P + Q = 0, started from
/// P = 0, which is stabilising when A is Hurwitz.
inline Matrix newton_care(const Matrix& a, const Matrix& r, const Matrix& q, int iters = 60) {
  Matrix p = Matrix::Zero(a.rows(), a.cols());
  for (int k = 0; k < iters; ++k) {
    const Matrix ac = a - p * r;
    const Matrix next = kron_lyapunov(ac, q + p * r * p);
    const double change = (next - p).cwiseAbs().maxCoeff();
    p = next;
    if (change <= 1e-15 * std::max(1.0, p.cwiseAbs().maxCoeff())) break;
  }
  return p;
}

/// Fixed-point iteration of the filter-form DARE with cross term.
inline Matrix iterate_dare(const Matrix& a, const Matrix& c, const Matrix& q, const Matrix& s,
                           const Matrix& rm, int maxIters = 200000) {
  Matrix p = q;
  for (int k = 0; k < maxIters; ++k) {
    const Matrix g = a * p * c.transpose() + s;
    const Matrix w = c * p * c.transpose() + rm;
    Matrix next = a * p * a.transpose() + q - g * w.ldlt().solve(g.transpose());
    next = 0.5 * (next + next.transpose());
    const double change = (next - p).cwiseAbs().maxCoeff();
    p = next;
    if (change <= 1e-16 * std::max(1.0, p.cwiseAbs().maxCoeff())) break;
  }
  return p;
}

/// Characteristic polynomial coefficients c_0..c_n (c_n = 1) by
/// Faddeev-LeVerrier; det(lambda I - M) = sum c_k lambda^k.
inline std::vector<double> char_poly(const Matrix& m) {
  const auto n = m.rows();
  std::vector<double> c(static_cast<std::size_t>(n + 1));
  c[static_cast<std::size_t>(n)] = 1.0;
  Matrix mk = Matrix::Zero(n, n);
  const Matrix id = Matrix::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    mk = m * mk + c[static_cast<std::size_t>(n - k + 1)] * id;
    c[static_cast<std::size_t>(n - k)] = -(m * mk).trace() / static_cast<double>(k);
  }
  return c;
}

/// |p(lambda)| / sum |c_k| |lambda|^k
inline double char_poly_residual(const std::vector<double>& c, std::complex<double> lambda) {
  std::complex<double> v = 0.0;
  double scale = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) {
    v = v * lambda + c[k];
    scale = scale * std::abs(lambda) + std::abs(c[k]);
  }
  return std::abs(v) / scale;
}

/// Lorenz Jacobian determinant in closed form.
inline double lorenz_det(double sigma, double rho, double beta, const Vector& y) {
  return sigma * (beta * (rho - 1.0 - y(2)) - y(0) * (y(0) + y(1)));
}

/// Scalar-source closed form for A = [[-1, c], [0, -1]], Sigma = I.
inline double two_var_rate(double c) { return std::sqrt(1.0 + c * c) - 1.0; }

inline double rel_err(double x, double ref) {
  return ref == 0.0 ? std::abs(x) : std::abs(x - ref) / std::abs(ref);
}

}  // namespace testing_support
