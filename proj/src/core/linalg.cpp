// SPDX-License-Identifier: Apache-2.0
#include "core/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "core/errors.hpp"

namespace vougc::linalg {

namespace {

using Complex = std::complex<double>;

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << what << " must be square, got " << m.rows() << "x" << m.cols();
    throw Error(Errc::dimension, os.str());
  }
}

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << what << " must be " << rows << "x" << cols << ", got " << m.rows() << "x" << m.cols();
    throw Error(Errc::dimension, os.str());
  }
}

void require_symmetric(const Matrix& m, const char* what) {
  if (!is_symmetric(m)) throw Error(Errc::validation, std::string(what) + " is not symmetric");
}

std::vector<Complex> diagonal_of(const CMatrix& t) {
  std::vector<Complex> out(static_cast<std::size_t>(t.rows()));
  for (Eigen::Index i = 0; i < t.rows(); ++i) out[static_cast<std::size_t>(i)] = t(i, i);
  return out;
}

// Swaps the adjacent diagonal entries k, k+1 of the upper-triangular T in
// M = Z T Z^H with a single unitary rotation.
void swap_adjacent(CMatrix& t, CMatrix& z, Eigen::Index k) {
  const Complex t11 = t(k, k);
  const Complex t22 = t(k + 1, k + 1);
  // Eigenvector of the 2x2 block for t22; it becomes the first Schur vector.
  const Complex x0 = t(k, k + 1);
  const Complex x1 = t22 - t11;
  const double nrm = std::hypot(std::abs(x0), std::abs(x1));
  if (nrm == 0.0) return;
  const Complex c = x0 / nrm;
  const Complex s = x1 / nrm;
  // Q = [[c, -conj(s)], [s, conj(c)]]
  const Eigen::Index n = t.rows();
  for (Eigen::Index j = 0; j < n; ++j) {  // T <- Q^H T
    const Complex a = t(k, j);
    const Complex b = t(k + 1, j);
    t(k, j) = std::conj(c) * a + std::conj(s) * b;
    t(k + 1, j) = -s * a + c * b;
  }
  for (Eigen::Index i = 0; i < n; ++i) {  // T <- T Q
    const Complex a = t(i, k);
    const Complex b = t(i, k + 1);
    t(i, k) = a * c + b * s;
    t(i, k + 1) = -a * std::conj(s) + b * std::conj(c);
  }
  for (Eigen::Index i = 0; i < z.rows(); ++i) {  // Z <- Z Q
    const Complex a = z(i, k);
    const Complex b = z(i, k + 1);
    z(i, k) = a * c + b * s;
    z(i, k + 1) = -a * std::conj(s) + b * std::conj(c);
  }
  t(k, k) = t22;
  t(k + 1, k + 1) = t11;
  t(k + 1, k) = Complex(0.0, 0.0);
}

// Reorders a complex Schur form so that the `count` eigenvalues with the
// smallest real parts occupy the leading diagonal positions.
void order_schur_leading_left(CMatrix& t, CMatrix& z, Eigen::Index count) {
  const Eigen::Index n = t.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return t(a, a).real() < t(b, b).real();
  });
  std::vector<char> selected(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < count; ++i) selected[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;

  Eigen::Index pos = 0;
  for (Eigen::Index k = 0; k < n && pos < count; ++k) {
    if (!selected[static_cast<std::size_t>(k)]) continue;
    for (Eigen::Index j = k; j > pos; --j) {
      swap_adjacent(t, z, j - 1);
      std::swap(selected[static_cast<std::size_t>(j - 1)], selected[static_cast<std::size_t>(j)]);
    }
    ++pos;
  }
}

double care_scale(const Matrix& ahat, const Matrix& r, const Matrix& qhat, const Matrix& p) {
  const double s = std::max({max_abs(ahat * p), max_abs(p * r * p), max_abs(qhat)});
  return s > 0.0 ? s : 1.0;
}

double pow2_round(double x) { return std::exp2(std::round(std::log2(x))); }

}  // namespace

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  return max_abs(m - m.transpose()) <= tol * std::max(1.0, max_abs(m));
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix gather(const Matrix& m, std::span<const Index> rows, std::span<const Index> cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          m(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
    }
  }
  return out;
}

Spectrum spectrum(const Matrix& m) {
  require_square(m, "spectrum argument");
  Spectrum out;
  out.maxRealPart = -std::numeric_limits<double>::infinity();
  if (m.size() == 0) return out;
  if (m.rows() == 1) {
    out.eigenvalues = {Complex(m(0, 0), 0.0)};
    out.maxRealPart = m(0, 0);
    return out;
  }
  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw Error(Errc::convergence, "eigenvalue iteration failed");
  const auto& ev = es.eigenvalues();
  out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  for (const auto& l : out.eigenvalues) out.maxRealPart = std::max(out.maxRealPart, l.real());
  return out;
}

Matrix expm(const Matrix& m, double t) {
  require_square(m, "expm argument");
  if (m.size() == 0) return m;
  const Matrix scaled = m * t;
  return scaled.exp();
}

Matrix sylvester_solve(const Matrix& a, const Matrix& b, const Matrix& c) {
  require_square(a, "Sylvester A");
  require_square(b, "Sylvester B");
  require_shape(c, a.rows(), b.rows(), "Sylvester C");
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.rows();
  if (n == 0 || m == 0) return Matrix::Zero(n, m);

  Eigen::ComplexSchur<CMatrix> sa(a.cast<Complex>());
  Eigen::ComplexSchur<CMatrix> sb(b.cast<Complex>());
  if (sa.info() != Eigen::Success || sb.info() != Eigen::Success)
    throw Error(Errc::convergence, "Schur decomposition failed");
  const CMatrix& ta = sa.matrixT();
  const CMatrix& tb = sb.matrixT();
  const CMatrix& ua = sa.matrixU();
  const CMatrix& ub = sb.matrixU();

  const double tol = 1e-12 * std::max({max_abs(a), max_abs(b), std::numeric_limits<double>::min()});
  CMatrix f = ua.adjoint() * c.cast<Complex>() * ub;
  CMatrix y = CMatrix::Zero(n, m);
  // Ta Y + Y Tb = F with both factors upper triangular: rows bottom-up,
  // columns left-to-right.
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      Complex rhs = f(i, j);
      for (Eigen::Index k = i + 1; k < n; ++k) rhs -= ta(i, k) * y(k, j);
      for (Eigen::Index k = 0; k < j; ++k) rhs -= y(i, k) * tb(k, j);
      const Complex d = ta(i, i) + tb(j, j);
      if (std::abs(d) <= tol) {
        std::ostringstream os;
        os << "matrix equation is singular: eigenvalues " << ta(i, i) << " and " << tb(j, j)
           << " sum to (nearly) zero";
        throw Error(Errc::singular_equation, os.str());
      }
      y(i, j) = rhs / d;
    }
  }
  return (ua * y * ub.adjoint()).real();
}

Matrix lyapunov_solve(const Matrix& a, const Matrix& q) {
  require_square(a, "Lyapunov A");
  require_shape(q, a.rows(), a.rows(), "Lyapunov Q");
  require_symmetric(q, "Lyapunov Q");
  return symmetrize(sylvester_solve(a, a.transpose(), -q));
}

double lyapunov_residual(const Matrix& a, const Matrix& q, const Matrix& x) {
  return max_abs(a * x + x * a.transpose() + q);
}

double care_residual(const Matrix& ahat, const Matrix& r, const Matrix& qhat, const Matrix& p) {
  return max_abs(ahat * p + p * ahat.transpose() - p * r * p + qhat);
}

CareSolution care_solve(const Matrix& ahat, const Matrix& r, const Matrix& qhat) {
  require_square(ahat, "CARE Ahat");
  const Eigen::Index m = ahat.rows();
  require_shape(r, m, m, "CARE R");
  require_shape(qhat, m, m, "CARE Qhat");
  require_symmetric(r, "CARE R");
  require_symmetric(qhat, "CARE Qhat");
  CareSolution out;
  if (m == 0) {
    out.P = Matrix(0, 0);
    out.closedLoop.maxRealPart = -std::numeric_limits<double>::infinity();
    return out;
  }

  // Balance: P = alpha * Pt with alpha a power of two, so the scaling is exact.
  const double qn = max_abs(qhat);
  const double rn = max_abs(r);
  const double alpha = (qn > 0.0 && rn > 0.0) ? pow2_round(std::sqrt(qn / rn)) : 1.0;
  const Matrix rs = r * alpha;
  const Matrix qs = qhat / alpha;

  Matrix h(2 * m, 2 * m);
  h << ahat.transpose(), -rs, -qs, -ahat;

  Eigen::ComplexSchur<CMatrix> schur(h.cast<Complex>());
  if (schur.info() != Eigen::Success)
    throw Error(Errc::convergence, "Schur decomposition of the Hamiltonian failed");
  CMatrix t = schur.matrixT();
  CMatrix z = schur.matrixU();
  const std::vector<Complex> hspec = diagonal_of(t);
  order_schur_leading_left(t, z, m);

  auto no_solution = [&](const std::string& why) {
    return NoSolutionError("CARE has no stabilising solution: " + why, hspec);
  };

  if (t(m - 1, m - 1).real() >= kStabTol)
    throw no_solution("stable invariant subspace of the Hamiltonian is deficient");

  const CMatrix u1 = z.topLeftCorner(m, m);
  const CMatrix u2 = z.bottomLeftCorner(m, m);
  Eigen::FullPivLU<CMatrix> lu(u1.transpose());
  if (lu.rank() < m || lu.rcond() < 1e-14) throw no_solution("Schur basis is not a graph subspace");
  Matrix ps = symmetrize(lu.solve(u2.transpose()).transpose().real());

  Matrix closed = ahat - ps * rs;
  Spectrum cl = spectrum(closed);
  if (cl.maxRealPart >= kStabTol) throw no_solution("closed loop is not Hurwitz");

  bool refined = false;
  if (cl.maxRealPart <= -kStabTol) {
    // Kleinman step: (Ahat - P R) X + X (Ahat - P R)^T + Qhat + P R P = 0.
    try {
      Matrix next = symmetrize(lyapunov_solve(closed, symmetrize(qs + ps * rs * ps)));
      if (care_residual(ahat, rs, qs, next) < care_residual(ahat, rs, qs, ps)) {
        Matrix next_closed = ahat - next * rs;
        Spectrum next_cl = spectrum(next_closed);
        if (next_cl.maxRealPart < 0.0) {
          ps = std::move(next);
          cl = std::move(next_cl);
          refined = true;
        }
      }
    } catch (const Error&) {
      // keep the Schur solution
    }
  }

  out.P = symmetrize(ps * alpha);
  out.closedLoop = std::move(cl);
  out.marginal = out.closedLoop.maxRealPart > -kStabTol;
  out.refined = refined;
  out.residual = care_residual(ahat, r, qhat, out.P);
  out.relativeResidual = out.residual / care_scale(ahat, r, qhat, out.P);
  if (!(out.relativeResidual <= 1e-8)) {
    std::ostringstream os;
    os << "CARE residual " << out.relativeResidual << " (relative) exceeds 1e-8";
    throw Error(Errc::convergence, os.str());
  }
  return out;
}

double dare_residual(const Matrix& a, const Matrix& c, const Matrix& q, const Matrix& s,
                     const Matrix& rm, const Matrix& p) {
  const Matrix g = a * p * c.transpose() + s;
  const Matrix v = c * p * c.transpose() + rm;
  return max_abs(a * p * a.transpose() + q - g * v.ldlt().solve(g.transpose()) - p);
}

DareSolution dare_solve(const Matrix& a, const Matrix& c, const Matrix& q, const Matrix& s,
                        const Matrix& rm) {
  require_square(a, "DARE A");
  const Eigen::Index n = a.rows();
  const Eigen::Index k = c.rows();
  require_shape(c, k, n, "DARE C");
  require_shape(q, n, n, "DARE Q");
  require_shape(s, n, k, "DARE S");
  require_shape(rm, k, k, "DARE Rm");
  require_symmetric(q, "DARE Q");
  require_symmetric(rm, "DARE Rm");
  Eigen::LLT<Matrix> rchol(rm);
  if (rchol.info() != Eigen::Success) throw Error(Errc::validation, "DARE Rm is not positive-definite");

  DareSolution out;
  if (n == 0) {
    out.P = Matrix(0, 0);
    return out;
  }

  // Remove the cross term: At = A - S Rm^-1 C, Qt = Q - S Rm^-1 S^T.
  const Matrix at = a - s * rchol.solve(c);
  const Matrix qt = symmetrize(q - s * rchol.solve(s.transpose()));
  const Matrix id = Matrix::Identity(n, n);

  Matrix ak = at.transpose();
  Matrix gk = symmetrize(c.transpose() * rchol.solve(c));
  Matrix hk = qt;
  constexpr int kMaxIterations = 100;
  int it = 0;
  for (; it < kMaxIterations; ++it) {
    const Matrix w = id + gk * hk;
    Eigen::PartialPivLU<Matrix> lu(w);
    const Matrix v1 = lu.solve(ak);
    const Matrix v2 = lu.solve(gk);
    Matrix hn = symmetrize(hk + ak.transpose() * hk * v1);
    Matrix gn = symmetrize(gk + ak * v2 * ak.transpose());
    Matrix an = ak * v1;
    if (!hn.allFinite() || !gn.allFinite() || !an.allFinite())
      throw Error(Errc::no_solution, "DARE doubling iteration diverged");
    const double change = max_abs(hn - hk);
    hk = std::move(hn);
    gk = std::move(gn);
    ak = std::move(an);
    if (change <= 1e-15 * std::max(max_abs(hk), std::numeric_limits<double>::min())) {
      ++it;
      break;
    }
  }
  if (it >= kMaxIterations) throw Error(Errc::no_solution, "DARE doubling iteration did not converge");

  out.P = hk;
  out.iterations = it;
  const Matrix v = c * out.P * c.transpose() + rm;
  const Matrix gain = (a * out.P * c.transpose() + s) * v.ldlt().solve(Matrix::Identity(k, k));
  const Spectrum cl = spectrum(a - gain * c);
  double radius = 0.0;
  for (const auto& l : cl.eigenvalues) radius = std::max(radius, std::abs(l));
  out.closedLoopRadius = radius;
  if (radius >= 1.0) throw Error(Errc::no_solution, "DARE solution is not stabilising");
  out.residual = dare_residual(a, c, q, s, rm, out.P);
  const double scale =
      std::max({max_abs(a * out.P * a.transpose()), max_abs(q), max_abs(out.P), 1e-300});
  out.relativeResidual = out.residual / scale;
  if (!(out.relativeResidual <= 1e-8)) {
    std::ostringstream os;
    os << "DARE residual " << out.relativeResidual << " (relative) exceeds 1e-8";
    throw Error(Errc::convergence, os.str());
  }
  return out;
}

bool pbh_detectable(const Matrix& a33, const Matrix& c, double tol) {
  require_square(a33, "PBH A33");
  const Eigen::Index m = a33.rows();
  if (c.cols() != m) throw Error(Errc::dimension, "PBH C must have as many columns as A33");
  if (m == 0) return true;
  const Spectrum sp = spectrum(a33);
  const Eigen::Index k = c.rows();
  for (const auto& lambda : sp.eigenvalues) {
    if (lambda.real() < -tol) continue;
    CMatrix stacked(m + k, m);
    stacked.topRows(m) = -a33.cast<Complex>();
    stacked.topRows(m).diagonal().array() += lambda;
    if (k > 0) stacked.bottomRows(k) = c.cast<Complex>();
    Eigen::JacobiSVD<CMatrix> svd(stacked);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > tol * smax) ++rank;
    if (rank < m) return false;
  }
  return true;
}

Matrix van_loan_integral(const Matrix& a, const Matrix& q, double h) {
  require_square(a, "Van Loan A");
  const Eigen::Index n = a.rows();
  require_shape(q, n, n, "Van Loan Q");
  if (!(h >= 0.0)) throw Error(Errc::domain, "integration horizon must be nonnegative");
  if (h == 0.0 || n == 0) return Matrix::Zero(n, n);
  Matrix m = Matrix::Zero(2 * n, 2 * n);
  m.topLeftCorner(n, n) = a;
  m.topRightCorner(n, n) = q;
  m.bottomRightCorner(n, n) = -a.transpose();
  const Matrix e = expm(m, h);
  return symmetrize(e.topRightCorner(n, n) * e.topLeftCorner(n, n).transpose());
}

}  // namespace vougc::linalg
