// SPDX-License-Identifier: Apache-2.0
//
// Dense real linear algebra: matrix exponential, Sylvester/Lyapunov solvers
// (Bartels-Stewart on the complex Schur form), the filter-form continuous
// algebraic Riccati equation via the ordered Schur form of its Hamiltonian,
// a doubling solver for the discrete Riccati equation, the PBH detectability
// test and Van Loan's integral.
//
// Every function here is pure; nothing keeps state between calls.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace vougc::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using Index = std::size_t;

inline constexpr double kSymTol = 1e-12;
inline constexpr double kStabTol = 1e-9;
inline constexpr double kPbhTol = 1e-10;

struct Spectrum {
  std::vector<std::complex<double>> eigenvalues;
  double maxRealPart = 0.0;
};

/// max |M| over all entries (0 for an empty matrix).
double max_abs(const Matrix& m);

/// max|M - M^T| <= tol * max(1, max|M|).
bool is_symmetric(const Matrix& m, double tol = kSymTol);

bool all_finite(const Matrix& m);

/// (M + M^T) / 2
Matrix symmetrize(const Matrix& m);

/// Rows/cols picked by index list, in list order.
Matrix gather(const Matrix& m, std::span<const Index> rows, std::span<const Index> cols);

Spectrum spectrum(const Matrix& m);

/// e^{M t}; scaling-and-squaring with a degree-13 Pade approximant.
Matrix expm(const Matrix& m, double t = 1.0);

/// Solves A X + X B = C.
Matrix sylvester_solve(const Matrix& a, const Matrix& b, const Matrix& c);

/// Solves A X + X A^T + Q = 0 for symmetric X. Throws singular_equation when
/// two eigenvalues of A (nearly) sum to zero.
Matrix lyapunov_solve(const Matrix& a, const Matrix& q);

/// max|A X + X A^T + Q|
double lyapunov_residual(const Matrix& a, const Matrix& q, const Matrix& x);

struct CareSolution {
  Matrix P;
  Spectrum closedLoop;  ///< spectrum of Ahat - P R
  double residual = 0.0;        ///< max|Ahat P + P Ahat^T - P R P + Qhat|
  double relativeResidual = 0.0;  ///< residual / scale of the equation's terms
  bool marginal = false;          ///< closed-loop max real part in (-stabTol, stabTol)
  bool refined = false;           ///< a Newton step was applied
};

/// Filter-form CARE  Ahat P + P Ahat^T - P R P + Qhat = 0, stabilising solution.
///
/// The stable invariant subspace of the Hamiltonian [[Ahat^T, -R], [-Qhat, -Ahat]]
/// is read off an ordered complex Schur form; one Newton (Kleinman) step polishes
/// the result when the closed loop is strictly stable. The problem is balanced
/// with a power-of-two scaling of P first, so results are (nearly) invariant
/// under Qhat -> nu Qhat, R -> R / nu.
CareSolution care_solve(const Matrix& ahat, const Matrix& r, const Matrix& qhat);

double care_residual(const Matrix& ahat, const Matrix& r, const Matrix& qhat, const Matrix& p);

struct DareSolution {
  Matrix P;
  double residual = 0.0;
  double relativeResidual = 0.0;
  double closedLoopRadius = 0.0;
  int iterations = 0;
};

/// Filter-form DARE with cross term:
///   P = A P A^T + Q - (A P C^T + S)(C P C^T + Rm)^{-1}(A P C^T + S)^T
/// solved by the structure-preserving doubling algorithm.
DareSolution dare_solve(const Matrix& a, const Matrix& c, const Matrix& q, const Matrix& s,
                        const Matrix& rm);

double dare_residual(const Matrix& a, const Matrix& c, const Matrix& q, const Matrix& s,
                     const Matrix& rm, const Matrix& p);

/// PBH test: [lambda I - A33; C] has full column rank at every eigenvalue of
/// A33 with Re(lambda) >= -tol. Rank threshold is tol * sigma_max.
bool pbh_detectable(const Matrix& a33, const Matrix& c, double tol = kPbhTol);

/// int_0^h e^{A u} Q e^{A^T u} du via Van Loan's block exponential.
Matrix van_loan_integral(const Matrix& a, const Matrix& q, double h);

}  // namespace vougc::linalg
