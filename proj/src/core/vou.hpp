// SPDX-License-Identifier: Apache-2.0
//
// Granger-causality rates of vector Ornstein-Uhlenbeck processes
//
//   dy = A y dt + dw,   dw ~ N(0, Sigma dt)
//
// computed in closed form from the stabilising solution of a continuous-time
// algebraic Riccati equation in the source block. The drift matrix may be
// unstable provided (A33, A_R3) is detectable.
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "core/linalg.hpp"

namespace vougc {

using linalg::Index;
using linalg::Matrix;
using linalg::Vector;

inline constexpr double kPdTol = 1e-12;

/// Drift matrix A and noise intensity Sigma (symmetric positive-definite).
class VouModel {
 public:
  /// Validates and builds a model. Throws dimension/validation errors for
  /// shape or finiteness problems and ill_conditioned if Sigma fails the
  /// Cholesky pivot test (pivots > pdTol * max diag).
  static VouModel create(Matrix a, Matrix sigma);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(a_.rows()); }
  const Matrix& A() const noexcept { return a_; }
  const Matrix& Sigma() const noexcept { return sigma_; }

  /// Same drift, Sigma -> nu * Sigma.
  VouModel scaled(double nu) const;

 private:
  VouModel(Matrix a, Matrix sigma) : a_(std::move(a)), sigma_(std::move(sigma)) {}
  Matrix a_;
  Matrix sigma_;
};

/// Target / conditioning / source index sets (0-based) covering all of 0..n-1.
class Partition {
 public:
  static Partition create(std::size_t n, std::vector<Index> target, std::vector<Index> cond,
                          std::vector<Index> source);

  std::size_t dim() const noexcept { return n_; }
  const std::vector<Index>& target() const noexcept { return target_; }
  const std::vector<Index>& cond() const noexcept { return cond_; }
  const std::vector<Index>& source() const noexcept { return source_; }
  /// target followed by cond.
  std::vector<Index> reduced() const;

 private:
  Partition() = default;
  std::size_t n_ = 0;
  std::vector<Index> target_;
  std::vector<Index> cond_;
  std::vector<Index> source_;
};

struct GcFlags {
  bool detectable = true;
  bool sourceDecoupled = false;
  bool marginal = false;
};

struct GcResult {
  double rate = 0.0;    ///< nats per unit time
  double teRate = 0.0;  ///< rate / 2
  Matrix P33;           ///< stabilising Riccati solution; 0x0 when the source is decoupled
  Matrix kalmanGain;    ///< (P33 A_R3^T + Sigma_3R) Sigma_RR^{-1}, columns in reduced() order
  double closedLoopMaxRe = 0.0;
  GcFlags flags;
  double residual = 0.0;  ///< Riccati residual relative to the equation's scale
};

struct GcOptions {
  /// Route single-variable sources through the Hamiltonian CARE solver
  /// instead of the closed-form quadratic root.
  bool forceHamiltonian = false;
};

/// Rate from source to target conditional on cond.
GcResult conditional_rate(const VouModel& model, const Partition& part, const GcOptions& opts = {});

/// Unconditional rate from source to target; the remaining variables take
/// the role of the auxiliary block:  R(y2->y1) = R(y23->y1) - R(y3->y1 | y2).
GcResult unconditional_rate(const VouModel& model, std::span<const Index> target,
                            std::span<const Index> source, const GcOptions& opts = {});

/// rates(i, j) is the causality from j to i; the diagonal is NaN.
/// Cells that failed hold NaN and a non-empty reason.
struct GcGraph {
  std::size_t n = 0;
  Matrix rates;
  std::vector<std::string> reasons;  ///< row-major n*n, empty = defined

  bool defined(std::size_t i, std::size_t j) const {
    return i != j && reasons[i * n + j].empty();
  }
  const std::string& reason(std::size_t i, std::size_t j) const { return reasons[i * n + j]; }
};

/// Pairwise-conditional graph: source j, target i, conditioning on the rest.
GcGraph pairwise_graph(const VouModel& model);

/// Unconditional pairwise graph: R(y_j -> y_i) for every ordered pair.
GcGraph unconditional_graph(const VouModel& model);

/// Finite-horizon causality F(h) = log(|E^R_11(h)| / |E_11(h)|) from the
/// exact VOU prediction-error covariances.
double finite_horizon_gc(const VouModel& model, const Partition& part, double h);

/// Log-determinant ratio log det(B + D) / det(B) for symmetric positive
/// definite B, evaluated as sum(log1p(mu)) over the eigenvalues mu of
/// L^{-1} D L^{-T}. Throws degenerate when B is not positive-definite or
/// B + D is singular.
double log_det_ratio(const Matrix& base, const Matrix& increment);

}  // namespace vougc
