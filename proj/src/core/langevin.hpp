// SPDX-License-Identifier: Apache-2.0
//
// Langevin systems  dy = f(y) dt + dw(y, t),  dw ~ N(0, Sigma(y) dt),
// and their local linearisation to a VOU model around a phase-space point.
#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "core/expr.hpp"
#include "core/vou.hpp"

namespace vougc::langevin {

using vougc::Matrix;
using vougc::Vector;

inline constexpr double kSingTol = 1e-10;

struct ScalarDiffusion {
  double nu = 1.0;  ///< Sigma(y) = nu * I
};
struct MatrixDiffusion {
  Matrix sigma;
};
struct ExprDiffusion {
  std::vector<Expr> entries;  ///< n*n, row-major
};
using DiffusionSpec = std::variant<ScalarDiffusion, MatrixDiffusion, ExprDiffusion>;

class LangevinSystem {
 public:
  using DriftFn = std::function<void(std::span<const double> y, std::span<double> out)>;
  using JacobianFn = std::function<void(std::span<const double> y, Matrix& out)>;

  /// System given by drift expressions; the Jacobian is derived symbolically.
  static LangevinSystem from_expressions(std::size_t n, std::vector<std::string> paramNames,
                                         std::vector<double> paramValues, std::vector<Expr> drift,
                                         DiffusionSpec diffusion);

  /// System with a compiled drift. Without a Jacobian callback the Jacobian
  /// falls back to central differences.
  static LangevinSystem from_functions(std::size_t n, DriftFn drift, JacobianFn jacobian,
                                       DiffusionSpec diffusion, std::string name = {});

  std::size_t dim() const noexcept { return n_; }
  const std::string& name() const noexcept { return name_; }

  void drift(std::span<const double> y, std::span<double> out) const;
  Vector drift(const Vector& y) const;

  bool has_analytic_jacobian() const noexcept { return static_cast<bool>(jacobian_); }
  Matrix jacobian(const Vector& y) const;
  /// Central differences, step cbrt(eps) * max(1, |y_i|).
  Matrix jacobian_fd(const Vector& y) const;

  Matrix diffusion(const Vector& y) const;
  const DiffusionSpec& diffusion_spec() const noexcept { return diffusion_; }

  /// Empty for compiled systems.
  const std::vector<Expr>& drift_exprs() const noexcept { return driftExprs_; }
  const std::vector<Expr>& jacobian_exprs() const noexcept { return jacExprs_; }
  const std::vector<std::string>& param_names() const noexcept { return paramNames_; }
  const std::vector<double>& param_values() const noexcept { return paramValues_; }

 private:
  LangevinSystem() = default;
  void validate_diffusion() const;

  std::size_t n_ = 0;
  std::string name_;
  DriftFn drift_;
  JacobianFn jacobian_;
  DiffusionSpec diffusion_;
  std::vector<Expr> driftExprs_;
  std::vector<Expr> jacExprs_;
  std::vector<std::string> paramNames_;
  std::vector<double> paramValues_;
};

/// Parses a system-definition document:
///
///   [system]   n = <count>
///   [params]   <name> = <constant expression>      (may use earlier params)
///   [drift]    dyK = <expression>                  (one per K = 1..n)
///   [sigma]    scalar = <nu>
///            | n rows of n numbers
///            | sIJ = <expression>                  (all n*n entries)
///
/// `#` starts a comment. [sigma] defaults to `scalar = 1`.
LangevinSystem parse_system(std::string_view text);

/// Lorenz system with hand-coded Jacobian and Sigma = nu * I.
LangevinSystem builtin_lorenz(double sigma = 10.0, double rho = 28.0, double beta = 8.0 / 3.0,
                              double nu = 1.0);

/// f(y) = A y with constant diffusion Sigma.
LangevinSystem linear_system(const Matrix& a, const Matrix& sigma);

struct LocalLinearization {
  Vector point;
  VouModel vou;
  double detJ = 0.0;
  double stabilityExponent = 0.0;  ///< max real part of the Jacobian spectrum
  bool singular = false;           ///< |detJ| <= singTol * max(1, ||J||_inf)
};

LocalLinearization linearize(const LangevinSystem& system, const Vector& y0);

}  // namespace vougc::langevin
