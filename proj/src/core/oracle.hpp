// SPDX-License-Identifier: Apache-2.0
//
// Discrete-time cross-check for the closed-form rates: sample the VOU at
// interval dt to get a VAR(1), compute its Granger causality from the
// reduced discrete Riccati equation, and divide by dt.
//
// Restricted to Hurwitz-stable drift: the sampled covariance is built from
// the stationary Lyapunov solution.
#pragma once

#include <vector>

#include "core/vou.hpp"

namespace vougc::oracle {

struct Var1Model {
  Matrix Abar;      ///< e^{A dt}
  Matrix SigmaBar;  ///< innovation covariance
};

/// Stationary covariance Omega (A Omega + Omega A^T + Sigma = 0) alongside the
/// sampled model, for callers that want to check the stationarity identity.
struct Subsampled {
  Var1Model var1;
  Matrix Omega;
};

Subsampled subsample_detail(const VouModel& model, double dt);
Var1Model subsample(const VouModel& model, double dt);

struct DiscreteGc {
  double F = 0.0;    ///< log(|Sigma^R_11| / |SigmaBar_11|)
  Matrix P33bar;     ///< stabilising solution of the reduced DARE
  Matrix SigmaR;     ///< reduced innovations covariance, reduced() order
  int dareIterations = 0;
  double dareResidual = 0.0;
};

DiscreteGc discrete_ss_gc_detail(const Var1Model& var1, const Partition& part);
double discrete_ss_gc(const Var1Model& var1, const Partition& part);

/// F(dt) / dt
double rate_via_subsampling(const VouModel& model, const Partition& part, double dt);

struct ConvergenceRow {
  double dt = 0.0;
  double estimate = 0.0;  ///< F(dt)/dt
  double analytic = 0.0;
  double relError = 0.0;  ///< |estimate - analytic| / analytic (absolute when analytic == 0)
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  double analytic = 0.0;
  /// Least-squares slope of log|error| against log dt; NaN when fewer than two
  /// rows carry a nonzero error.
  double slope = 0.0;
};

ConvergenceReport convergence_check(const VouModel& model, const Partition& part,
                                    const std::vector<double>& dts);

}  // namespace vougc::oracle
