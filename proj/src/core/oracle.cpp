// SPDX-License-Identifier: Apache-2.0
#include "core/oracle.hpp"

#include <cmath>
#include <limits>

#include "core/errors.hpp"

namespace vougc::oracle {

using linalg::gather;
using linalg::max_abs;
using linalg::symmetrize;

Subsampled subsample_detail(const VouModel& model, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(Errc::domain, "sampling interval must be positive");
  if (linalg::spectrum(model.A()).maxRealPart >= 0.0)
    throw Error(Errc::unsupported, "subsampling oracle requires a Hurwitz-stable drift matrix");
  Subsampled out;
  out.Omega = linalg::lyapunov_solve(model.A(), model.Sigma());
  out.var1.Abar = linalg::expm(model.A(), dt);
  out.var1.SigmaBar =
      symmetrize(out.Omega - out.var1.Abar * out.Omega * out.var1.Abar.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(out.var1.SigmaBar, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, max_abs(out.Omega)))
    throw Error(Errc::degenerate, "sampled innovation covariance is not positive-semidefinite");
  return out;
}

Var1Model subsample(const VouModel& model, double dt) { return subsample_detail(model, dt).var1; }

DiscreteGc discrete_ss_gc_detail(const Var1Model& var1, const Partition& part) {
  if (part.dim() != static_cast<std::size_t>(var1.Abar.rows()))
    throw Error(Errc::dimension, "partition dimension does not match model");
  const std::vector<Index> red = part.reduced();
  const std::vector<Index>& s3 = part.source();
  const std::vector<Index>& t = part.target();
  const auto nt = static_cast<Eigen::Index>(t.size());

  const Matrix a33 = gather(var1.Abar, s3, s3);
  const Matrix ar3 = gather(var1.Abar, red, s3);
  const Matrix s33 = symmetrize(gather(var1.SigmaBar, s3, s3));
  const Matrix s3r = gather(var1.SigmaBar, s3, red);
  const Matrix srr = symmetrize(gather(var1.SigmaBar, red, red));
  if (Eigen::LLT<Matrix>(srr).info() != Eigen::Success)
    throw Error(Errc::degenerate, "sampled Sigma_RR is not positive-definite");

  const linalg::DareSolution dare = linalg::dare_solve(a33, ar3, s33, s3r, srr);

  DiscreteGc out;
  out.P33bar = dare.P;
  out.dareIterations = dare.iterations;
  out.dareResidual = dare.relativeResidual;
  const Matrix excess = symmetrize(ar3 * dare.P * ar3.transpose());
  out.SigmaR = excess + srr;
  out.F = log_det_ratio(srr.topLeftCorner(nt, nt), excess.topLeftCorner(nt, nt));
  return out;
}

double discrete_ss_gc(const Var1Model& var1, const Partition& part) {
  return discrete_ss_gc_detail(var1, part).F;
}

double rate_via_subsampling(const VouModel& model, const Partition& part, double dt) {
  return discrete_ss_gc(subsample(model, dt), part) / dt;
}

ConvergenceReport convergence_check(const VouModel& model, const Partition& part,
                                    const std::vector<double>& dts) {
  ConvergenceReport rep;
  rep.analytic = conditional_rate(model, part).rate;
  std::vector<double> xs;
  std::vector<double> ys;
  for (double dt : dts) {
    ConvergenceRow row;
    row.dt = dt;
    row.analytic = rep.analytic;
    row.estimate = rate_via_subsampling(model, part, dt);
    const double err = std::abs(row.estimate - rep.analytic);
    row.relError = rep.analytic != 0.0 ? err / rep.analytic : err;
    if (err > 0.0) {
      xs.push_back(std::log(dt));
      ys.push_back(std::log(err));
    }
    rep.rows.push_back(row);
  }
  rep.slope = std::numeric_limits<double>::quiet_NaN();
  if (xs.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      mx += xs[k];
      my += ys[k];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      sxy += (xs[k] - mx) * (ys[k] - my);
      sxx += (xs[k] - mx) * (xs[k] - mx);
    }
    if (sxx > 0.0) rep.slope = sxy / sxx;
  }
  return rep;
}

}  // namespace vougc::oracle
