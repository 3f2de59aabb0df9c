// SPDX-License-Identifier: Apache-2.0
#include "core/vou.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "core/errors.hpp"

namespace vougc {

namespace {

using linalg::gather;
using linalg::max_abs;
using linalg::symmetrize;

// Cholesky factor of a covariance block with the pivot test
// d_k > pdTol * max diag applied to an LDLT factorisation.
Eigen::LLT<Matrix> checked_cholesky(const Matrix& s, const char* what) {
  if (s.size() == 0) return Eigen::LLT<Matrix>(s);
  Eigen::LDLT<Matrix> ldlt(s);
  const double maxdiag = s.diagonal().cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > kPdTol * maxdiag)) {
    throw Error(Errc::ill_conditioned, std::string(what) + " is numerically singular");
  }
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success)
    throw Error(Errc::ill_conditioned, std::string(what) + " is not positive-definite");
  return llt;
}

std::vector<Index> complement(std::size_t n, std::span<const Index> drop) {
  std::vector<char> mask(n, 1);
  for (Index i : drop) mask[i] = 0;
  std::vector<Index> out;
  for (Index i = 0; i < n; ++i)
    if (mask[i]) out.push_back(i);
  return out;
}

void check_index_list(std::size_t n, const std::vector<Index>& v, const char* what) {
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k] >= n) {
      std::ostringstream os;
      os << what << " index " << v[k] << " out of range for dimension " << n;
      throw Error(Errc::validation, os.str());
    }
    if (k > 0 && v[k] <= v[k - 1])
      throw Error(Errc::validation, std::string(what) + " indices must be strictly increasing");
  }
}

// Riccati solution for one source block; independent of how the remaining
// (reduced) indices are split into target and conditioning sets.
struct SourceSolution {
  std::vector<Index> source;
  std::vector<Index> reduced;  // sorted complement of source
  bool decoupled = false;
  bool detectable = true;
  bool marginal = false;
  Matrix p33;
  Matrix gain;  // columns follow `reduced`
  double closedLoopMaxRe = 0.0;
  double residual = 0.0;
};

SourceSolution solve_source(const VouModel& model, const std::vector<Index>& source,
                            const GcOptions& opts) {
  SourceSolution out;
  out.source = source;
  out.reduced = complement(model.dim(), source);
  const Matrix& a = model.A();
  const Matrix& sigma = model.Sigma();
  const auto& s3 = out.source;
  const auto& sr = out.reduced;

  const Matrix a33 = gather(a, s3, s3);
  const Matrix ar3 = gather(a, sr, s3);

  if (ar3.size() == 0 || (ar3.array() == 0.0).all()) {
    // The reduced block evolves without reference to the source.
    const linalg::Spectrum sp = linalg::spectrum(a33);
    if (sp.maxRealPart >= 0.0) {
      out.decoupled = true;
      out.detectable = false;
      out.p33 = Matrix(0, 0);
      out.gain = Matrix(0, 0);
      out.closedLoopMaxRe = sp.maxRealPart;
      return out;
    }
  } else if (!linalg::pbh_detectable(a33, ar3)) {
    throw Error(Errc::not_detectable, "(A33, A_R3) is not detectable");
  }

  const Matrix srr = gather(sigma, sr, sr);
  const Matrix s3r = gather(sigma, s3, sr);
  const Matrix s33 = gather(sigma, s3, s3);
  const Eigen::LLT<Matrix> chol = checked_cholesky(srr, "Sigma_RR");

  // Whitened blocks: W = L^{-1} A_R3, V = L^{-1} Sigma_R3.
  const Matrix w = chol.matrixL().solve(ar3);
  const Matrix v = chol.matrixL().solve(s3r.transpose());
  const Matrix ahat = a33 - v.transpose() * w;
  const Matrix r = symmetrize(w.transpose() * w);
  const Matrix qhat = symmetrize(s33 - v.transpose() * v);

  if (s3.size() == 1 && !opts.forceHamiltonian) {
    // a P^2 - 2 b P - q = 0, stabilising root.
    const double qa = r(0, 0);
    const double b = ahat(0, 0);
    const double q = qhat(0, 0);
    double p = 0.0;
    double closed = 0.0;
    if (qa == 0.0) {
      if (!(b < 0.0))
        throw NoSolutionError("CARE has no stabilising solution: decoupled source is not stable",
                              {std::complex<double>(b, 0.0), std::complex<double>(-b, 0.0)});
      p = q / (-2.0 * b);
      closed = b;
    } else {
      const double root = std::sqrt(b * b + qa * q);
      p = b >= 0.0 ? (b + root) / qa : q / (root - b);
      closed = -root;
    }
    out.p33 = Matrix::Constant(1, 1, p);
    out.closedLoopMaxRe = closed;
    out.marginal = closed > -linalg::kStabTol;
    const double scale = std::max({std::abs(qa * p * p), std::abs(2.0 * b * p), std::abs(q)});
    out.residual = scale > 0.0 ? std::abs(qa * p * p - 2.0 * b * p - q) / scale : 0.0;
  } else {
    linalg::CareSolution care = linalg::care_solve(ahat, r, qhat);
    out.p33 = std::move(care.P);
    out.closedLoopMaxRe = care.closedLoop.maxRealPart;
    out.marginal = care.marginal;
    out.residual = care.relativeResidual;
  }

  // K = (P33 A_R3^T + Sigma_3R) Sigma_RR^{-1}
  const Matrix kt = chol.solve((out.p33 * ar3.transpose() + s3r).transpose());
  out.gain = kt.transpose();
  return out;
}

// trace[Sigma_11^{-1} A_13 P33 A_13^T]
double rate_for_target(const VouModel& model, const std::vector<Index>& target,
                       const SourceSolution& sol) {
  if (sol.decoupled) return 0.0;
  const Matrix a13 = gather(model.A(), target, sol.source);
  const Eigen::LLT<Matrix> chol = checked_cholesky(gather(model.Sigma(), target, target), "Sigma_11");
  const Matrix x = chol.matrixL().solve(a13);
  const double rate = (x * sol.p33 * x.transpose()).trace();
  return std::max(rate, 0.0);
}

GcResult make_result(const SourceSolution& sol, const Partition& part, double rate) {
  GcResult r;
  r.rate = rate;
  r.teRate = rate / 2.0;
  r.P33 = sol.p33;
  r.closedLoopMaxRe = sol.closedLoopMaxRe;
  r.flags.detectable = sol.detectable;
  r.flags.sourceDecoupled = sol.decoupled;
  r.flags.marginal = sol.marginal;
  r.residual = sol.residual;
  if (!sol.decoupled) {
    const std::vector<Index> red = part.reduced();
    r.kalmanGain.resize(sol.gain.rows(), static_cast<Eigen::Index>(red.size()));
    for (std::size_t c = 0; c < red.size(); ++c) {
      const auto it = std::lower_bound(sol.reduced.begin(), sol.reduced.end(), red[c]);
      r.kalmanGain.col(static_cast<Eigen::Index>(c)) = sol.gain.col(it - sol.reduced.begin());
    }
  }
  return r;
}

GcGraph empty_graph(std::size_t n) {
  GcGraph g;
  g.n = n;
  g.rates = Matrix::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n),
                             std::numeric_limits<double>::quiet_NaN());
  g.reasons.assign(n * n, std::string());
  for (std::size_t i = 0; i < n; ++i) g.reasons[i * n + i] = "diagonal";
  return g;
}

std::string describe(const Error& e) { return std::string(errc_name(e.code())) + ": " + e.what(); }

}  // namespace

VouModel VouModel::create(Matrix a, Matrix sigma) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw Error(Errc::dimension, "drift matrix must be square and non-empty");
  if (sigma.rows() != a.rows() || sigma.cols() != a.cols())
    throw Error(Errc::dimension, "Sigma must have the same shape as A");
  if (!a.allFinite() || !sigma.allFinite())
    throw Error(Errc::validation, "model entries must be finite");
  if (!linalg::is_symmetric(sigma)) throw Error(Errc::validation, "Sigma is not symmetric");
  checked_cholesky(sigma, "Sigma");
  return VouModel(std::move(a), std::move(sigma));
}

VouModel VouModel::scaled(double nu) const {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw Error(Errc::domain, "scale factor must be positive");
  return VouModel(a_, sigma_ * nu);
}

Partition Partition::create(std::size_t n, std::vector<Index> target, std::vector<Index> cond,
                            std::vector<Index> source) {
  if (target.empty()) throw Error(Errc::validation, "target set is empty");
  if (source.empty()) throw Error(Errc::validation, "source set is empty");
  check_index_list(n, target, "target");
  check_index_list(n, cond, "conditioning");
  check_index_list(n, source, "source");
  std::vector<int> seen(n, 0);
  for (const auto* v : {&target, &cond, &source})
    for (Index i : *v) ++seen[i];
  for (std::size_t i = 0; i < n; ++i) {
    if (seen[i] > 1) throw Error(Errc::validation, "partition sets overlap at index " + std::to_string(i));
    if (seen[i] == 0) throw Error(Errc::validation, "partition does not cover index " + std::to_string(i));
  }
  Partition p;
  p.n_ = n;
  p.target_ = std::move(target);
  p.cond_ = std::move(cond);
  p.source_ = std::move(source);
  return p;
}

std::vector<Index> Partition::reduced() const {
  std::vector<Index> r = target_;
  r.insert(r.end(), cond_.begin(), cond_.end());
  return r;
}

GcResult conditional_rate(const VouModel& model, const Partition& part, const GcOptions& opts) {
  if (part.dim() != model.dim()) throw Error(Errc::dimension, "partition dimension does not match model");
  const SourceSolution sol = solve_source(model, part.source(), opts);
  return make_result(sol, part, rate_for_target(model, part.target(), sol));
}

GcResult unconditional_rate(const VouModel& model, std::span<const Index> target,
                            std::span<const Index> source, const GcOptions& opts) {
  const std::size_t n = model.dim();
  std::vector<Index> t(target.begin(), target.end());
  std::vector<Index> s(source.begin(), source.end());
  std::sort(t.begin(), t.end());
  std::sort(s.begin(), s.end());
  std::vector<Index> both = t;
  both.insert(both.end(), s.begin(), s.end());
  const std::vector<Index> rest = complement(n, both);

  std::vector<Index> joint = s;
  joint.insert(joint.end(), rest.begin(), rest.end());
  std::sort(joint.begin(), joint.end());
  GcResult full = conditional_rate(model, Partition::create(n, t, {}, joint), opts);
  if (rest.empty()) return full;

  const GcResult part = conditional_rate(model, Partition::create(n, t, s, rest), opts);
  double rate = full.rate - part.rate;
  if (rate < -1e-8) {
    std::ostringstream os;
    os << "unconditional rate came out negative (" << rate << ")";
    throw Error(Errc::consistency, os.str());
  }
  rate = std::max(rate, 0.0);
  full.rate = rate;
  full.teRate = rate / 2.0;
  full.flags.detectable = full.flags.detectable && part.flags.detectable;
  full.flags.marginal = full.flags.marginal || part.flags.marginal;
  full.residual = std::max(full.residual, part.residual);
  return full;
}

GcGraph pairwise_graph(const VouModel& model) {
  const std::size_t n = model.dim();
  if (n < 2) throw Error(Errc::validation, "causal graph needs at least two variables");
  GcGraph g = empty_graph(n);
  for (std::size_t j = 0; j < n; ++j) {
    SourceSolution sol;
    try {
      sol = solve_source(model, {j}, {});
    } catch (const Error& e) {
      for (std::size_t i = 0; i < n; ++i)
        if (i != j) g.reasons[i * n + j] = describe(e);
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) continue;
      try {
        g.rates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            rate_for_target(model, {i}, sol);
      } catch (const Error& e) {
        g.reasons[i * n + j] = describe(e);
      }
    }
  }
  return g;
}

GcGraph unconditional_graph(const VouModel& model) {
  const std::size_t n = model.dim();
  if (n < 2) throw Error(Errc::validation, "causal graph needs at least two variables");
  GcGraph g = empty_graph(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<Index> others = complement(n, std::vector<Index>{i});
    double total = 0.0;
    try {
      total = rate_for_target(model, {i}, solve_source(model, others, {}));
    } catch (const Error& e) {
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) g.reasons[i * n + j] = describe(e);
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      try {
        // R(y_j -> y_i) = R(y_[i] -> y_i) - R(y_[ij] -> y_i | y_j)
        const std::vector<Index> rest = complement(n, std::vector<Index>{i, j});
        const double partial = rest.empty() ? 0.0 : rate_for_target(model, {i}, solve_source(model, rest, {}));
        double rate = total - partial;
        if (rate < -1e-8) {
          std::ostringstream os;
          os << "unconditional rate came out negative (" << rate << ")";
          throw Error(Errc::consistency, os.str());
        }
        g.rates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::max(rate, 0.0);
      } catch (const Error& e) {
        g.reasons[i * n + j] = describe(e);
      }
    }
  }
  return g;
}

double log_det_ratio(const Matrix& base, const Matrix& increment) {
  Eigen::LLT<Matrix> chol(base);
  if (chol.info() != Eigen::Success || !(chol.matrixLLT().diagonal().minCoeff() > 0.0))
    throw Error(Errc::degenerate, "error covariance is not positive-definite");
  const Matrix x = chol.matrixL().solve(increment);
  const Matrix m = symmetrize(chol.matrixL().solve(x.transpose()));
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const double mu = es.eigenvalues()(k);
    if (!(1.0 + mu > 0.0)) throw Error(Errc::degenerate, "reduced error covariance is singular");
    sum += std::log1p(mu);
  }
  return sum;
}

double finite_horizon_gc(const VouModel& model, const Partition& part, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(Errc::domain, "prediction horizon must be positive");
  const GcResult r = conditional_rate(model, part);
  if (r.flags.sourceDecoupled) return 0.0;

  std::vector<Index> order = part.reduced();
  const auto nr = static_cast<Eigen::Index>(order.size());
  const auto nt = static_cast<Eigen::Index>(part.target().size());
  order.insert(order.end(), part.source().begin(), part.source().end());
  const Matrix a = gather(model.A(), order, order);
  const Matrix s = gather(model.Sigma(), order, order);
  const Eigen::Index n = a.rows();

  // Reduced kernel B^R(u) = [I 0] e^{Au} M with M = [I; K], innovations Sigma_RR.
  Matrix m(n, nr);
  m.topRows(nr) = Matrix::Identity(nr, nr);
  m.bottomRows(n - nr) = r.kalmanGain;
  const Matrix qdiff = symmetrize(m * s.topLeftCorner(nr, nr) * m.transpose() - s);

  const Matrix full = linalg::van_loan_integral(a, s, h);
  const Matrix diff = linalg::van_loan_integral(a, qdiff, h);
  return log_det_ratio(full.topLeftCorner(nt, nt), diff.topLeftCorner(nt, nt));
}

}  // namespace vougc
