// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <cmath>

#include "core/errors.hpp"
#include "core/oracle.hpp"
#include "core/vou.hpp"
#include "support/oracles.hpp"

using namespace vougc;
namespace ts = testing_support;

namespace {

VouModel two_var(double c) {
  Matrix a(2, 2);
  a << -1, c, 0, -1;
  return VouModel::create(a, Matrix::Identity(2, 2));
}

Partition scalar_pair() { return Partition::create(2, {0}, {}, {1}); }

}  // namespace

TEST_CASE("subsample closed forms") {
  const VouModel m = VouModel::create(Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 2.0));
  const auto s = oracle::subsample_detail(m, std::log(2.0));
  CHECK(s.var1.Abar(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(s.Omega(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s.var1.SigmaBar(0, 0) == doctest::Approx(0.75).epsilon(1e-14));

  for (double dt : {1e-3, 0.1, 2.0}) {
    const auto v = oracle::subsample(VouModel::create(-Matrix::Identity(3, 3), Matrix::Identity(3, 3)), dt);
    const double d = (1.0 - std::exp(-2.0 * dt)) / 2.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(std::abs(v.SigmaBar(i, j) - (i == j ? d : 0.0)) <= 1e-14);
  }
}

TEST_CASE("small-interval limit of the sampled model") {
  ts::Rng rng(3);
  const Matrix a = ts::random_drift(3, rng);
  const Matrix s = ts::random_spd(3, rng);
  const VouModel m = VouModel::create(a, s);
  double prevA = 0.0, prevS = 0.0;
  for (double dt : {1e-2, 1e-3}) {
    const auto v = oracle::subsample(m, dt);
    const Matrix id = Matrix::Identity(3, 3);
    const double ea = (v.Abar - id - a * dt).cwiseAbs().maxCoeff();
    const double es = (v.SigmaBar - s * dt).cwiseAbs().maxCoeff();
    CHECK(ea <= 10.0 * dt * dt * a.squaredNorm());
    if (prevA > 0.0) {
      // second order: tenfold smaller step, roughly hundredfold smaller error
      CHECK(ea < prevA / 50.0);
      CHECK(es < prevS / 50.0);
    }
    prevA = ea;
    prevS = es;
  }
}

TEST_CASE("stationarity identity of the sampled model") {
  ts::Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + trial % 3;
    const VouModel m = VouModel::create(ts::random_drift(n, rng), ts::random_spd(n, rng));
    for (double dt : {1e-3, 0.05, 0.7}) {
      const auto s = oracle::subsample_detail(m, dt);
      const Matrix lhs = s.var1.Abar * s.Omega * s.var1.Abar.transpose() + s.var1.SigmaBar;
      CHECK((lhs - s.Omega).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, s.Omega.cwiseAbs().maxCoeff()));
      Eigen::SelfAdjointEigenSolver<Matrix> es(s.var1.SigmaBar);
      CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    }
  }
}

TEST_CASE("unstable drift is outside the discrete path") {
  Matrix a(2, 2);
  a << 0.3, 1, 0, -1;
  const VouModel m = VouModel::create(a, Matrix::Identity(2, 2));
  try {
    oracle::subsample(m, 1e-3);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::unsupported);
  }
}

TEST_CASE("discrete causality of the two-variable model") {
  const VouModel m = two_var(1.0);
  const double exact = std::sqrt(2.0) - 1.0;
  const double dt = 1e-3;
  const auto v = oracle::subsample(m, dt);
  const auto d = oracle::discrete_ss_gc_detail(v, scalar_pair());
  CHECK(ts::rel_err(d.F / dt, exact) <= 1e-2);
  CHECK(ts::rel_err(oracle::rate_via_subsampling(m, scalar_pair(), dt), exact) <= 1e-2);

  // the reduced Riccati solution tends to the continuous one
  const GcResult c = conditional_rate(m, scalar_pair());
  CHECK(ts::rel_err(d.P33bar(0, 0), c.P33(0, 0)) <= 1e-2);

  // the doubling solution matches plain fixed-point iteration
  const std::vector<Index> red{0}, src{1};
  const Matrix a33 = linalg::gather(v.Abar, src, src);
  const Matrix ar3 = linalg::gather(v.Abar, red, src);
  const Matrix q = linalg::gather(v.SigmaBar, src, src);
  const Matrix s = linalg::gather(v.SigmaBar, src, red);
  const Matrix rm = linalg::gather(v.SigmaBar, red, red);
  const Matrix it = ts::iterate_dare(a33, ar3, q, s, rm);
  CHECK(ts::rel_err(d.P33bar(0, 0), it(0, 0)) <= 1e-8);
}

TEST_CASE("first-order convergence and extrapolation") {
  const VouModel m = two_var(1.0);
  const double exact = std::sqrt(2.0) - 1.0;
  const auto rep = oracle::convergence_check(m, scalar_pair(), {1e-2, 1e-3, 1e-4});
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[1].relError < rep.rows[0].relError);
  CHECK(rep.rows[2].relError < rep.rows[1].relError);
  CHECK(std::abs(rep.slope - 1.0) <= 0.15);
  const double rich = (10.0 * rep.rows[2].estimate - rep.rows[1].estimate) / 9.0;
  CHECK(ts::rel_err(rich, exact) <= 1e-4);
}

TEST_CASE("zero coupling gives zero discrete causality") {
  Matrix a = Matrix::Zero(3, 3);
  a.diagonal() << -1, -0.5, -2;
  Matrix s = Matrix::Zero(3, 3);
  s.diagonal() << 1, 2, 0.5;
  const VouModel m = VouModel::create(a, s);
  const Partition p = Partition::create(3, {0}, {1}, {2});
  for (double dt : {1e-2, 1e-3}) CHECK(std::abs(oracle::discrete_ss_gc(oracle::subsample(m, dt), p)) <= 1e-12);
  const auto rep = oracle::convergence_check(m, p, {1e-2, 1e-3, 1e-4});
  for (const auto& r : rep.rows) {
    CHECK(r.analytic == 0.0);
    CHECK(std::abs(r.estimate) <= 1e-8);
  }
}

TEST_CASE("random stable models converge at first order") {
  ts::Rng rng(21);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 3 + trial % 3;
    const Matrix a = ts::random_drift(n, rng);
    const VouModel m = VouModel::create(a, ts::random_spd(n, rng));
    std::vector<Index> cond;
    for (int i = 1; i < n - 1; ++i) cond.push_back(static_cast<Index>(i));
    const Partition p = Partition::create(static_cast<std::size_t>(n), {0}, cond, {static_cast<Index>(n - 1)});
    const double scale = a.cwiseAbs().maxCoeff();
    const auto rep = oracle::convergence_check(m, p, {1e-2 / scale, 1e-3 / scale, 1e-4 / scale});
    if (rep.analytic < 1e-6) continue;
    CHECK(rep.rows[1].relError <= 1e-2);
    CHECK(std::abs(rep.slope - 1.0) <= 0.15);
  }
}
