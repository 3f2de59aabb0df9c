// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <cmath>

#include "core/errors.hpp"
#include "core/gcmap.hpp"
#include "core/langevin.hpp"
#include "support/oracles.hpp"

using namespace vougc;
using namespace vougc::gcmap;
namespace ts = testing_support;

namespace {

LangevinSystem decay(double nu = 1.0) {
  return langevin::linear_system(-Matrix::Identity(1, 1), nu * Matrix::Identity(1, 1));
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return Errc::parse;
}

double max_err_vs_exp(const Trajectory& t) {
  double err = 0.0;
  for (std::size_t k = 0; k < t.times.size(); ++k) err = std::max(err, std::abs(t.states[k](0) - std::exp(-t.times[k])));
  return err;
}

std::vector<Vector> lorenz_points(std::size_t count) {
  const auto t = integrate_ode(langevin::builtin_lorenz(), Vector::Ones(3), 30.0, 0.01, 10.0);
  return {t.states.begin(), t.states.begin() + static_cast<std::ptrdiff_t>(count)};
}

}  // namespace

TEST_CASE("zero drift keeps the state constant") {
  const LangevinSystem sys = langevin::parse_system("[system]\nn = 2\n[drift]\ndy1 = 0\ndy2 = 0\n");
  Vector y0(2);
  y0 << 1.5, -2;
  const auto t = integrate_ode(sys, y0, 5.0, 0.1, 1.0);
  CHECK(t.states.size() == 40);
  for (const auto& y : t.states) CHECK(y == y0);
}

TEST_CASE("sampling grid") {
  const auto t = integrate_ode(decay(), Vector::Ones(1), 3.0, 0.01, 1.0);
  REQUIRE(t.times.size() == 200);
  CHECK(t.times.front() == 1.0);
  CHECK(t.times.back() == doctest::Approx(2.99).epsilon(1e-14));
  CHECK(t.transientDropped == 1.0);
  CHECK(t.dt == 0.01);
  for (std::size_t k = 1; k < t.times.size(); ++k) CHECK(t.times[k] > t.times[k - 1]);
}

TEST_CASE("exponential decay") {
  const auto t = integrate_ode(decay(), Vector::Ones(1), 5.0, 0.01, 0.0);
  CHECK(max_err_vs_exp(t) <= 1e-8);
  const auto tr = integrate_ode(decay(), Vector::Ones(1), 5.0, 0.01, 0.37);
  CHECK(max_err_vs_exp(tr) <= 1e-8);
}

TEST_CASE("fourth-order convergence") {
  IntegratorOptions coarse, fine;
  coarse.substeps = 1;
  fine.substeps = 2;
  const double e1 = max_err_vs_exp(integrate_ode(decay(), Vector::Ones(1), 4.0, 0.2, 0.0, coarse));
  const double e2 = max_err_vs_exp(integrate_ode(decay(), Vector::Ones(1), 4.0, 0.2, 0.0, fine));
  CHECK(e1 / e2 >= 8.0);
  CHECK(e1 / e2 <= 24.0);
}

TEST_CASE("Lorenz trajectory stays on the attractor") {
  const auto t = integrate_ode(langevin::builtin_lorenz(), Vector::Ones(3), 200.0, 0.01, 100.0);
  CHECK(t.states.size() == 10000);
  double peak = 0.0;
  for (const auto& y : t.states) peak = std::max(peak, y.cwiseAbs().maxCoeff());
  CHECK(peak < 60.0);
  CHECK(peak > 10.0);
}

TEST_CASE("integrator argument checks and divergence") {
  CHECK(code_of([] { integrate_ode(decay(), Vector::Ones(1), 1.0, 0.1, 1.0); }) == Errc::validation);
  CHECK(code_of([] { integrate_ode(decay(), Vector::Ones(1), 1.0, 0.0, 0.0); }) == Errc::domain);
  CHECK(code_of([] { integrate_ode(decay(), Vector::Ones(2), 1.0, 0.1, 0.0); }) == Errc::dimension);
  const LangevinSystem blow = langevin::parse_system("[system]\nn = 1\n[drift]\ndy1 = y1^2\n");
  CHECK(code_of([&] { integrate_ode(blow, Vector::Ones(1), 5.0, 0.01, 0.0); }) == Errc::divergence);
}

TEST_CASE("stochastic integration is reproducible") {
  const LangevinSystem lz = langevin::builtin_lorenz(10, 28, 8.0 / 3.0, 2.0);
  const auto a = integrate_sde(lz, Vector::Ones(3), 20.0, 0.01, 5.0, 42);
  const auto b = integrate_sde(lz, Vector::Ones(3), 20.0, 0.01, 5.0, 42);
  const auto c = integrate_sde(lz, Vector::Ones(3), 20.0, 0.01, 5.0, 43);
  REQUIRE(a.states.size() == b.states.size());
  bool same = true, differs = false;
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    same = same && a.states[k] == b.states[k];
    differs = differs || a.states[k] != c.states[k];
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("scalar Ornstein-Uhlenbeck stationary variance") {
  const auto t = integrate_sde(decay(), Vector::Zero(1), 20010.0, 0.1, 10.0, 7);
  double mean = 0.0;
  for (const auto& y : t.states) mean += y(0);
  mean /= static_cast<double>(t.states.size());
  double var = 0.0;
  for (const auto& y : t.states) var += (y(0) - mean) * (y(0) - mean);
  var /= static_cast<double>(t.states.size() - 1);
  CHECK(std::abs(var - 0.5) <= 0.025);
}

TEST_CASE("noiseless stochastic integration follows Euler") {
  const LangevinSystem sys = LangevinSystem::from_functions(
      1, [](std::span<const double> y, std::span<double> f) { f[0] = -y[0]; },
      [](std::span<const double>, Matrix& j) { j = -Matrix::Identity(1, 1); }, langevin::ScalarDiffusion{0.0});
  IntegratorOptions opts;
  opts.substeps = 100;
  const auto t = integrate_sde(sys, Vector::Ones(1), 2.0, 0.01, 0.0, 1, opts);
  // first-order global error ~ h t e^{-t} / 2
  CHECK(max_err_vs_exp(t) <= 1e-4 * 0.5);
  CHECK(max_err_vs_exp(t) > 1e-12);
}

TEST_CASE("map results do not depend on threads or order") {
  const LangevinSystem lz = langevin::builtin_lorenz();
  auto pts = lorenz_points(300);
  const auto one = gc_map(lz, pts, Analysis::graph(), 1);
  const auto four = gc_map(lz, pts, Analysis::graph(), 4);
  std::vector<Vector> rev(pts.rbegin(), pts.rend());
  const auto back = gc_map(lz, rev, Analysis::graph(), 3);
  REQUIRE(one.size() == pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto& r = back[pts.size() - 1 - k];
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < 3; ++j) {
        if (i == j) continue;
        CHECK(one[k].graph.rates(i, j) == four[k].graph.rates(i, j));
        CHECK(one[k].graph.rates(i, j) == r.graph.rates(i, j));
      }
    CHECK(one[k].lambda == four[k].lambda);
    CHECK(one[k].detJ == r.detJ);
    CHECK(one[k].graph.rates(0, 2) == 0.0);
  }
}

TEST_CASE("linear system map equals the direct computation") {
  ts::Rng rng(9);
  const Matrix a = ts::random_drift(3, rng);
  const Matrix s = ts::random_spd(3, rng);
  const VouModel m = VouModel::create(a, s);
  const LangevinSystem lin = langevin::linear_system(a, s);
  std::vector<Vector> pts;
  for (int k = 0; k < 50; ++k) pts.push_back(Vector::Random(3) * 5.0);
  const GcGraph direct = pairwise_graph(m);
  const auto samples = gc_map(lin, pts, Analysis::graph(), 2);
  for (const auto& smp : samples) {
    CHECK(smp.complete());
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < 3; ++j)
        if (i != j) CHECK(smp.graph.rates(i, j) == direct.rates(i, j));
  }
  const GlobalRate g = global_rate(samples, Analysis::graph());
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      if (i != j) CHECK(std::abs(g.graph(i, j) - direct.rates(i, j)) <= 1e-12 * std::max(1.0, direct.rates(i, j)));

  const Partition p = Partition::create(3, {0}, {1}, {2});
  const auto rs = gc_map(lin, pts, Analysis::rate(p), 2);
  const double r = conditional_rate(m, p).rate;
  for (const auto& smp : rs) CHECK(smp.rate == r);
  CHECK(std::abs(global_rate(rs, Analysis::rate(p)).rate - r) <= 1e-12 * std::max(1.0, r));
}

TEST_CASE("global averages and coverage") {
  const Analysis an = Analysis::rate(Partition::create(2, {0}, {}, {1}));
  std::vector<GcMapSample> s(3);
  for (auto& x : s) {
    x.ok = true;
    x.rate = 0.2;
  }
  const GlobalRate g = global_rate(s, an);
  CHECK(g.rate == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(g.excluded == 0);

  std::vector<GcMapSample> many(200);
  for (auto& x : many) {
    x.ok = true;
    x.rate = 1.0;
  }
  many[3].ok = false;
  many[50].ok = false;
  const GlobalRate ok = global_rate(many, an);
  CHECK(ok.excluded == 2);
  CHECK(ok.excludedFraction == 0.01);
  CHECK(ok.rate == 1.0);
  many[77].ok = false;
  CHECK(code_of([&] { global_rate(many, an); }) == Errc::coverage);

  std::vector<double> xs(1000, 0.1);
  CHECK(pairwise_sum(xs) == doctest::Approx(100.0).epsilon(1e-14));
}

TEST_CASE("per-point failures are recorded") {
  const LangevinSystem sys = langevin::parse_system("[system]\nn = 2\n[drift]\ndy1 = -y1 + y2\ndy2 = log(y2)\n");
  std::vector<Vector> pts(2, Vector::Ones(2));
  pts[1](1) = -1.0;  // log of a negative number
  const auto s = gc_map(sys, pts, Analysis::graph(), 1);
  CHECK(s[0].ok);
  CHECK_FALSE(s[1].ok);
  CHECK_FALSE(s[1].error.empty());
}

TEST_CASE("stability map") {
  ts::Rng rng(10);
  const LangevinSystem lin = langevin::linear_system(ts::random_drift(3, rng), Matrix::Identity(3, 3));
  std::vector<Vector> pts;
  for (int k = 0; k < 20; ++k) pts.push_back(Vector::Random(3));
  for (const auto& s : stability_map(lin, pts)) CHECK(s.lambda < 0.0);

  const auto lz = stability_map(langevin::builtin_lorenz(), lorenz_points(2000));
  std::size_t unstable = 0;
  for (const auto& s : lz) unstable += s.lambda >= 0.0;
  CHECK(unstable > 0);
  CHECK(unstable < lz.size());
  CHECK(stability_map(langevin::builtin_lorenz(), {Vector::Zero(3)})[0].lambda > 0.0);
}
