// SPDX-License-Identifier: Apache-2.0
#include "core/gcmap.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "core/errors.hpp"

namespace vougc::gcmap {

namespace {

struct Grid {
  std::size_t samples = 0;
  long transientSteps = 0;   // substeps before the first sample
  double transientH = 0.0;
  double h = 0.0;            // substep inside a sampling interval
};

Grid make_grid(std::size_t n, const Vector& y0, double duration, double dt, double transient,
               const IntegratorOptions& opts) {
  if (static_cast<std::size_t>(y0.size()) != n) throw Error(Errc::dimension, "initial state has wrong length");
  if (!linalg::all_finite(y0)) throw Error(Errc::domain, "initial state not finite");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(Errc::domain, "dt must be positive");
  if (!(transient >= 0.0) || !std::isfinite(transient)) throw Error(Errc::domain, "transient must be non-negative");
  if (!std::isfinite(duration) || !(duration > transient))
    throw Error(Errc::validation, "duration must exceed the transient");
  if (opts.substeps < 1) throw Error(Errc::domain, "substeps must be at least 1");
  Grid g;
  const double count = std::round((duration - transient) / dt);
  if (count < 2.0) throw Error(Errc::validation, "trajectory would have fewer than two samples");
  g.samples = static_cast<std::size_t>(count);
  g.h = dt / opts.substeps;
  g.transientSteps = static_cast<long>(std::ceil(transient / g.h - 1e-9));
  g.transientH = g.transientSteps > 0 ? transient / static_cast<double>(g.transientSteps) : 0.0;
  return g;
}

[[noreturn]] void diverged(const Vector& y, double t) {
  std::ostringstream os;
  os.precision(17);
  os << "trajectory diverged at t = " << t << ", last state (";
  for (Eigen::Index i = 0; i < y.size(); ++i) os << (i ? ", " : "") << y(i);
  os << ')';
  throw Error(Errc::divergence, os.str());
}

void guard(const Vector& y, double t, double limit) {
  const double norm = y.norm();
  if (!std::isfinite(norm) || norm > limit) diverged(y, t);
}

class Rk4 {
 public:
  explicit Rk4(const LangevinSystem& s) : s_(s), n_(s.dim()), k1_(n_), k2_(n_), k3_(n_), k4_(n_), tmp_(n_) {}

  void step(Vector& y, double h) {
    f(y, k1_);
    tmp_ = y + 0.5 * h * k1_;
    f(tmp_, k2_);
    tmp_ = y + 0.5 * h * k2_;
    f(tmp_, k3_);
    tmp_ = y + h * k3_;
    f(tmp_, k4_);
    y += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
  }

 private:
  void f(const Vector& y, Vector& out) {
    s_.drift(std::span<const double>(y.data(), n_), std::span<double>(out.data(), n_));
  }
  const LangevinSystem& s_;
  std::size_t n_;
  Vector k1_, k2_, k3_, k4_, tmp_;
};

/// Standard normals from mt19937_64 via the Box-Muller transform.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : eng_(seed) {}

  double next() {
    if (hasSpare_) {
      hasSpare_ = false;
      return spare_;
    }
    constexpr double scale = 0x1.0p-53;
    const double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * scale;  // (0, 1]
    const double u2 = static_cast<double>(eng_() >> 11) * scale;          // [0, 1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    hasSpare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool hasSpare_ = false;
};

template <class Step>
Trajectory run(const LangevinSystem& system, const Vector& y0, double duration, double dt,
               double transient, const IntegratorOptions& opts, Step&& step) {
  const Grid g = make_grid(system.dim(), y0, duration, dt, transient, opts);
  Trajectory tr;
  tr.dt = dt;
  tr.transientDropped = transient;
  tr.substeps = opts.substeps;
  tr.times.reserve(g.samples);
  tr.states.reserve(g.samples);

  Vector y = y0;
  double t = 0.0;
  for (long k = 0; k < g.transientSteps; ++k) {
    step(y, g.transientH);
    t = static_cast<double>(k + 1) * g.transientH;
    guard(y, t, opts.overflowGuard);
  }
  for (std::size_t s = 0; s < g.samples; ++s) {
    if (s > 0) {
      for (int k = 0; k < opts.substeps; ++k) {
        step(y, g.h);
        guard(y, transient + static_cast<double>(s - 1) * dt + (k + 1) * g.h, opts.overflowGuard);
      }
    }
    tr.times.push_back(transient + static_cast<double>(s) * dt);
    tr.states.push_back(y);
  }
  return tr;
}

}  // namespace

Trajectory integrate_ode(const LangevinSystem& system, const Vector& y0, double duration, double dt,
                         double transient, const IntegratorOptions& opts) {
  Rk4 rk(system);
  return run(system, y0, duration, dt, transient, opts, [&](Vector& y, double h) { rk.step(y, h); });
}

Trajectory integrate_sde(const LangevinSystem& system, const Vector& y0, double duration, double dt,
                         double transient, std::uint64_t seed, const IntegratorOptions& opts) {
  const std::size_t n = system.dim();
  const auto ni = static_cast<Eigen::Index>(n);
  GaussianSource rng(seed);
  const auto& spec = system.diffusion_spec();
  const bool constant = !std::holds_alternative<langevin::ExprDiffusion>(spec);

  auto factor = [&](const Vector& y) -> Matrix {
    const Matrix s = system.diffusion(y);
    if (s.isZero(0.0)) return Matrix::Zero(ni, ni);
    Eigen::LLT<Matrix> llt(linalg::symmetrize(s));
    if (llt.info() != Eigen::Success) throw Error(Errc::diffusion, "diffusion matrix not positive-definite");
    return llt.matrixL();
  };
  Matrix lConst = constant ? factor(y0) : Matrix();
  Vector f(ni), xi(ni);
  auto step = [&](Vector& y, double h) {
    system.drift(std::span<const double>(y.data(), n), std::span<double>(f.data(), n));
    for (Eigen::Index i = 0; i < ni; ++i) xi(i) = rng.next();
    if (constant)
      y += h * f + std::sqrt(h) * (lConst * xi);
    else
      y += h * f + std::sqrt(h) * (factor(y) * xi);
  };
  if (!constant) {
    // Evaluate once up front so a bad diffusion surfaces before integration.
    (void)factor(y0);
  }
  return run(system, y0, duration, dt, transient, opts, step);
}

bool GcMapSample::complete() const {
  if (!ok) return false;
  for (std::size_t i = 0; i < graph.n; ++i)
    for (std::size_t j = 0; j < graph.n; ++j)
      if (i != j && !graph.defined(i, j)) return false;
  return true;
}

unsigned default_threads() {
  if (const char* env = std::getenv("VOUGC_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

namespace {

/// Applies fn(i) for i in [0, count) over `threads` workers, static chunks.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = default_threads();
  const std::size_t workers = std::min<std::size_t>(threads, std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = count * w / workers;
    const std::size_t hi = count * (w + 1) / workers;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

GcMapSample evaluate(const LangevinSystem& system, const Vector& point, const Analysis& analysis) {
  GcMapSample s;
  s.point = point;
  try {
    const auto lin = langevin::linearize(system, point);
    s.lambda = lin.stabilityExponent;
    s.detJ = lin.detJ;
    s.singular = lin.singular;
    switch (analysis.kind) {
      case AnalysisKind::graph:
        s.graph = pairwise_graph(lin.vou);
        break;
      case AnalysisKind::unconditional_graph:
        s.graph = unconditional_graph(lin.vou);
        break;
      case AnalysisKind::partition: {
        const GcResult r = conditional_rate(lin.vou, *analysis.partition);
        s.rate = r.rate;
        s.flags = r.flags;
        break;
      }
      case AnalysisKind::stability:
        break;
    }
    s.ok = true;
  } catch (const std::exception& e) {
    s.ok = false;
    s.error = e.what();
  }
  return s;
}

}  // namespace

std::vector<GcMapSample> gc_map(const LangevinSystem& system, const std::vector<Vector>& points,
                                const Analysis& analysis, unsigned threads) {
  if (analysis.kind == AnalysisKind::partition) {
    if (!analysis.partition) throw Error(Errc::validation, "rate analysis needs a partition");
    if (analysis.partition->dim() != system.dim())
      throw Error(Errc::dimension, "partition dimension does not match system");
  }
  for (const auto& p : points)
    if (static_cast<std::size_t>(p.size()) != system.dim())
      throw Error(Errc::dimension, "map point has wrong length");
  std::vector<GcMapSample> out(points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) { out[i] = evaluate(system, points[i], analysis); });
  return out;
}

std::vector<StabilitySample> stability_map(const LangevinSystem& system,
                                           const std::vector<Vector>& points, unsigned threads) {
  const auto full = gc_map(system, points, Analysis::stability(), threads);
  std::vector<StabilitySample> out;
  out.reserve(full.size());
  for (const auto& s : full) out.push_back({s.point, s.lambda, s.detJ, s.singular, s.ok, s.error});
  return out;
}

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

GlobalRate global_rate(const std::vector<GcMapSample>& samples, const Analysis& analysis,
                       double maxExcluded) {
  GlobalRate g;
  g.kind = analysis.kind;
  g.total = samples.size();
  if (samples.empty()) throw Error(Errc::coverage, "no samples to average");
  if (analysis.kind == AnalysisKind::stability)
    throw Error(Errc::validation, "stability analysis has no rate to average");

  std::vector<const GcMapSample*> good;
  good.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.complete()) good.push_back(&s);
  }
  g.excluded = samples.size() - good.size();
  g.excludedFraction = static_cast<double>(g.excluded) / static_cast<double>(g.total);
  if (g.excludedFraction > maxExcluded) {
    std::ostringstream os;
    os << g.excluded << " of " << g.total << " samples failed (" << 100.0 * g.excludedFraction
       << "%, limit " << 100.0 * maxExcluded << "%)";
    throw Error(Errc::coverage, os.str());
  }
  if (good.empty()) throw Error(Errc::coverage, "every sample failed");
  const double count = static_cast<double>(good.size());
  std::vector<double> xs(good.size());

  if (analysis.kind == AnalysisKind::partition) {
    for (std::size_t k = 0; k < good.size(); ++k) xs[k] = good[k]->rate;
    g.rate = pairwise_sum(xs) / count;
    return g;
  }

  const std::size_t n = good.front()->graph.n;
  const auto ni = static_cast<Eigen::Index>(n);
  g.graph = Matrix::Constant(ni, ni, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      for (std::size_t k = 0; k < good.size(); ++k)
        xs[k] = good[k]->graph.rates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      g.graph(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pairwise_sum(xs) / count;
    }
  return g;
}

}  // namespace vougc::gcmap
