// SPDX-License-Identifier: Apache-2.0
//
// Trajectories of Langevin systems and local Granger-causality maps along
// them: each sampled point is linearised and handed to the VOU solvers.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/langevin.hpp"
#include "core/vou.hpp"

namespace vougc::gcmap {

using langevin::LangevinSystem;

inline constexpr double kOverflowGuard = 1e12;
inline constexpr int kDefaultSubsteps = 10;
inline constexpr double kMaxExcludedFraction = 0.01;
/// Recorded in run metadata so seeded runs can be reproduced elsewhere.
inline constexpr const char* kRngName = "mt19937_64/box-muller";

struct Trajectory {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<Vector> states;
  double transientDropped = 0.0;
  int substeps = kDefaultSubsteps;
};

struct IntegratorOptions {
  int substeps = kDefaultSubsteps;  ///< internal steps per sampling interval
  double overflowGuard = kOverflowGuard;
};

/// Classical RK4 at step dt/substeps. Samples at t = transient + k dt for
/// k = 0 .. round((duration - transient)/dt) - 1.
Trajectory integrate_ode(const LangevinSystem& system, const Vector& y0, double duration, double dt,
                         double transient, const IntegratorOptions& opts = {});

/// Euler-Maruyama with per-substep noise N(0, Sigma(y) h). Same sampling
/// grid as integrate_ode; bitwise reproducible for a given seed.
Trajectory integrate_sde(const LangevinSystem& system, const Vector& y0, double duration, double dt,
                         double transient, std::uint64_t seed, const IntegratorOptions& opts = {});

enum class AnalysisKind { graph, unconditional_graph, partition, stability };

struct Analysis {
  AnalysisKind kind = AnalysisKind::graph;
  std::optional<Partition> partition;  ///< set iff kind == partition

  static Analysis graph() { return {AnalysisKind::graph, std::nullopt}; }
  static Analysis unconditional_graph() { return {AnalysisKind::unconditional_graph, std::nullopt}; }
  static Analysis stability() { return {AnalysisKind::stability, std::nullopt}; }
  static Analysis rate(Partition p) { return {AnalysisKind::partition, std::move(p)}; }
};

struct GcMapSample {
  Vector point;
  double lambda = 0.0;
  double detJ = 0.0;
  bool singular = false;
  bool ok = false;    ///< linearisation (and the rate, for partitions) succeeded
  std::string error;  ///< reason when !ok
  GcGraph graph;      ///< graph analyses; cells may carry their own reasons
  double rate = 0.0;  ///< partition analysis
  GcFlags flags;      ///< partition analysis

  /// ok and, for graphs, every off-diagonal cell defined.
  bool complete() const;
};

/// Worker count: VOUGC_THREADS if set and positive, else hardware concurrency.
unsigned default_threads();

/// Linearises at every point and runs the requested analysis. Never throws
/// for per-point failures; results do not depend on the thread count.
std::vector<GcMapSample> gc_map(const LangevinSystem& system, const std::vector<Vector>& points,
                                const Analysis& analysis, unsigned threads = 0);

struct StabilitySample {
  Vector point;
  double lambda = 0.0;
  double detJ = 0.0;
  bool singular = false;
  bool ok = false;
  std::string error;
};

std::vector<StabilitySample> stability_map(const LangevinSystem& system,
                                           const std::vector<Vector>& points, unsigned threads = 0);

struct GlobalRate {
  AnalysisKind kind = AnalysisKind::graph;
  Matrix graph;       ///< mean rates, NaN diagonal (graph analyses)
  double rate = 0.0;  ///< mean rate (partition analysis)
  std::size_t total = 0;
  std::size_t excluded = 0;
  double excludedFraction = 0.0;
};

/// Equal-weight mean over complete samples, summed pairwise. Throws coverage
/// when more than maxExcluded of the samples are incomplete.
GlobalRate global_rate(const std::vector<GcMapSample>& samples, const Analysis& analysis,
                       double maxExcluded = kMaxExcludedFraction);

/// Pairwise (cascade) summation; the result depends only on the order of xs.
double pairwise_sum(std::span<const double> xs);

}  // namespace vougc::gcmap
