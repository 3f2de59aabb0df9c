// SPDX-License-Identifier: Apache-2.0
#include "vougc/vougc.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>
#include <optional>
#include <string>

#include "core/errors.hpp"
#include "core/gcmap.hpp"
#include "core/langevin.hpp"
#include "core/model_io.hpp"
#include "core/oracle.hpp"
#include "core/vou.hpp"

struct vougc_model {
  vougc::VouModel m;
};
struct vougc_result {
  vougc::GcResult r;
};
struct vougc_graph {
  vougc::GcGraph g;
};
struct vougc_convergence {
  vougc::oracle::ConvergenceReport c;
};
struct vougc_system {
  vougc::langevin::LangevinSystem s;
};
struct vougc_trajectory {
  vougc::gcmap::Trajectory t;
  std::vector<double> flat;
  std::size_t n = 0;
};
struct vougc_map {
  vougc::gcmap::Analysis analysis;
  std::vector<vougc::gcmap::GcMapSample> samples;
  std::size_t n = 0;
};

namespace {

using vougc::Errc;
using vougc::Error;
using vougc::Matrix;
using vougc::Vector;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

thread_local std::string tlsError;
thread_local std::string tlsKind;

vougc_status fail(vougc_status s, const char* kind, const std::string& msg) {
  tlsError = msg;
  tlsKind = kind;
  return s;
}

template <class Fn>
vougc_status guarded(Fn&& fn) {
  try {
    fn();
    tlsError.clear();
    tlsKind.clear();
    return VOUGC_OK;
  } catch (const Error& e) {
    return fail(static_cast<vougc_status>(static_cast<int>(e.category())), vougc::errc_name(e.code()),
                e.what());
  } catch (const std::bad_alloc&) {
    return fail(VOUGC_ERR_INTERNAL, "internal", "out of memory");
  } catch (const std::exception& e) {
    return fail(VOUGC_ERR_INTERNAL, "internal", e.what());
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) throw Error(Errc::validation, std::string(what) + " must not be NULL");
}

Matrix from_rows(std::size_t n, const double* p) {
  const auto ni = static_cast<Eigen::Index>(n);
  Matrix m(ni, ni);
  for (Eigen::Index i = 0; i < ni; ++i)
    for (Eigen::Index j = 0; j < ni; ++j) m(i, j) = p[i * ni + j];
  return m;
}

void to_rows(const Matrix& m, double* out) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i * m.cols() + j] = m(i, j);
}

std::vector<vougc::Index> indices(const size_t* p, size_t count) {
  if (count > 0) need(p, "index list");
  return std::vector<vougc::Index>(p, p + count);
}

vougc::Partition partition(std::size_t n, const vougc_partition* p) {
  need(p, "partition");
  return vougc::Partition::create(n, indices(p->target, p->n_target), indices(p->cond, p->n_cond),
                                  indices(p->source, p->n_source));
}

std::string_view text_of(const char* text, size_t len) {
  need(text, "text");
  return std::string_view(text, len);
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

vougc::gcmap::Analysis analysis_of(vougc_analysis a, std::size_t n, const vougc_partition* p) {
  switch (a) {
    case VOUGC_ANALYSIS_GRAPH:
      return vougc::gcmap::Analysis::graph();
    case VOUGC_ANALYSIS_UNCONDITIONAL_GRAPH:
      return vougc::gcmap::Analysis::unconditional_graph();
    case VOUGC_ANALYSIS_RATE:
      return vougc::gcmap::Analysis::rate(partition(n, p));
    case VOUGC_ANALYSIS_STABILITY:
      return vougc::gcmap::Analysis::stability();
  }
  throw Error(Errc::validation, "unknown analysis kind");
}

}  // namespace

extern "C" {

const char* vougc_version(void) { return VOUGC_VERSION_STRING; }
const char* vougc_rng_name(void) { return vougc::gcmap::kRngName; }
const char* vougc_last_error(void) { return tlsError.c_str(); }
const char* vougc_last_error_kind(void) { return tlsKind.c_str(); }
void vougc_string_free(char* s) { std::free(s); }

// ---- models

vougc_status vougc_model_create(size_t n, const double* a, const double* sigma, vougc_model** out) {
  return guarded([&] {
    need(out, "out");
    need(a, "A");
    need(sigma, "Sigma");
    if (n == 0) throw Error(Errc::dimension, "model dimension must be positive");
    *out = new vougc_model{vougc::VouModel::create(from_rows(n, a), from_rows(n, sigma))};
  });
}

vougc_status vougc_model_parse(const char* text, size_t len, vougc_model** out) {
  return guarded([&] {
    need(out, "out");
    *out = new vougc_model{vougc::io::parse_model(text_of(text, len))};
  });
}

vougc_status vougc_model_dump(const vougc_model* m, char** out) {
  return guarded([&] {
    need(m, "model");
    need(out, "out");
    *out = dup(vougc::io::dump_model(m->m));
  });
}

vougc_status vougc_model_scaled(const vougc_model* m, double nu, vougc_model** out) {
  return guarded([&] {
    need(m, "model");
    need(out, "out");
    *out = new vougc_model{m->m.scaled(nu)};
  });
}

size_t vougc_model_dim(const vougc_model* m) { return m ? m->m.dim() : 0; }

void vougc_model_get(const vougc_model* m, double* a, double* sigma) {
  if (!m) return;
  if (a) to_rows(m->m.A(), a);
  if (sigma) to_rows(m->m.Sigma(), sigma);
}

void vougc_model_free(vougc_model* m) { delete m; }

// ---- rates

vougc_status vougc_rate_conditional(const vougc_model* m, const vougc_partition* p,
                                    int force_hamiltonian, vougc_result** out) {
  return guarded([&] {
    need(m, "model");
    need(out, "out");
    vougc::GcOptions opts;
    opts.forceHamiltonian = force_hamiltonian != 0;
    *out = new vougc_result{vougc::conditional_rate(m->m, partition(m->m.dim(), p), opts)};
  });
}

vougc_status vougc_rate_unconditional(const vougc_model* m, const size_t* target, size_t n_target,
                                      const size_t* source, size_t n_source, vougc_result** out) {
  return guarded([&] {
    need(m, "model");
    need(out, "out");
    const auto t = indices(target, n_target);
    const auto s = indices(source, n_source);
    *out = new vougc_result{vougc::unconditional_rate(m->m, t, s)};
  });
}

double vougc_result_rate(const vougc_result* r) { return r ? r->r.rate : kNaN; }
double vougc_result_te_rate(const vougc_result* r) { return r ? r->r.teRate : kNaN; }

unsigned vougc_result_flags(const vougc_result* r) {
  if (!r) return 0;
  unsigned f = 0;
  if (r->r.flags.detectable) f |= VOUGC_FLAG_DETECTABLE;
  if (r->r.flags.sourceDecoupled) f |= VOUGC_FLAG_SOURCE_DECOUPLED;
  if (r->r.flags.marginal) f |= VOUGC_FLAG_MARGINAL;
  return f;
}

double vougc_result_closed_loop_max_re(const vougc_result* r) { return r ? r->r.closedLoopMaxRe : kNaN; }
double vougc_result_residual(const vougc_result* r) { return r ? r->r.residual : kNaN; }

size_t vougc_result_p33(const vougc_result* r, double* out, size_t cap) {
  if (!r) return 0;
  const auto m = static_cast<size_t>(r->r.P33.rows());
  if (out && cap >= m * m) to_rows(r->r.P33, out);
  return m;
}

size_t vougc_result_gain(const vougc_result* r, double* out, size_t cap, size_t* rows, size_t* cols) {
  if (!r) return 0;
  const Matrix& k = r->r.kalmanGain;
  const auto total = static_cast<size_t>(k.size());
  if (rows) *rows = static_cast<size_t>(k.rows());
  if (cols) *cols = static_cast<size_t>(k.cols());
  if (out && cap >= total) to_rows(k, out);
  return total;
}

void vougc_result_free(vougc_result* r) { delete r; }

vougc_status vougc_finite_horizon(const vougc_model* m, const vougc_partition* p, double h, double* out) {
  return guarded([&] {
    need(m, "model");
    need(out, "out");
    *out = vougc::finite_horizon_gc(m->m, partition(m->m.dim(), p), h);
  });
}

vougc_status vougc_rate_via_subsampling(const vougc_model* m, const vougc_partition* p, double dt,
                                        double* out) {
  return guarded([&] {
    need(m, "model");
    need(out, "out");
    *out = vougc::oracle::rate_via_subsampling(m->m, partition(m->m.dim(), p), dt);
  });
}

vougc_status vougc_convergence_check(const vougc_model* m, const vougc_partition* p, const double* dts,
                                     size_t count, vougc_convergence** out) {
  return guarded([&] {
    need(m, "model");
    need(out, "out");
    if (count == 0) throw Error(Errc::validation, "need at least one sampling interval");
    need(dts, "dts");
    *out = new vougc_convergence{
        vougc::oracle::convergence_check(m->m, partition(m->m.dim(), p), std::vector<double>(dts, dts + count))};
  });
}

size_t vougc_convergence_rows(const vougc_convergence* c) { return c ? c->c.rows.size() : 0; }

void vougc_convergence_row(const vougc_convergence* c, size_t k, double* dt, double* estimate,
                           double* analytic, double* rel_error) {
  if (!c || k >= c->c.rows.size()) return;
  const auto& row = c->c.rows[k];
  if (dt) *dt = row.dt;
  if (estimate) *estimate = row.estimate;
  if (analytic) *analytic = row.analytic;
  if (rel_error) *rel_error = row.relError;
}

double vougc_convergence_slope(const vougc_convergence* c) { return c ? c->c.slope : kNaN; }
void vougc_convergence_free(vougc_convergence* c) { delete c; }

// ---- graphs

vougc_status vougc_graph_pairwise(const vougc_model* m, vougc_graph** out) {
  return guarded([&] {
    need(m, "model");
    need(out, "out");
    *out = new vougc_graph{vougc::pairwise_graph(m->m)};
  });
}

vougc_status vougc_graph_unconditional(const vougc_model* m, vougc_graph** out) {
  return guarded([&] {
    need(m, "model");
    need(out, "out");
    *out = new vougc_graph{vougc::unconditional_graph(m->m)};
  });
}

size_t vougc_graph_dim(const vougc_graph* g) { return g ? g->g.n : 0; }

double vougc_graph_rate(const vougc_graph* g, size_t i, size_t j) {
  if (!g || i >= g->g.n || j >= g->g.n) return kNaN;
  return g->g.rates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

const char* vougc_graph_reason(const vougc_graph* g, size_t i, size_t j) {
  if (!g || i >= g->g.n || j >= g->g.n) return "out of range";
  return g->g.reason(i, j).c_str();
}

void vougc_graph_free(vougc_graph* g) { delete g; }

// ---- systems

vougc_status vougc_system_parse(const char* text, size_t len, vougc_system** out) {
  return guarded([&] {
    need(out, "out");
    *out = new vougc_system{vougc::langevin::parse_system(text_of(text, len))};
  });
}

vougc_status vougc_system_lorenz(double sigma, double rho, double beta, double nu, vougc_system** out) {
  return guarded([&] {
    need(out, "out");
    *out = new vougc_system{vougc::langevin::builtin_lorenz(sigma, rho, beta, nu)};
  });
}

vougc_status vougc_system_linear(const vougc_model* m, vougc_system** out) {
  return guarded([&] {
    need(m, "model");
    need(out, "out");
    *out = new vougc_system{vougc::langevin::linear_system(m->m.A(), m->m.Sigma())};
  });
}

size_t vougc_system_dim(const vougc_system* s) { return s ? s->s.dim() : 0; }

vougc_status vougc_system_drift(const vougc_system* s, const double* y, double* f) {
  return guarded([&] {
    need(s, "system");
    need(y, "y");
    need(f, "f");
    const auto n = s->s.dim();
    s->s.drift(std::span<const double>(y, n), std::span<double>(f, n));
  });
}

vougc_status vougc_linearize(const vougc_system* s, const double* y, vougc_model** out, double* det_j,
                             double* lambda, int* singular) {
  return guarded([&] {
    need(s, "system");
    need(y, "y");
    const auto n = static_cast<Eigen::Index>(s->s.dim());
    const auto lin = vougc::langevin::linearize(s->s, Eigen::Map<const Vector>(y, n));
    if (det_j) *det_j = lin.detJ;
    if (lambda) *lambda = lin.stabilityExponent;
    if (singular) *singular = lin.singular ? 1 : 0;
    if (out) *out = new vougc_model{lin.vou};
  });
}

void vougc_system_free(vougc_system* s) { delete s; }

// ---- trajectories

namespace {

vougc_trajectory* wrap(vougc::gcmap::Trajectory t, std::size_t n) {
  auto* out = new vougc_trajectory{std::move(t), {}, n};
  out->flat.reserve(out->t.states.size() * n);
  for (const auto& y : out->t.states) out->flat.insert(out->flat.end(), y.data(), y.data() + y.size());
  return out;
}

vougc::gcmap::IntegratorOptions integrator(int substeps) {
  vougc::gcmap::IntegratorOptions o;
  if (substeps > 0) o.substeps = substeps;
  return o;
}

}  // namespace

vougc_status vougc_integrate_ode(const vougc_system* s, const double* y0, double duration, double dt,
                                 double transient, int substeps, vougc_trajectory** out) {
  return guarded([&] {
    need(s, "system");
    need(y0, "y0");
    need(out, "out");
    const auto n = s->s.dim();
    const Vector y = Eigen::Map<const Vector>(y0, static_cast<Eigen::Index>(n));
    *out = wrap(vougc::gcmap::integrate_ode(s->s, y, duration, dt, transient, integrator(substeps)), n);
  });
}

vougc_status vougc_integrate_sde(const vougc_system* s, const double* y0, double duration, double dt,
                                 double transient, uint64_t seed, int substeps, vougc_trajectory** out) {
  return guarded([&] {
    need(s, "system");
    need(y0, "y0");
    need(out, "out");
    const auto n = s->s.dim();
    const Vector y = Eigen::Map<const Vector>(y0, static_cast<Eigen::Index>(n));
    *out = wrap(vougc::gcmap::integrate_sde(s->s, y, duration, dt, transient, seed, integrator(substeps)), n);
  });
}

size_t vougc_trajectory_length(const vougc_trajectory* t) { return t ? t->t.states.size() : 0; }
size_t vougc_trajectory_dim(const vougc_trajectory* t) { return t ? t->n : 0; }

double vougc_trajectory_time(const vougc_trajectory* t, size_t k) {
  if (!t || k >= t->t.times.size()) return kNaN;
  return t->t.times[k];
}

const double* vougc_trajectory_states(const vougc_trajectory* t) { return t ? t->flat.data() : nullptr; }
void vougc_trajectory_free(vougc_trajectory* t) { delete t; }

// ---- maps

namespace {

vougc_map* run_map(const vougc_system* s, std::vector<Vector> points, vougc_analysis a,
                   const vougc_partition* p, unsigned threads) {
  auto analysis = analysis_of(a, s->s.dim(), p);
  auto samples = vougc::gcmap::gc_map(s->s, points, analysis, threads);
  return new vougc_map{std::move(analysis), std::move(samples), s->s.dim()};
}

}  // namespace

vougc_status vougc_map_points(const vougc_system* s, const double* points, size_t count,
                              vougc_analysis analysis, const vougc_partition* p, unsigned threads,
                              vougc_map** out) {
  return guarded([&] {
    need(s, "system");
    need(out, "out");
    if (count > 0) need(points, "points");
    const auto n = static_cast<Eigen::Index>(s->s.dim());
    std::vector<Vector> pts;
    pts.reserve(count);
    for (size_t k = 0; k < count; ++k) pts.emplace_back(Eigen::Map<const Vector>(points + k * n, n));
    *out = run_map(s, std::move(pts), analysis, p, threads);
  });
}

vougc_status vougc_map_trajectory(const vougc_system* s, const vougc_trajectory* t, vougc_analysis analysis,
                                  const vougc_partition* p, unsigned threads, vougc_map** out) {
  return guarded([&] {
    need(s, "system");
    need(t, "trajectory");
    need(out, "out");
    if (t->n != s->s.dim()) throw Error(Errc::dimension, "trajectory dimension does not match system");
    *out = run_map(s, t->t.states, analysis, p, threads);
  });
}

size_t vougc_map_size(const vougc_map* m) { return m ? m->samples.size() : 0; }
size_t vougc_map_dim(const vougc_map* m) { return m ? m->n : 0; }

int vougc_map_sample(const vougc_map* m, size_t k, double* lambda, double* det_j, int* singular) {
  if (!m || k >= m->samples.size()) return 0;
  const auto& s = m->samples[k];
  if (lambda) *lambda = s.ok ? s.lambda : kNaN;
  if (det_j) *det_j = s.ok ? s.detJ : kNaN;
  if (singular) *singular = s.singular ? 1 : 0;
  return s.complete() ? 1 : 0;
}

const double* vougc_map_point(const vougc_map* m, size_t k) {
  if (!m || k >= m->samples.size()) return nullptr;
  return m->samples[k].point.data();
}

const char* vougc_map_error(const vougc_map* m, size_t k) {
  if (!m || k >= m->samples.size()) return "out of range";
  const auto& s = m->samples[k];
  if (!s.ok) return s.error.c_str();
  for (std::size_t i = 0; i < s.graph.n; ++i)
    for (std::size_t j = 0; j < s.graph.n; ++j)
      if (i != j && !s.graph.defined(i, j)) return s.graph.reason(i, j).c_str();
  return "";
}

double vougc_map_value(const vougc_map* m, size_t k, size_t i, size_t j) {
  if (!m || k >= m->samples.size()) return kNaN;
  const auto& g = m->samples[k].graph;
  if (i >= g.n || j >= g.n) return kNaN;
  return g.rates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

double vougc_map_rate(const vougc_map* m, size_t k) {
  if (!m || k >= m->samples.size() || !m->samples[k].ok) return kNaN;
  return m->samples[k].rate;
}

vougc_status vougc_map_global(const vougc_map* m, double* values, size_t* excluded, double* excluded_fraction) {
  return guarded([&] {
    need(m, "map");
    need(values, "values");
    const auto g = vougc::gcmap::global_rate(m->samples, m->analysis, 1.0);
    if (excluded) *excluded = g.excluded;
    if (excluded_fraction) *excluded_fraction = g.excludedFraction;
    if (m->analysis.kind == vougc::gcmap::AnalysisKind::partition)
      values[0] = g.rate;
    else
      to_rows(g.graph, values);
    // Re-run the coverage check with the default limit to report the failure.
    if (g.excludedFraction > vougc::gcmap::kMaxExcludedFraction)
      (void)vougc::gcmap::global_rate(m->samples, m->analysis);
  });
}

void vougc_map_free(vougc_map* m) { delete m; }

}  // extern "C"
