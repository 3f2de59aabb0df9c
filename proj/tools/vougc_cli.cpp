// SPDX-License-Identifier: Apache-2.0
//
// vougc: command-line front end. Links only the C interface.
//
// Exit codes: 0 ok, 2 parse, 3 validation/usage, 4 solver, 5 numerical,
// 6 divergence, 70 internal. Data goes to stdout, diagnostics to stderr.

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vougc/vougc.h"

namespace {

using json = nlohmann::json;

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using ModelPtr = std::unique_ptr<vougc_model, Deleter<vougc_model, vougc_model_free>>;
using ResultPtr = std::unique_ptr<vougc_result, Deleter<vougc_result, vougc_result_free>>;
using GraphPtr = std::unique_ptr<vougc_graph, Deleter<vougc_graph, vougc_graph_free>>;
using ConvPtr = std::unique_ptr<vougc_convergence, Deleter<vougc_convergence, vougc_convergence_free>>;
using SystemPtr = std::unique_ptr<vougc_system, Deleter<vougc_system, vougc_system_free>>;
using TrajPtr = std::unique_ptr<vougc_trajectory, Deleter<vougc_trajectory, vougc_trajectory_free>>;
using MapPtr = std::unique_ptr<vougc_map, Deleter<vougc_map, vougc_map_free>>;

constexpr int kUsage = 3;

/// Carries an exit code out of a subcommand.
struct Exit {
  int code;
};

[[noreturn]] void die(int code, const std::string& msg) {
  std::fprintf(stderr, "vougc: %s\n", msg.c_str());
  throw Exit{code};
}

void check(vougc_status s) {
  if (s == VOUGC_OK) return;
  std::string kind = vougc_last_error_kind();
  die(static_cast<int>(s), (kind.empty() ? "" : kind + ": ") + vougc_last_error());
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}
std::string g17(double v) { return fmt("%.17g", v); }

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    die(70, "SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

// ---------------------------------------------------------------------------
// run manifest

struct Manifest {
  json doc;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::string path;

  void input(const std::string& file, const std::string& content) {
    doc["inputs"].push_back({{"path", file}, {"sha256", sha256_hex(content)}});
  }

  void emit() {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    doc["timing"]["wall_seconds"] = secs;
    const std::string text = doc.dump();
    if (path.empty()) {
      std::fprintf(stderr, "manifest: %s\n", text.c_str());
    } else {
      std::ofstream f(path);
      if (!f) die(kUsage, "cannot write manifest " + path);
      f << doc.dump(2) << '\n';
    }
  }
};

Manifest make_manifest(int argc, char** argv) {
  Manifest m;
  std::vector<std::string> args(argv, argv + argc);
  m.doc["command"] = args;
  m.doc["version"] = vougc_version();
  m.doc["inputs"] = json::array();
  m.doc["seed"] = nullptr;
  const std::time_t now = std::time(nullptr);
  char ts[32];
  std::strftime(ts, sizeof ts, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  m.doc["timing"]["started_utc"] = ts;
  return m;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) die(kUsage, "cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

ModelPtr load_model(const std::string& path, Manifest& man) {
  const std::string text = read_file(path);
  man.input(path, text);
  vougc_model* m = nullptr;
  const vougc_status s = vougc_model_parse(text.data(), text.size(), &m);
  if (s != VOUGC_OK) die(static_cast<int>(s), path + ": " + vougc_last_error());
  return ModelPtr(m);
}

// ---------------------------------------------------------------------------
// partitions (1-based on the command line)

struct PartitionArgs {
  std::vector<std::size_t> target, cond, source;
  bool condGiven = false;
};

std::vector<std::size_t> to_zero_based(const std::vector<std::size_t>& v, std::size_t n, const char* what) {
  std::vector<std::size_t> out;
  for (std::size_t k : v) {
    if (k < 1 || k > n)
      die(kUsage, std::string(what) + " index " + std::to_string(k) + " out of range 1.." + std::to_string(n));
    out.push_back(k - 1);
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct Partition {
  std::vector<std::size_t> target, cond, source;
  vougc_partition view() const {
    return {target.data(), target.size(), cond.data(), cond.size(), source.data(), source.size()};
  }
};

Partition resolve(const PartitionArgs& a, std::size_t n) {
  Partition p;
  if (a.target.empty()) die(kUsage, "--target is required");
  if (a.source.empty()) die(kUsage, "--source is required");
  p.target = to_zero_based(a.target, n, "--target");
  p.source = to_zero_based(a.source, n, "--source");
  if (a.condGiven) {
    p.cond = to_zero_based(a.cond, n, "--cond");
  } else {
    for (std::size_t i = 0; i < n; ++i)
      if (!std::binary_search(p.target.begin(), p.target.end(), i) &&
          !std::binary_search(p.source.begin(), p.source.end(), i))
        p.cond.push_back(i);
  }
  return p;
}

void add_partition_options(CLI::App* cmd, PartitionArgs& a) {
  cmd->add_option("--target", a.target, "target variables (1-based, comma separated)")->delimiter(',');
  cmd->add_option("--cond", a.cond, "conditioning variables; default: all others")->delimiter(',');
  cmd->add_option("--source", a.source, "source variables")->delimiter(',');
}

std::string flag_names(unsigned f) {
  std::string s;
  auto add = [&](const char* name) {
    if (!s.empty()) s += ',';
    s += name;
  };
  if (f & VOUGC_FLAG_DETECTABLE) add("detectable");
  if (f & VOUGC_FLAG_SOURCE_DECOUPLED) add("sourceDecoupled");
  if (f & VOUGC_FLAG_MARGINAL) add("marginal");
  return s.empty() ? "none" : s;
}

void print_matrix(const char* name, const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  std::printf("%s =", name);
  if (rows == 0) {
    std::printf(" []\n");
    return;
  }
  std::printf("\n");
  for (std::size_t i = 0; i < rows; ++i) {
    std::printf(" ");
    for (std::size_t j = 0; j < cols; ++j) std::printf(" %s", g17(v[i * cols + j]).c_str());
    std::printf("\n");
  }
}

// ---------------------------------------------------------------------------
// rate

struct RateArgs {
  std::string model;
  PartitionArgs part;
  bool unconditional = false;
  std::optional<double> oracleDt;
  std::optional<double> horizon;
  std::optional<double> scale;
  bool dump = false;
  bool hamiltonian = false;
};

int cmd_rate(const RateArgs& a, Manifest& man) {
  ModelPtr model = load_model(a.model, man);
  if (a.scale) {
    vougc_model* scaled = nullptr;
    check(vougc_model_scaled(model.get(), *a.scale, &scaled));
    model.reset(scaled);
    man.doc["scale"] = *a.scale;
  }
  if (a.dump) {
    char* text = nullptr;
    check(vougc_model_dump(model.get(), &text));
    std::fputs(text, stdout);
    vougc_string_free(text);
    return 0;
  }
  const std::size_t n = vougc_model_dim(model.get());
  if (a.unconditional && a.part.condGiven) die(kUsage, "--cond cannot be combined with --unconditional");
  const Partition p = resolve(a.part, n);
  const vougc_partition pv = p.view();

  vougc_result* raw = nullptr;
  if (a.unconditional)
    check(vougc_rate_unconditional(model.get(), p.target.data(), p.target.size(), p.source.data(),
                                   p.source.size(), &raw));
  else
    check(vougc_rate_conditional(model.get(), &pv, a.hamiltonian ? 1 : 0, &raw));
  ResultPtr r(raw);

  const double rate = vougc_result_rate(r.get());
  std::printf("rate = %.6f\n", rate);
  std::printf("te_rate = %.6f\n", vougc_result_te_rate(r.get()));
  std::printf("rate_exact = %s\n", g17(rate).c_str());
  std::printf("flags = %s\n", flag_names(vougc_result_flags(r.get())).c_str());
  const std::size_t m = vougc_result_p33(r.get(), nullptr, 0);
  std::vector<double> p33(m * m);
  vougc_result_p33(r.get(), p33.data(), p33.size());
  print_matrix("P33", p33, m, m);
  std::size_t gr = 0, gc = 0;
  const std::size_t total = vougc_result_gain(r.get(), nullptr, 0, &gr, &gc);
  std::vector<double> gain(total);
  vougc_result_gain(r.get(), gain.data(), gain.size(), nullptr, nullptr);
  print_matrix("gain", gain, gr, gc);
  std::printf("closed_loop_max_re = %s\n", g17(vougc_result_closed_loop_max_re(r.get())).c_str());
  std::printf("residual = %s\n", g17(vougc_result_residual(r.get())).c_str());

  if (a.horizon) {
    if (a.unconditional) die(kUsage, "--horizon needs a conditional partition");
    double f = 0.0;
    check(vougc_finite_horizon(model.get(), &pv, *a.horizon, &f));
    std::printf("horizon = %s\n", g17(*a.horizon).c_str());
    std::printf("horizon_rate = %s\n", g17(f / *a.horizon).c_str());
  }
  if (a.oracleDt) {
    if (a.unconditional) die(kUsage, "--check-oracle needs a conditional partition");
    double est = 0.0;
    check(vougc_rate_via_subsampling(model.get(), &pv, *a.oracleDt, &est));
    const double gap = rate != 0.0 ? std::abs(est - rate) / rate : std::abs(est - rate);
    std::printf("oracle_dt = %s\n", g17(*a.oracleDt).c_str());
    std::printf("oracle_rate = %s\n", g17(est).c_str());
    std::printf("oracle_rel_gap = %s\n", g17(gap).c_str());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// graph

struct GraphArgs {
  std::string model;
  bool unconditional = false;
  bool csv = false;
};

int cmd_graph(const GraphArgs& a, Manifest& man) {
  ModelPtr model = load_model(a.model, man);
  vougc_graph* raw = nullptr;
  check(a.unconditional ? vougc_graph_unconditional(model.get(), &raw) : vougc_graph_pairwise(model.get(), &raw));
  GraphPtr g(raw);
  const std::size_t n = vougc_graph_dim(g.get());
  const char* dash = "-";

  auto cell = [&](std::size_t i, std::size_t j) -> std::string {
    if (i == j) return dash;
    const std::string reason = vougc_graph_reason(g.get(), i, j);
    if (!reason.empty()) return "nan";
    return a.csv ? g17(vougc_graph_rate(g.get(), i, j)) : fmt("%.6f", vougc_graph_rate(g.get(), i, j));
  };

  if (a.csv) {
    std::printf("target");
    for (std::size_t j = 0; j < n; ++j) std::printf(",y%zu", j + 1);
    std::printf("\n");
    for (std::size_t i = 0; i < n; ++i) {
      std::printf("y%zu", i + 1);
      for (std::size_t j = 0; j < n; ++j) std::printf(",%s", cell(i, j).c_str());
      std::printf("\n");
    }
  } else {
    // rows: target i, columns: source j
    const int w = 12;
    std::printf("%-6s", "to\\from");
    for (std::size_t j = 0; j < n; ++j) std::printf("%*s", w, ("y" + std::to_string(j + 1)).c_str());
    std::printf("\n");
    for (std::size_t i = 0; i < n; ++i) {
      std::printf("%-7s", ("y" + std::to_string(i + 1)).c_str());
      for (std::size_t j = 0; j < n; ++j) {
        const std::string c = cell(i, j);
        // the dash is one column wide but three bytes long
        const int pad = i == j ? w + 2 : w;
        std::printf("%*s", pad, c.c_str());
      }
      std::printf("\n");
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && *vougc_graph_reason(g.get(), i, j))
        std::fprintf(stderr, "vougc: G_%zu_%zu undefined: %s\n", i + 1, j + 1, vougc_graph_reason(g.get(), i, j));
  return 0;
}

// ---------------------------------------------------------------------------
// oracle-check

struct OracleArgs {
  std::string model;
  PartitionArgs part;
  std::vector<double> dts;
  bool absolute = false;
};

int cmd_oracle(const OracleArgs& a, Manifest& man) {
  ModelPtr model = load_model(a.model, man);
  const std::size_t n = vougc_model_dim(model.get());
  const Partition p = resolve(a.part, n);
  const vougc_partition pv = p.view();

  std::vector<double> dts = a.dts.empty() ? std::vector<double>{1e-2, 1e-3, 1e-4} : a.dts;
  if (!a.absolute) {
    std::vector<double> am(n * n);
    vougc_model_get(model.get(), am.data(), nullptr);
    double mx = 0.0;
    for (double v : am) mx = std::max(mx, std::abs(v));
    if (mx > 0.0)
      for (double& d : dts) d /= mx;
  }
  vougc_convergence* raw = nullptr;
  check(vougc_convergence_check(model.get(), &pv, dts.data(), dts.size(), &raw));
  ConvPtr c(raw);
  std::printf("%-24s %-24s %-24s %s\n", "dt", "estimate", "analytic", "rel_error");
  for (std::size_t k = 0; k < vougc_convergence_rows(c.get()); ++k) {
    double dt, est, an, rel;
    vougc_convergence_row(c.get(), k, &dt, &est, &an, &rel);
    std::printf("%-24s %-24s %-24s %s\n", g17(dt).c_str(), g17(est).c_str(), g17(an).c_str(), g17(rel).c_str());
  }
  const double slope = vougc_convergence_slope(c.get());
  std::printf("slope = %s\n", std::isnan(slope) ? "nan" : fmt("%.6f", slope).c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// map / stability

struct MapArgs {
  std::string builtin;
  std::string system;
  std::string points;
  double duration = 200.0;
  double dt = 0.01;
  double transient = 100.0;
  std::vector<double> y0;
  bool sde = false;
  std::uint64_t seed = 0;
  int substeps = 10;
  std::string analysis = "graph";
  PartitionArgs part;
  unsigned threads = 0;
  double sigma = 10.0, rho = 28.0, beta = 8.0 / 3.0, nu = 1.0;
};

SystemPtr load_system(const MapArgs& a, Manifest& man) {
  vougc_system* raw = nullptr;
  if (!a.builtin.empty() == !a.system.empty()) die(kUsage, "give exactly one of --builtin or --system");
  if (!a.builtin.empty()) {
    if (a.builtin != "lorenz") die(kUsage, "unknown built-in system '" + a.builtin + "'");
    check(vougc_system_lorenz(a.sigma, a.rho, a.beta, a.nu, &raw));
    man.doc["system"] = {{"builtin", "lorenz"},
                         {"sigma", a.sigma}, {"rho", a.rho}, {"beta", a.beta}, {"nu", a.nu}};
  } else {
    const std::string text = read_file(a.system);
    man.input(a.system, text);
    const vougc_status s = vougc_system_parse(text.data(), text.size(), &raw);
    if (s != VOUGC_OK) die(static_cast<int>(s), a.system + ": " + vougc_last_error());
  }
  return SystemPtr(raw);
}

std::vector<double> load_points(const std::string& path, std::size_t n, Manifest& man) {
  const std::string text = read_file(path);
  man.input(path, text);
  std::vector<double> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) die(2, path + ": line " + std::to_string(lineNo) + ": expected a number, got '" + tok + "'");
      row.push_back(v);
    }
    if (row.empty()) continue;
    if (row.size() != n)
      die(2, path + ": line " + std::to_string(lineNo) + ": expected " + std::to_string(n) + " coordinates");
    out.insert(out.end(), row.begin(), row.end());
  }
  if (out.empty()) die(kUsage, path + ": no points");
  return out;
}

vougc_analysis analysis_kind(const std::string& s) {
  if (s == "graph") return VOUGC_ANALYSIS_GRAPH;
  if (s == "unconditional-graph") return VOUGC_ANALYSIS_UNCONDITIONAL_GRAPH;
  if (s == "rate") return VOUGC_ANALYSIS_RATE;
  if (s == "stability") return VOUGC_ANALYSIS_STABILITY;
  die(kUsage, "unknown analysis '" + s + "'");
}

int cmd_map(const MapArgs& a, Manifest& man) {
  SystemPtr sys = load_system(a, man);
  const std::size_t n = vougc_system_dim(sys.get());
  const vougc_analysis kind = analysis_kind(a.analysis);
  std::optional<Partition> part;
  vougc_partition pv{};
  if (kind == VOUGC_ANALYSIS_RATE) {
    part = resolve(a.part, n);
    pv = part->view();
  }
  man.doc["analysis"] = a.analysis;
  man.doc["threads"] = a.threads;

  std::vector<double> times;
  MapPtr map;
  if (!a.points.empty()) {
    const std::vector<double> pts = load_points(a.points, n, man);
    const std::size_t count = pts.size() / n;
    for (std::size_t k = 0; k < count; ++k) times.push_back(static_cast<double>(k));
    vougc_map* raw = nullptr;
    check(vougc_map_points(sys.get(), pts.data(), count, kind, part ? &pv : nullptr, a.threads, &raw));
    map.reset(raw);
  } else {
    std::vector<double> y0 = a.y0.empty() ? std::vector<double>(n, 1.0) : a.y0;
    if (y0.size() != n) die(kUsage, "--y0 needs " + std::to_string(n) + " values");
    if (!(a.duration > a.transient)) die(kUsage, "--duration must exceed --transient");
    vougc_trajectory* traw = nullptr;
    if (a.sde) {
      check(vougc_integrate_sde(sys.get(), y0.data(), a.duration, a.dt, a.transient, a.seed, a.substeps, &traw));
      man.doc["seed"] = a.seed;
      man.doc["rng"] = vougc_rng_name();
    } else {
      check(vougc_integrate_ode(sys.get(), y0.data(), a.duration, a.dt, a.transient, a.substeps, &traw));
    }
    TrajPtr traj(traw);
    man.doc["integrator"] = {{"method", a.sde ? "euler-maruyama" : "rk4"},
                             {"dt", a.dt},
                             {"substeps", a.substeps},
                             {"duration", a.duration},
                             {"transient", a.transient},
                             {"y0", y0}};
    for (std::size_t k = 0; k < vougc_trajectory_length(traj.get()); ++k)
      times.push_back(vougc_trajectory_time(traj.get(), k));
    vougc_map* raw = nullptr;
    check(vougc_map_trajectory(sys.get(), traj.get(), kind, part ? &pv : nullptr, a.threads, &raw));
    map.reset(raw);
  }

  // header
  std::string header = "t";
  for (std::size_t i = 0; i < n; ++i) header += ",y" + std::to_string(i + 1);
  header += ",lambda,detJ,singular";
  const bool graph = kind == VOUGC_ANALYSIS_GRAPH || kind == VOUGC_ANALYSIS_UNCONDITIONAL_GRAPH;
  if (graph) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) header += ",G_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
  } else if (kind == VOUGC_ANALYSIS_RATE) {
    header += ",rate";
  }
  std::printf("%s\n", header.c_str());

  const std::size_t count = vougc_map_size(map.get());
  std::size_t unstable = 0;
  std::string row;
  for (std::size_t k = 0; k < count; ++k) {
    double lambda = 0.0, detJ = 0.0;
    int singular = 0;
    const int complete = vougc_map_sample(map.get(), k, &lambda, &detJ, &singular);
    if (!complete) std::fprintf(stderr, "vougc: sample %zu: %s\n", k, vougc_map_error(map.get(), k));
    if (lambda >= 0.0) ++unstable;
    const double* y = vougc_map_point(map.get(), k);
    row = g17(times[k]);
    for (std::size_t i = 0; i < n; ++i) row += "," + g17(y[i]);
    row += "," + g17(lambda) + "," + g17(detJ) + (singular ? ",1" : ",0");
    if (graph) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (i != j) row += "," + g17(vougc_map_value(map.get(), k, i, j));
    } else if (kind == VOUGC_ANALYSIS_RATE) {
      row += "," + g17(vougc_map_rate(map.get(), k));
    }
    std::printf("%s\n", row.c_str());
  }

  std::printf("# samples = %zu\n", count);
  std::printf("# unstable_fraction = %s\n", g17(static_cast<double>(unstable) / static_cast<double>(count)).c_str());
  if (kind == VOUGC_ANALYSIS_STABILITY) return 0;

  std::vector<double> global(graph ? n * n : 1);
  std::size_t excluded = 0;
  double fraction = 0.0;
  const vougc_status st = vougc_map_global(map.get(), global.data(), &excluded, &fraction);
  if (st != VOUGC_OK && excluded == 0 && fraction == 0.0) check(st);
  if (graph) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j)
          std::printf("# global G_%zu_%zu = %s\n", i + 1, j + 1, g17(global[i * n + j]).c_str());
  } else {
    std::printf("# global rate = %s\n", g17(global[0]).c_str());
  }
  std::printf("# excluded = %zu\n", excluded);
  std::printf("# excluded_fraction = %s\n", g17(fraction).c_str());
  man.doc["excluded_fraction"] = fraction;
  check(st);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Granger-causality rates for vector Ornstein-Uhlenbeck models and Langevin systems"};
  app.set_version_flag("--version", std::string(vougc_version()));
  app.require_subcommand(1);
  std::string manifestPath;
  app.add_option("--manifest", manifestPath, "write the run manifest (JSON) here instead of stderr");

  RateArgs rate;
  auto* cRate = app.add_subcommand("rate", "causality rate for one partition");
  cRate->add_option("model", rate.model, "model file")->required();
  add_partition_options(cRate, rate.part);
  cRate->add_flag("--unconditional", rate.unconditional, "treat the remaining variables as auxiliary");
  cRate->add_option("--check-oracle", rate.oracleDt, "also compute F(dt)/dt of the sampled process");
  cRate->add_option("--horizon", rate.horizon, "also print F(h)/h");
  cRate->add_option("--scale", rate.scale, "multiply Sigma by this factor first");
  cRate->add_flag("--dump-model", rate.dump, "print the (scaled) model document and exit");
  cRate->add_flag("--hamiltonian", rate.hamiltonian, "use the Hamiltonian solver for scalar sources");

  GraphArgs graph;
  auto* cGraph = app.add_subcommand("graph", "pairwise causality graph");
  cGraph->add_option("model", graph.model, "model file")->required();
  cGraph->add_flag("--unconditional", graph.unconditional, "unconditional pairwise rates");
  cGraph->add_flag("--csv", graph.csv, "CSV output with full precision");

  OracleArgs oracle;
  auto* cOracle = app.add_subcommand("oracle-check", "compare against the sampled discrete-time process");
  cOracle->add_option("model", oracle.model, "model file")->required();
  add_partition_options(cOracle, oracle.part);
  cOracle->add_option("--dt", oracle.dts, "sampling intervals (default 1e-2,1e-3,1e-4)")->delimiter(',');
  cOracle->add_flag("--absolute", oracle.absolute, "use --dt as given instead of dividing by max|A|");

  MapArgs map;
  auto add_map_options = [&](CLI::App* c) {
    c->add_option("--builtin", map.builtin, "built-in system (lorenz)");
    c->add_option("--system", map.system, "system definition file");
    c->add_option("--points", map.points, "evaluate at these points instead of a trajectory");
    c->add_option("--duration", map.duration, "end time of the trajectory")->capture_default_str();
    c->add_option("--dt", map.dt, "sampling interval")->capture_default_str();
    c->add_option("--transient", map.transient, "initial time to discard")->capture_default_str();
    c->add_option("--y0", map.y0, "initial state (default all ones)")->delimiter(',');
    c->add_flag("--sde", map.sde, "integrate with noise (Euler-Maruyama)");
    c->add_option("--seed", map.seed, "seed for --sde")->capture_default_str();
    c->add_option("--substeps", map.substeps, "integration steps per sampling interval")->capture_default_str();
    c->add_option("--threads", map.threads, "worker threads (0: VOUGC_THREADS or all cores)");
    c->add_option("--sigma", map.sigma, "Lorenz sigma")->capture_default_str();
    c->add_option("--rho", map.rho, "Lorenz rho")->capture_default_str();
    c->add_option("--beta", map.beta, "Lorenz beta")->capture_default_str();
    c->add_option("--nu", map.nu, "noise intensity of the built-in system")->capture_default_str();
  };
  auto* cMap = app.add_subcommand("map", "local causality map along a trajectory or point set");
  add_map_options(cMap);
  cMap->add_option("--analysis", map.analysis, "graph | unconditional-graph | rate | stability")
      ->capture_default_str();
  add_partition_options(cMap, map.part);
  auto* cStab = app.add_subcommand("stability", "local stability exponent along a trajectory or point set");
  add_map_options(cStab);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }
  rate.part.condGiven = cRate->count("--cond") > 0;
  oracle.part.condGiven = cOracle->count("--cond") > 0;
  map.part.condGiven = cMap->count("--cond") > 0;

  Manifest man = make_manifest(argc, argv);
  man.path = manifestPath;
  int code = 0;
  try {
    if (*cRate) code = cmd_rate(rate, man);
    else if (*cGraph) code = cmd_graph(graph, man);
    else if (*cOracle) code = cmd_oracle(oracle, man);
    else if (*cMap) code = cmd_map(map, man);
    else if (*cStab) {
      map.analysis = "stability";
      code = cmd_map(map, man);
    }
  } catch (const Exit& e) {
    code = e.code;
  }
  std::fflush(stdout);
  man.doc["exit_code"] = code;
  try {
    man.emit();
  } catch (const Exit& e) {
    if (code == 0) code = e.code;
  }
  return code;
}
