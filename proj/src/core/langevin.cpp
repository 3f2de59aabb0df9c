// SPDX-License-Identifier: Apache-2.0
#include "core/langevin.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "core/errors.hpp"

namespace vougc::langevin {

namespace {

std::string point_string(std::span<const double> y) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < y.size(); ++i) os << (i ? ", " : "") << y[i];
  os << ')';
  return os.str();
}

void check_matrix_diffusion(const Matrix& s, std::size_t n, const std::string& where) {
  if (static_cast<std::size_t>(s.rows()) != n || static_cast<std::size_t>(s.cols()) != n)
    throw Error(Errc::dimension, "diffusion matrix must be " + std::to_string(n) + "x" +
                                     std::to_string(n));
  if (!linalg::all_finite(s)) throw Error(Errc::diffusion, "diffusion matrix not finite" + where);
  if (!linalg::is_symmetric(s)) throw Error(Errc::diffusion, "diffusion matrix not symmetric" + where);
  const double scale = s.diagonal().cwiseAbs().maxCoeff();
  Eigen::LDLT<Matrix> ldlt(linalg::symmetrize(s));
  const Vector d = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || !(scale > 0.0) || d.minCoeff() <= kPdTol * scale)
    throw Error(Errc::diffusion, "diffusion matrix not positive-definite" + where);
}

}  // namespace

LangevinSystem LangevinSystem::from_expressions(std::size_t n, std::vector<std::string> paramNames,
                                                std::vector<double> paramValues,
                                                std::vector<Expr> drift, DiffusionSpec diffusion) {
  if (n == 0) throw Error(Errc::dimension, "system dimension must be positive");
  if (drift.size() != n) throw Error(Errc::dimension, "expected one drift expression per state variable");
  if (paramNames.size() != paramValues.size())
    throw Error(Errc::dimension, "parameter names and values differ in length");
  LangevinSystem s;
  s.n_ = n;
  s.paramNames_ = std::move(paramNames);
  s.paramValues_ = std::move(paramValues);
  s.driftExprs_ = std::move(drift);
  s.diffusion_ = std::move(diffusion);
  s.jacExprs_.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s.jacExprs_.push_back(differentiate(s.driftExprs_[i], j));

  // Capture by value: the callbacks must survive copies of the system.
  auto exprs = s.driftExprs_;
  auto jac = s.jacExprs_;
  auto params = s.paramValues_;
  s.drift_ = [exprs, params](std::span<const double> y, std::span<double> out) {
    for (std::size_t i = 0; i < exprs.size(); ++i) out[i] = exprs[i].eval(y, params);
  };
  s.jacobian_ = [jac, params, n](std::span<const double> y, Matrix& out) {
    out.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            jac[i * n + j].eval(y, params);
  };
  s.validate_diffusion();
  return s;
}

LangevinSystem LangevinSystem::from_functions(std::size_t n, DriftFn drift, JacobianFn jacobian,
                                              DiffusionSpec diffusion, std::string name) {
  if (n == 0) throw Error(Errc::dimension, "system dimension must be positive");
  if (!drift) throw Error(Errc::validation, "drift callback is required");
  LangevinSystem s;
  s.n_ = n;
  s.name_ = std::move(name);
  s.drift_ = std::move(drift);
  s.jacobian_ = std::move(jacobian);
  s.diffusion_ = std::move(diffusion);
  s.validate_diffusion();
  return s;
}

void LangevinSystem::validate_diffusion() const {
  if (const auto* sc = std::get_if<ScalarDiffusion>(&diffusion_)) {
    if (!std::isfinite(sc->nu) || sc->nu < 0.0)
      throw Error(Errc::diffusion, "scalar diffusion must be finite and non-negative");
  } else if (const auto* m = std::get_if<MatrixDiffusion>(&diffusion_)) {
    check_matrix_diffusion(m->sigma, n_, "");
  } else {
    const auto& e = std::get<ExprDiffusion>(diffusion_);
    if (e.entries.size() != n_ * n_)
      throw Error(Errc::dimension, "expression diffusion needs n*n entries");
  }
}

void LangevinSystem::drift(std::span<const double> y, std::span<double> out) const {
  drift_(y, out);
}

Vector LangevinSystem::drift(const Vector& y) const {
  if (static_cast<std::size_t>(y.size()) != n_) throw Error(Errc::dimension, "state has wrong length");
  Vector out(y.size());
  drift_(std::span<const double>(y.data(), n_), std::span<double>(out.data(), n_));
  return out;
}

Matrix LangevinSystem::jacobian(const Vector& y) const {
  if (static_cast<std::size_t>(y.size()) != n_) throw Error(Errc::dimension, "state has wrong length");
  if (!jacobian_) return jacobian_fd(y);
  Matrix j;
  jacobian_(std::span<const double>(y.data(), n_), j);
  return j;
}

Matrix LangevinSystem::jacobian_fd(const Vector& y) const {
  if (static_cast<std::size_t>(y.size()) != n_) throw Error(Errc::dimension, "state has wrong length");
  const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  const auto n = static_cast<Eigen::Index>(n_);
  Matrix j(n, n);
  Vector yp = y;
  Vector fp(n), fm(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double h = base * std::max(1.0, std::abs(y(k)));
    yp(k) = y(k) + h;
    const double up = yp(k);
    drift_(std::span<const double>(yp.data(), n_), std::span<double>(fp.data(), n_));
    yp(k) = y(k) - h;
    const double dn = yp(k);
    drift_(std::span<const double>(yp.data(), n_), std::span<double>(fm.data(), n_));
    yp(k) = y(k);
    j.col(k) = (fp - fm) / (up - dn);
  }
  return j;
}

Matrix LangevinSystem::diffusion(const Vector& y) const {
  const auto n = static_cast<Eigen::Index>(n_);
  if (const auto* sc = std::get_if<ScalarDiffusion>(&diffusion_))
    return sc->nu * Matrix::Identity(n, n);
  if (const auto* m = std::get_if<MatrixDiffusion>(&diffusion_)) return m->sigma;
  const auto& e = std::get<ExprDiffusion>(diffusion_);
  Matrix s(n, n);
  const std::span<const double> ys(y.data(), n_);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      s(i, j) = e.entries[static_cast<std::size_t>(i * n + j)].eval(ys, paramValues_);
  return s;
}

// ---------------------------------------------------------------------------
// system documents

namespace {

std::size_t codepoints(std::string_view s) {
  std::size_t c = 0;
  for (unsigned char ch : s)
    if ((ch & 0xC0) != 0x80) ++c;
  return c;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

struct Line {
  std::size_t number = 0;
  std::string_view raw;   // comment stripped
};

/// Position helper: column (1-based, codepoints) of a view inside its line.
std::size_t column_of(const Line& l, std::string_view part) {
  return codepoints(l.raw.substr(0, static_cast<std::size_t>(part.data() - l.raw.data()))) + 1;
}

[[noreturn]] void fail(Errc code, const Line& l, std::string_view at, const std::string& msg) {
  throw ParseError(code, l.number, column_of(l, at), msg);
}

/// `<key> = <value>`; returns false when there is no '='.
bool split_assignment(std::string_view text, std::string_view& key, std::string_view& value) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) return false;
  key = trim(text.substr(0, eq));
  value = text.substr(eq + 1);
  // keep the view anchored at its first non-space character
  while (!value.empty() && std::isspace(static_cast<unsigned char>(value.front()))) value.remove_prefix(1);
  while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back()))) value.remove_suffix(1);
  return true;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  const auto c0 = static_cast<unsigned char>(s[0]);
  if (!(std::isalpha(c0) || c0 == '_' || c0 >= 0x80)) return false;
  for (unsigned char c : s)
    if (!(std::isalnum(c) || c == '_' || c >= 0x80)) return false;
  return true;
}

/// Parses "<prefix><digits>" and returns the number, or nullopt.
std::optional<std::size_t> indexed_name(std::string_view s, std::string_view prefix) {
  if (s.size() <= prefix.size() || s.substr(0, prefix.size()) != prefix) return std::nullopt;
  std::size_t v = 0;
  const auto* b = s.data() + prefix.size();
  const auto* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) return std::nullopt;
  return v;
}

bool is_state_name(std::string_view s) { return indexed_name(s, "y").has_value(); }

bool reserved_function(std::string_view s) {
  for (const char* f : {"sin", "cos", "tan", "exp", "log", "sqrt", "tanh", "abs"})
    if (s == f) return true;
  return false;
}

std::optional<double> parse_number(std::string_view s) {
  double v = 0.0;
  const auto* b = s.data();
  const auto* e = s.data() + s.size();
  if (b != e && *b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) return std::nullopt;
  return v;
}

}  // namespace

LangevinSystem parse_system(std::string_view text) {
  std::vector<Line> lines;
  {
    std::size_t number = 1;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string_view raw = text.substr(pos, end - pos);
      if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
      if (auto h = raw.find('#'); h != std::string_view::npos) raw = raw.substr(0, h);
      lines.push_back({number, raw});
      ++number;
      if (end == text.size()) break;
      pos = end + 1;
    }
  }

  enum class Section { none, system, params, drift, sigma };
  Section section = Section::none;
  std::size_t n = 0;
  std::optional<Line> nLine;
  std::vector<std::string> paramNames;
  std::vector<double> paramValues;
  SymbolTable symbols;
  std::vector<std::optional<Expr>> drift;
  bool seenDrift = false;
  bool seenSigma = false;
  std::optional<ScalarDiffusion> scalar;
  std::vector<std::vector<double>> rows;
  std::vector<std::optional<Expr>> sigmaExprs;
  Line lastLine{};

  auto require_n = [&](const Line& l, std::string_view at) {
    if (n == 0) fail(Errc::semantic, l, at, "[system] with n must come first");
  };

  for (const Line& l : lines) {
    lastLine = l;
    const std::string_view body = trim(l.raw);
    if (body.empty()) continue;

    if (body.front() == '[') {
      if (body.back() != ']') fail(Errc::parse, l, body, "expected ']' to close section header");
      const std::string_view name = trim(body.substr(1, body.size() - 2));
      auto enter = [&](Section s, bool& seen) {
        if (seen) fail(Errc::semantic, l, body, "duplicate section [" + std::string(name) + "]");
        seen = true;
        section = s;
      };
      if (name == "system") {
        if (nLine) fail(Errc::semantic, l, body, "duplicate section [system]");
        section = Section::system;
      } else if (name == "params") {
        require_n(l, body);
        section = Section::params;
      } else if (name == "drift") {
        require_n(l, body);
        enter(Section::drift, seenDrift);
        drift.assign(n, std::nullopt);
      } else if (name == "sigma") {
        require_n(l, body);
        enter(Section::sigma, seenSigma);
      } else {
        fail(Errc::parse, l, body,
             "unknown section [" + std::string(name) + "], expected one of system, params, drift, sigma");
      }
      continue;
    }

    std::string_view key, value;
    switch (section) {
      case Section::none:
        fail(Errc::parse, l, body, "expected a section header such as [system]");

      case Section::system: {
        if (!split_assignment(body, key, value)) fail(Errc::parse, l, body, "expected 'n = <count>'");
        if (key != "n") fail(Errc::parse, l, key, "unknown key '" + std::string(key) + "' in [system]");
        if (nLine) fail(Errc::semantic, l, key, "n given twice");
        std::size_t v = 0;
        auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (value.empty() || ec != std::errc() || p != value.data() + value.size() || v == 0)
          fail(Errc::parse, l, value.empty() ? body.substr(body.size()) : value,
               "expected a positive integer dimension");
        n = v;
        nLine = l;
        symbols.stateDim = n;
        break;
      }

      case Section::params: {
        if (!split_assignment(body, key, value)) fail(Errc::parse, l, body, "expected '<name> = <value>'");
        if (!is_identifier(key)) fail(Errc::parse, l, key, "invalid parameter name '" + std::string(key) + "'");
        if (is_state_name(key) || reserved_function(key))
          fail(Errc::semantic, l, key, "'" + std::string(key) + "' is reserved");
        if (symbols.params.count(key))
          fail(Errc::semantic, l, key, "parameter '" + std::string(key) + "' defined twice");
        if (value.empty()) fail(Errc::parse, l, body.substr(body.size()), "expected a value");
        SymbolTable fold = symbols;
        fold.stateDim = 0;  // parameters are constants
        fold.foldValues = paramValues;
        const Expr e = parse_expression(value, fold, l.number, column_of(l, value));
        if (e.kind() != NodeKind::constant)
          fail(Errc::semantic, l, value, "parameter value must be constant");
        if (!std::isfinite(e.value())) fail(Errc::semantic, l, value, "parameter value is not finite");
        symbols.params.emplace(std::string(key), paramNames.size());
        paramNames.emplace_back(key);
        paramValues.push_back(e.value());
        break;
      }

      case Section::drift: {
        if (!split_assignment(body, key, value)) fail(Errc::parse, l, body, "expected 'dyK = <expression>'");
        const auto k = indexed_name(key, "dy");
        if (!k) fail(Errc::parse, l, key, "expected 'dyK' on the left-hand side");
        if (*k < 1 || *k > n)
          fail(Errc::semantic, l, key, "drift index out of range 1.." + std::to_string(n));
        if (drift[*k - 1]) fail(Errc::semantic, l, key, "drift for y" + std::to_string(*k) + " given twice");
        if (value.empty()) fail(Errc::parse, l, body.substr(body.size()), "expected an expression");
        drift[*k - 1] = parse_expression(value, symbols, l.number, column_of(l, value));
        break;
      }

      case Section::sigma: {
        if (split_assignment(body, key, value)) {
          if (!rows.empty()) fail(Errc::parse, l, body, "cannot mix matrix rows with assignments");
          if (key == "scalar") {
            if (scalar || !sigmaExprs.empty()) fail(Errc::semantic, l, key, "diffusion specified twice");
            if (value.empty()) fail(Errc::parse, l, body.substr(body.size()), "expected a value");
            SymbolTable fold = symbols;
            fold.stateDim = 0;
            fold.foldValues = paramValues;
            const Expr e = parse_expression(value, fold, l.number, column_of(l, value));
            if (e.kind() != NodeKind::constant) fail(Errc::semantic, l, value, "scalar diffusion must be constant");
            if (!(e.value() > 0.0) || !std::isfinite(e.value()))
              fail(Errc::semantic, l, value, "scalar diffusion must be positive");
            scalar = ScalarDiffusion{e.value()};
          } else {
            if (scalar) fail(Errc::semantic, l, key, "diffusion specified twice");
            // sIJ with single-digit I, J, or s<I>_<J> for larger systems
            std::optional<std::size_t> i, j;
            if (const auto us = key.find('_'); us != std::string_view::npos) {
              i = indexed_name(key.substr(0, us), "s");
              if (i) j = indexed_name(std::string("s") + std::string(key.substr(us + 1)), "s");
            } else if (key.size() == 3 && key[0] == 's' && std::isdigit(static_cast<unsigned char>(key[1])) &&
                       std::isdigit(static_cast<unsigned char>(key[2]))) {
              i = static_cast<std::size_t>(key[1] - '0');
              j = static_cast<std::size_t>(key[2] - '0');
            }
            if (!i || !j) fail(Errc::parse, l, key, "expected 'scalar' or 'sIJ' on the left-hand side");
            if (*i < 1 || *i > n || *j < 1 || *j > n)
              fail(Errc::semantic, l, key, "diffusion index out of range 1.." + std::to_string(n));
            if (sigmaExprs.empty()) sigmaExprs.assign(n * n, std::nullopt);
            auto& slot = sigmaExprs[(*i - 1) * n + (*j - 1)];
            if (slot) fail(Errc::semantic, l, key, "diffusion entry given twice");
            if (value.empty()) fail(Errc::parse, l, body.substr(body.size()), "expected an expression");
            slot = parse_expression(value, symbols, l.number, column_of(l, value));
          }
        } else {
          if (scalar || !sigmaExprs.empty()) fail(Errc::parse, l, body, "cannot mix matrix rows with assignments");
          std::vector<double> row;
          std::size_t p = 0;
          const std::string_view raw = l.raw;
          while (p < raw.size()) {
            while (p < raw.size() && std::isspace(static_cast<unsigned char>(raw[p]))) ++p;
            if (p >= raw.size()) break;
            std::size_t q = p;
            while (q < raw.size() && !std::isspace(static_cast<unsigned char>(raw[q]))) ++q;
            const std::string_view tok = raw.substr(p, q - p);
            const auto v = parse_number(tok);
            if (!v) fail(Errc::parse, l, tok, "expected a number, got '" + std::string(tok) + "'");
            row.push_back(*v);
            p = q;
          }
          if (row.size() != n)
            fail(Errc::semantic, l, body,
                 "diffusion row has " + std::to_string(row.size()) + " entries, expected " + std::to_string(n));
          if (rows.size() == n) fail(Errc::semantic, l, body, "too many diffusion rows");
          rows.push_back(std::move(row));
        }
        break;
      }
    }
  }

  const std::string_view eof = lastLine.raw.substr(lastLine.raw.size());
  if (!nLine) fail(Errc::semantic, lastLine, eof, "missing [system] section with n");
  if (!seenDrift) fail(Errc::semantic, lastLine, eof, "missing [drift] section");
  std::vector<Expr> driftExprs;
  for (std::size_t k = 0; k < n; ++k) {
    if (!drift[k]) fail(Errc::semantic, lastLine, eof, "missing drift dy" + std::to_string(k + 1));
    driftExprs.push_back(*drift[k]);
  }

  DiffusionSpec diffusion = ScalarDiffusion{1.0};
  if (scalar) {
    diffusion = *scalar;
  } else if (!rows.empty()) {
    if (rows.size() != n)
      fail(Errc::semantic, lastLine, eof,
           "diffusion matrix has " + std::to_string(rows.size()) + " rows, expected " + std::to_string(n));
    Matrix s(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    diffusion = MatrixDiffusion{s};
  } else if (!sigmaExprs.empty()) {
    ExprDiffusion ed;
    for (std::size_t k = 0; k < n * n; ++k) {
      if (!sigmaExprs[k])
        fail(Errc::semantic, lastLine, eof,
             "missing diffusion entry s" + std::to_string(k / n + 1) + std::to_string(k % n + 1));
      ed.entries.push_back(*sigmaExprs[k]);
    }
    diffusion = std::move(ed);
  }

  return LangevinSystem::from_expressions(n, std::move(paramNames), std::move(paramValues),
                                          std::move(driftExprs), std::move(diffusion));
}

LangevinSystem builtin_lorenz(double sigma, double rho, double beta, double nu) {
  if (!std::isfinite(sigma) || !std::isfinite(rho) || !std::isfinite(beta))
    throw Error(Errc::domain, "Lorenz parameters must be finite");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw Error(Errc::domain, "nu must be positive and finite");
  auto drift = [sigma, rho, beta](std::span<const double> y, std::span<double> f) {
    f[0] = sigma * (y[1] - y[0]);
    f[1] = y[0] * (rho - y[2]) - y[1];
    f[2] = y[0] * y[1] - beta * y[2];
  };
  auto jac = [sigma, rho, beta](std::span<const double> y, Matrix& j) {
    j.resize(3, 3);
    j << -sigma, sigma, 0.0,
         rho - y[2], -1.0, -y[0],
         y[1], y[0], -beta;
  };
  return LangevinSystem::from_functions(3, drift, jac, ScalarDiffusion{nu}, "lorenz");
}

LangevinSystem linear_system(const Matrix& a, const Matrix& sigma) {
  if (a.rows() != a.cols() || a.rows() == 0) throw Error(Errc::dimension, "drift matrix must be square");
  if (!linalg::all_finite(a)) throw Error(Errc::validation, "drift matrix not finite");
  const auto n = static_cast<std::size_t>(a.rows());
  auto drift = [a](std::span<const double> y, std::span<double> f) {
    Eigen::Map<const Vector> yv(y.data(), a.cols());
    Eigen::Map<Vector>(f.data(), a.rows()).noalias() = a * yv;
  };
  auto jac = [a](std::span<const double>, Matrix& j) { j = a; };
  return LangevinSystem::from_functions(n, drift, jac, MatrixDiffusion{sigma}, "linear");
}

LocalLinearization linearize(const LangevinSystem& system, const Vector& y0) {
  const std::size_t n = system.dim();
  if (static_cast<std::size_t>(y0.size()) != n) throw Error(Errc::dimension, "point has wrong length");
  const std::span<const double> ys(y0.data(), n);
  if (!linalg::all_finite(y0)) throw Error(Errc::domain, "non-finite point " + point_string(ys));
  const Vector f = system.drift(y0);
  if (!linalg::all_finite(f)) throw Error(Errc::domain, "drift is not finite at " + point_string(ys));
  Matrix j = system.jacobian(y0);
  if (!linalg::all_finite(j)) throw Error(Errc::domain, "Jacobian is not finite at " + point_string(ys));

  Matrix s = system.diffusion(y0);
  check_matrix_diffusion(s, n, " at " + point_string(ys));

  std::optional<VouModel> vou;
  try {
    vou = VouModel::create(j, s);
  } catch (const Error& e) {
    if (e.code() == Errc::ill_conditioned) throw Error(Errc::diffusion, std::string(e.what()) + " at " + point_string(ys));
    throw;
  }

  LocalLinearization out{y0, *vou, 0.0, 0.0, false};
  out.detJ = j.determinant();
  out.stabilityExponent = linalg::spectrum(j).maxRealPart;
  const double scale = std::max(1.0, j.cwiseAbs().rowwise().sum().maxCoeff());
  out.singular = std::abs(out.detJ) <= kSingTol * scale;
  return out;
}

}  // namespace vougc::langevin
