// SPDX-License-Identifier: Apache-2.0
//
// Immutable expression trees for drift and diffusion definitions, with exact
// symbolic differentiation. Trees are shared, never mutated, and safe to
// evaluate concurrently.
#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace vougc::langevin {

using Index = std::size_t;

enum class NodeKind { constant, variable, parameter, negate, add, sub, mul, div, pow, call };

/// `sign` is not part of the surface syntax; it appears in derivatives of abs.
enum class Func { sin, cos, tan, exp, log, sqrt, tanh, abs, sign };

inline constexpr std::size_t kMaxExprDepth = 64;

class Expr {
 public:
  Expr();  // constant 0

  static Expr constant(double v);
  static Expr variable(Index i);
  static Expr parameter(Index i, std::string name);
  static Expr call(Func f, const Expr& arg);

  // Smart constructors: fold constants and drop identities (0*x, 1*x, x+0, ...).
  friend Expr operator-(const Expr& a);
  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  static Expr pow(const Expr& base, const Expr& exponent);

  NodeKind kind() const noexcept;
  /// Constant value; only meaningful for NodeKind::constant.
  double value() const noexcept;
  /// Variable or parameter index.
  Index index() const noexcept;
  Func func() const noexcept;
  /// Parameter name; empty for other kinds.
  const std::string& name() const noexcept;
  Expr lhs() const;
  Expr rhs() const;

  bool is_constant(double v) const noexcept;
  /// True when the tree references any state variable.
  bool depends_on_state() const noexcept;
  std::size_t depth() const noexcept;

  double eval(std::span<const double> y, std::span<const double> params) const;

  std::string to_string() const;

  struct Node;  // opaque

 private:
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

/// Partial derivative with respect to state variable `wrt` (0-based).
/// d|u|/du is taken as sign(u), so it is 0 at u = 0.
Expr differentiate(const Expr& e, Index wrt);

/// Name resolution for the parser: y1..yN are state variables, everything
/// else must be a declared parameter or a function name.
struct SymbolTable {
  std::size_t stateDim = 0;
  std::map<std::string, Index, std::less<>> params;
  /// When set, parameters are folded to these values instead of referenced.
  std::span<const double> foldValues;
};

/// Parses one expression. `line` and `column` locate `text` in its document
/// for error messages (1-based). Throws ParseError (parse or semantic).
Expr parse_expression(std::string_view text, const SymbolTable& symbols, std::size_t line = 1,
                      std::size_t column = 1);

}  // namespace vougc::langevin
