// SPDX-License-Identifier: Apache-2.0
#include "core/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <vector>

#include "core/errors.hpp"

namespace vougc::langevin {

struct Expr::Node {
  NodeKind kind = NodeKind::constant;
  double value = 0.0;
  Index index = 0;
  Func func = Func::sin;
  std::string name;
  std::shared_ptr<const Node> a;
  std::shared_ptr<const Node> b;
  std::size_t depth = 1;
  bool state = false;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

double apply(Func f, double x) {
  switch (f) {
    case Func::sin: return std::sin(x);
    case Func::cos: return std::cos(x);
    case Func::tan: return std::tan(x);
    case Func::exp: return std::exp(x);
    case Func::log: return std::log(x);
    case Func::sqrt: return std::sqrt(x);
    case Func::tanh: return std::tanh(x);
    case Func::abs: return std::abs(x);
    case Func::sign: return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
  }
  return 0.0;
}

const char* func_name(Func f) {
  switch (f) {
    case Func::sin: return "sin";
    case Func::cos: return "cos";
    case Func::tan: return "tan";
    case Func::exp: return "exp";
    case Func::log: return "log";
    case Func::sqrt: return "sqrt";
    case Func::tanh: return "tanh";
    case Func::abs: return "abs";
    case Func::sign: return "sign";
  }
  return "?";
}

bool lookup_func(std::string_view name, Func& out) {
  static constexpr std::pair<std::string_view, Func> kFuncs[] = {
      {"sin", Func::sin}, {"cos", Func::cos},   {"tan", Func::tan},   {"exp", Func::exp},
      {"log", Func::log}, {"sqrt", Func::sqrt}, {"tanh", Func::tanh}, {"abs", Func::abs},
  };
  for (const auto& [n, f] : kFuncs) {
    if (n == name) {
      out = f;
      return true;
    }
  }
  return false;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

int precedence(const Expr& e) {
  switch (e.kind()) {
    case NodeKind::add:
    case NodeKind::sub: return 1;
    case NodeKind::mul:
    case NodeKind::div: return 2;
    case NodeKind::negate: return 3;
    case NodeKind::pow: return 4;
    case NodeKind::constant: return e.value() < 0.0 ? 3 : 5;
    default: return 5;
  }
}

void print(const Expr& e, std::string& out);

void print_child(const Expr& e, bool parens, std::string& out) {
  if (parens) out += '(';
  print(e, out);
  if (parens) out += ')';
}

void print(const Expr& e, std::string& out) {
  const int p = precedence(e);
  switch (e.kind()) {
    case NodeKind::constant: out += format_number(e.value()); return;
    case NodeKind::variable: out += "y" + std::to_string(e.index() + 1); return;
    case NodeKind::parameter: out += e.name(); return;
    case NodeKind::negate:
      out += '-';
      print_child(e.lhs(), precedence(e.lhs()) < 3, out);
      return;
    case NodeKind::add:
    case NodeKind::sub:
      print_child(e.lhs(), false, out);
      out += e.kind() == NodeKind::add ? " + " : " - ";
      print_child(e.rhs(), e.kind() == NodeKind::sub && precedence(e.rhs()) <= 1, out);
      return;
    case NodeKind::mul:
    case NodeKind::div:
      print_child(e.lhs(), precedence(e.lhs()) < p, out);
      out += e.kind() == NodeKind::mul ? "*" : "/";
      print_child(e.rhs(), precedence(e.rhs()) < p || (e.kind() == NodeKind::div && precedence(e.rhs()) == p),
                  out);
      return;
    case NodeKind::pow:
      print_child(e.lhs(), precedence(e.lhs()) <= p, out);
      out += '^';
      print_child(e.rhs(), precedence(e.rhs()) < 3, out);
      return;
    case NodeKind::call:
      out += func_name(e.func());
      out += '(';
      print(e.lhs(), out);
      out += ')';
      return;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Construction

Expr::Expr() : node_(std::make_shared<const Node>()) {}

Expr Expr::constant(double v) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::constant;
  n->value = v;
  return Expr(std::move(n));
}

Expr Expr::variable(Index i) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::variable;
  n->index = i;
  n->state = true;
  return Expr(std::move(n));
}

Expr Expr::parameter(Index i, std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::parameter;
  n->index = i;
  n->name = std::move(name);
  return Expr(std::move(n));
}

namespace {

NodePtr make_unary(NodeKind k, const NodePtr& a, Func f = Func::sin) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = k;
  n->func = f;
  n->a = a;
  n->depth = a->depth + 1;
  n->state = a->state;
  return n;
}

NodePtr make_binary(NodeKind k, const NodePtr& a, const NodePtr& b) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = k;
  n->a = a;
  n->b = b;
  n->depth = std::max(a->depth, b->depth) + 1;
  n->state = a->state || b->state;
  return n;
}

}  // namespace

Expr Expr::call(Func f, const Expr& arg) {
  if (arg.kind() == NodeKind::constant) return constant(apply(f, arg.value()));
  return Expr(make_unary(NodeKind::call, arg.node_, f));
}

Expr operator-(const Expr& a) {
  if (a.kind() == NodeKind::constant) return Expr::constant(-a.value());
  if (a.kind() == NodeKind::negate) return a.lhs();
  return Expr(make_unary(NodeKind::negate, a.node_));
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.kind() == NodeKind::constant && b.kind() == NodeKind::constant)
    return Expr::constant(a.value() + b.value());
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  return Expr(make_binary(NodeKind::add, a.node_, b.node_));
}

Expr operator-(const Expr& a, const Expr& b) {
  if (a.kind() == NodeKind::constant && b.kind() == NodeKind::constant)
    return Expr::constant(a.value() - b.value());
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return -b;
  return Expr(make_binary(NodeKind::sub, a.node_, b.node_));
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.kind() == NodeKind::constant && b.kind() == NodeKind::constant)
    return Expr::constant(a.value() * b.value());
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(-1.0)) return -b;
  if (b.is_constant(-1.0)) return -a;
  return Expr(make_binary(NodeKind::mul, a.node_, b.node_));
}

Expr operator/(const Expr& a, const Expr& b) {
  if (a.kind() == NodeKind::constant && b.kind() == NodeKind::constant)
    return Expr::constant(a.value() / b.value());
  if (a.is_constant(0.0)) return Expr::constant(0.0);
  if (b.is_constant(1.0)) return a;
  return Expr(make_binary(NodeKind::div, a.node_, b.node_));
}

Expr Expr::pow(const Expr& base, const Expr& exponent) {
  if (base.kind() == NodeKind::constant && exponent.kind() == NodeKind::constant)
    return constant(std::pow(base.value(), exponent.value()));
  if (exponent.is_constant(0.0)) return constant(1.0);
  if (exponent.is_constant(1.0)) return base;
  return Expr(make_binary(NodeKind::pow, base.node_, exponent.node_));
}

// ---------------------------------------------------------------------------
// Inspection

NodeKind Expr::kind() const noexcept { return node_->kind; }
double Expr::value() const noexcept { return node_->value; }
Index Expr::index() const noexcept { return node_->index; }
Func Expr::func() const noexcept { return node_->func; }
const std::string& Expr::name() const noexcept { return node_->name; }
Expr Expr::lhs() const { return Expr(node_->a); }
Expr Expr::rhs() const { return Expr(node_->b); }
bool Expr::is_constant(double v) const noexcept {
  return node_->kind == NodeKind::constant && node_->value == v;
}
bool Expr::depends_on_state() const noexcept { return node_->state; }
std::size_t Expr::depth() const noexcept { return node_->depth; }

namespace {

double eval_node(const Expr::Node& n, std::span<const double> y, std::span<const double> params) {
  switch (n.kind) {
    case NodeKind::constant: return n.value;
    case NodeKind::variable: return y[n.index];
    case NodeKind::parameter: return params[n.index];
    case NodeKind::negate: return -eval_node(*n.a, y, params);
    case NodeKind::add: return eval_node(*n.a, y, params) + eval_node(*n.b, y, params);
    case NodeKind::sub: return eval_node(*n.a, y, params) - eval_node(*n.b, y, params);
    case NodeKind::mul: return eval_node(*n.a, y, params) * eval_node(*n.b, y, params);
    case NodeKind::div: return eval_node(*n.a, y, params) / eval_node(*n.b, y, params);
    case NodeKind::pow: return std::pow(eval_node(*n.a, y, params), eval_node(*n.b, y, params));
    case NodeKind::call: return apply(n.func, eval_node(*n.a, y, params));
  }
  return 0.0;
}

}  // namespace

double Expr::eval(std::span<const double> y, std::span<const double> params) const {
  return eval_node(*node_, y, params);
}

std::string Expr::to_string() const {
  std::string out;
  print(*this, out);
  return out;
}

// ---------------------------------------------------------------------------
// Differentiation

Expr differentiate(const Expr& e, Index wrt) {
  switch (e.kind()) {
    case NodeKind::constant:
    case NodeKind::parameter: return Expr::constant(0.0);
    case NodeKind::variable: return Expr::constant(e.index() == wrt ? 1.0 : 0.0);
    case NodeKind::negate: return -differentiate(e.lhs(), wrt);
    case NodeKind::add: return differentiate(e.lhs(), wrt) + differentiate(e.rhs(), wrt);
    case NodeKind::sub: return differentiate(e.lhs(), wrt) - differentiate(e.rhs(), wrt);
    case NodeKind::mul: {
      const Expr a = e.lhs(), b = e.rhs();
      return differentiate(a, wrt) * b + a * differentiate(b, wrt);
    }
    case NodeKind::div: {
      const Expr a = e.lhs(), b = e.rhs();
      const Expr da = differentiate(a, wrt), db = differentiate(b, wrt);
      if (db.is_constant(0.0)) return da / b;
      const Expr b2 = Expr::pow(b, Expr::constant(2.0));
      if (da.is_constant(0.0)) return -(a * db / b2);
      return (da * b - a * db) / b2;
    }
    case NodeKind::pow: {
      const Expr u = e.lhs(), v = e.rhs();
      const Expr du = differentiate(u, wrt);
      if (!v.depends_on_state()) return v * Expr::pow(u, v - Expr::constant(1.0)) * du;
      const Expr dv = differentiate(v, wrt);
      if (!u.depends_on_state()) return e * Expr::call(Func::log, u) * dv;
      return e * (dv * Expr::call(Func::log, u) + v * du / u);
    }
    case NodeKind::call: {
      const Expr u = e.lhs();
      const Expr du = differentiate(u, wrt);
      if (du.is_constant(0.0)) return Expr::constant(0.0);
      switch (e.func()) {
        case Func::sin: return Expr::call(Func::cos, u) * du;
        case Func::cos: return -(Expr::call(Func::sin, u) * du);
        case Func::tan: return du / Expr::pow(Expr::call(Func::cos, u), Expr::constant(2.0));
        case Func::exp: return e * du;
        case Func::log: return du / u;
        case Func::sqrt: return du / (Expr::constant(2.0) * e);
        case Func::tanh:
          return (Expr::constant(1.0) - Expr::pow(e, Expr::constant(2.0))) * du;
        case Func::abs: return Expr::call(Func::sign, u) * du;
        case Func::sign: return Expr::constant(0.0);
      }
      break;
    }
  }
  return Expr::constant(0.0);
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

enum class Tok { number, ident, op, lparen, rparen, comma, end };

struct Token {
  Tok kind = Tok::end;
  char op = 0;
  std::string text;
  double value = 0.0;
  std::size_t column = 0;  // 1-based, code points
};

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return is_ident_start(c) || std::isdigit(c); }

class Parser {
 public:
  Parser(std::string_view text, const SymbolTable& symbols, std::size_t line, std::size_t column)
      : symbols_(symbols), line_(line) {
    tokenize(text, column);
  }

  Expr parse() {
    Expr e = parse_sum();
    if (peek().kind != Tok::end) fail(peek(), "expected operator or end of expression");
    if (e.depth() > kMaxExprDepth) fail(tokens_.front(), "expression nesting deeper than 64");
    return e;
  }

 private:
  [[noreturn]] void fail(const Token& at, const std::string& msg, Errc code = Errc::parse) {
    if (at.kind == Tok::end && !open_.empty())
      throw ParseError(code, line_, open_.back(), "unclosed '(': " + msg);
    throw ParseError(code, line_, at.column, msg);
  }

  // Codepoint length of the UTF-8 sequence starting with lead byte c.
  static std::size_t utf8_len(unsigned char c) {
    if (c < 0x80) return 1;
    if ((c >> 5) == 0x6) return 2;
    if ((c >> 4) == 0xE) return 3;
    if ((c >> 3) == 0x1E) return 4;
    return 1;
  }

  void tokenize(std::string_view s, std::size_t col0) {
    std::size_t i = 0;
    std::size_t col = col0;
    auto push = [&](Token t) { tokens_.push_back(std::move(t)); };
    while (i < s.size()) {
      const unsigned char c = static_cast<unsigned char>(s[i]);
      if (c == ' ' || c == '\t' || c == '\r') {
        ++i;
        ++col;
        continue;
      }
      Token t;
      t.column = col;
      // U+2212 minus sign and U+00D7 multiplication sign.
      if (s.substr(i, 3) == "\xE2\x88\x92") {
        t.kind = Tok::op;
        t.op = '-';
        push(t);
        i += 3;
        ++col;
        continue;
      }
      if (s.substr(i, 2) == "\xC3\x97") {
        t.kind = Tok::op;
        t.op = '*';
        push(t);
        i += 2;
        ++col;
        continue;
      }
      if (std::isdigit(c) || (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
        std::size_t j = i;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        if (j < s.size() && s[j] == '.') {
          ++j;
          while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        }
        if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
          std::size_t k = j + 1;
          if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
          if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
            while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
            j = k;
          }
        }
        t.kind = Tok::number;
        t.text = std::string(s.substr(i, j - i));
        const auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.value);
        if (res.ec != std::errc()) throw ParseError(Errc::parse, line_, col, "malformed number '" + t.text + "'");
        push(t);
        col += j - i;
        i = j;
        continue;
      }
      if (is_ident_start(c)) {
        std::size_t j = i;
        std::size_t cps = 0;
        while (j < s.size() && is_ident_char(static_cast<unsigned char>(s[j]))) {
          if (s.substr(j, 3) == "\xE2\x88\x92" || s.substr(j, 2) == "\xC3\x97") break;
          j += utf8_len(static_cast<unsigned char>(s[j]));
          ++cps;
        }
        t.kind = Tok::ident;
        t.text = std::string(s.substr(i, j - i));
        push(t);
        col += cps;
        i = j;
        continue;
      }
      switch (c) {
        case '+': case '-': case '*': case '/': case '^':
          t.kind = Tok::op;
          t.op = static_cast<char>(c);
          break;
        case '(': t.kind = Tok::lparen; break;
        case ')': t.kind = Tok::rparen; break;
        case ',': t.kind = Tok::comma; break;
        default:
          throw ParseError(Errc::parse, line_, col,
                           "unexpected character '" + std::string(s.substr(i, utf8_len(c))) + "'");
      }
      push(t);
      ++i;
      ++col;
    }
    Token end;
    end.kind = Tok::end;
    end.column = col;
    tokens_.push_back(end);
  }

  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() { return tokens_[pos_++]; }
  bool at_op(char op) const { return peek().kind == Tok::op && peek().op == op; }

  void enter(const Token& at) {
    if (++nesting_ > kMaxExprDepth) fail(at, "expression nesting deeper than 64");
  }

  Expr parse_sum() {
    enter(peek());
    Expr e = parse_product();
    while (at_op('+') || at_op('-')) {
      const char op = next().op;
      Expr r = parse_product();
      e = op == '+' ? e + r : e - r;
    }
    --nesting_;
    return e;
  }

  Expr parse_product() {
    Expr e = parse_unary();
    while (at_op('*') || at_op('/')) {
      const char op = next().op;
      Expr r = parse_unary();
      e = op == '*' ? e * r : e / r;
    }
    return e;
  }

  Expr parse_unary() {
    if (at_op('-') || at_op('+')) {
      const Token& t = next();
      enter(t);
      Expr e = parse_unary();
      --nesting_;
      return t.op == '-' ? -e : e;
    }
    return parse_power();
  }

  // '^' binds tighter than unary minus on its left and is right-associative.
  Expr parse_power() {
    Expr base = parse_primary();
    if (at_op('^')) {
      const Token& t = next();
      enter(t);
      Expr ex = parse_unary();
      --nesting_;
      return Expr::pow(base, ex);
    }
    return base;
  }

  Expr parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::number:
        next();
        return Expr::constant(t.value);
      case Tok::lparen: {
        next();
        open_.push_back(t.column);
        Expr e = parse_sum();
        if (peek().kind != Tok::rparen) fail(peek(), "expected ')'");
        open_.pop_back();
        next();
        return e;
      }
      case Tok::ident: return parse_identifier();
      default:
        fail(t, "expected one of: number, identifier, '(', '-'");
    }
  }

  Expr parse_identifier() {
    const Token& t = next();
    if (peek().kind == Tok::lparen) {
      Func f;
      if (!lookup_func(t.text, f)) fail(t, "unknown function '" + t.text + "'", Errc::semantic);
      const Token& lp = next();
      open_.push_back(lp.column);
      Expr arg = parse_sum();
      if (peek().kind == Tok::comma) fail(peek(), "function '" + t.text + "' takes exactly one argument", Errc::semantic);
      if (peek().kind != Tok::rparen) fail(peek(), "expected ')'");
      open_.pop_back();
      next();
      return Expr::call(f, arg);
    }
    if (const auto it = symbols_.params.find(t.text); it != symbols_.params.end()) {
      if (!symbols_.foldValues.empty()) return Expr::constant(symbols_.foldValues[it->second]);
      return Expr::parameter(it->second, t.text);
    }
    if (t.text.size() > 1 && t.text[0] == 'y' &&
        std::all_of(t.text.begin() + 1, t.text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      std::size_t k = 0;
      std::from_chars(t.text.data() + 1, t.text.data() + t.text.size(), k);
      if (k < 1 || k > symbols_.stateDim)
        fail(t, "state variable '" + t.text + "' out of range 1.." + std::to_string(symbols_.stateDim),
             Errc::semantic);
      return Expr::variable(k - 1);
    }
    Func f;
    if (lookup_func(t.text, f)) fail(t, "function '" + t.text + "' needs an argument list", Errc::semantic);
    fail(t, "undefined identifier '" + t.text + "'", Errc::semantic);
  }

  const SymbolTable& symbols_;
  std::size_t line_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::size_t nesting_ = 0;
  std::vector<std::size_t> open_;
};

}  // namespace

Expr parse_expression(std::string_view text, const SymbolTable& symbols, std::size_t line,
                      std::size_t column) {
  return Parser(text, symbols, line, column).parse();
}

}  // namespace vougc::langevin
