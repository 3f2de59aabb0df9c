// SPDX-License-Identifier: Apache-2.0
#include "core/model_io.hpp"

#include <cctype>
#include <charconv>
#include <optional>
#include <vector>

#include "core/errors.hpp"

namespace vougc::io {

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

struct Block {
  std::vector<std::vector<double>> rows;
  std::size_t headerLine = 0;
  bool seen = false;
};

}  // namespace

VouModel parse_model(std::string_view text) {
  enum class Section { none, model, a, sigma };
  Section section = Section::none;
  Block a, sigma;
  std::optional<std::size_t> declaredN;
  bool seenModel = false;
  std::size_t lineNo = 0;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    ++lineNo;
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (auto h = raw.find('#'); h != std::string_view::npos) raw = raw.substr(0, h);
    auto col = [&](std::string_view part) {
      return codepoints(raw.substr(0, static_cast<std::size_t>(part.data() - raw.data()))) + 1;
    };
    const std::string_view body = trim(raw);
    if (body.empty()) {
      if (end == text.size()) break;
      continue;
    }

    if (body.front() == '[') {
      if (body.back() != ']') throw ParseError(Errc::parse, lineNo, col(body), "expected ']' to close section header");
      const std::string_view name = trim(body.substr(1, body.size() - 2));
      auto enter = [&](Block& b, Section s) {
        if (b.seen) throw ParseError(Errc::semantic, lineNo, col(body), "duplicate section [" + std::string(name) + "]");
        b.seen = true;
        b.headerLine = lineNo;
        section = s;
      };
      if (name == "model") {
        if (seenModel) throw ParseError(Errc::semantic, lineNo, col(body), "duplicate section [model]");
        seenModel = true;
        section = Section::model;
      } else if (name == "A") {
        enter(a, Section::a);
      } else if (name == "Sigma") {
        enter(sigma, Section::sigma);
      } else {
        throw ParseError(Errc::parse, lineNo, col(body),
                         "unknown section [" + std::string(name) + "], expected one of model, A, Sigma");
      }
    } else if (section == Section::none) {
      throw ParseError(Errc::parse, lineNo, col(body), "expected a section header such as [A]");
    } else if (section == Section::model) {
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) throw ParseError(Errc::parse, lineNo, col(body), "expected 'n = <count>'");
      const std::string_view key = trim(body.substr(0, eq));
      const std::string_view value = trim(body.substr(eq + 1));
      if (key != "n") throw ParseError(Errc::parse, lineNo, col(key), "unknown key '" + std::string(key) + "' in [model]");
      std::size_t v = 0;
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (value.empty() || ec != std::errc() || p != value.data() + value.size() || v == 0)
        throw ParseError(Errc::parse, lineNo, col(value.empty() ? body.substr(body.size()) : value),
                         "expected a positive integer dimension");
      declaredN = v;
    } else {
      Block& b = section == Section::a ? a : sigma;
      std::vector<double> row;
      std::size_t p = 0;
      while (p < raw.size()) {
        while (p < raw.size() && std::isspace(static_cast<unsigned char>(raw[p]))) ++p;
        if (p >= raw.size()) break;
        std::size_t q = p;
        while (q < raw.size() && !std::isspace(static_cast<unsigned char>(raw[q]))) ++q;
        const std::string_view tok = raw.substr(p, q - p);
        double v = 0.0;
        const char* first = tok.data();
        if (*first == '+') ++first;
        auto [e, ec] = std::from_chars(first, tok.data() + tok.size(), v);
        if (ec != std::errc() || e != tok.data() + tok.size())
          throw ParseError(Errc::parse, lineNo, col(tok), "expected a number, got '" + std::string(tok) + "'");
        row.push_back(v);
        p = q;
      }
      if (!b.rows.empty() && row.size() != b.rows.front().size())
        throw ParseError(Errc::semantic, lineNo, col(body),
                         "row has " + std::to_string(row.size()) + " entries, expected " +
                             std::to_string(b.rows.front().size()));
      b.rows.push_back(std::move(row));
    }
    if (end == text.size()) break;
  }

  if (!a.seen) throw ParseError(Errc::semantic, lineNo, 1, "missing [A] section");
  if (!sigma.seen) throw ParseError(Errc::semantic, lineNo, 1, "missing [Sigma] section");
  auto to_matrix = [&](const Block& b, const char* what) {
    const std::size_t n = b.rows.size();
    if (n == 0) throw ParseError(Errc::semantic, b.headerLine, 1, std::string("section [") + what + "] is empty");
    if (b.rows.front().size() != n)
      throw ParseError(Errc::semantic, b.headerLine, 1,
                       std::string(what) + " is " + std::to_string(n) + "x" +
                           std::to_string(b.rows.front().size()) + ", expected a square matrix");
    if (declaredN && *declaredN != n)
      throw ParseError(Errc::semantic, b.headerLine, 1,
                       std::string(what) + " has " + std::to_string(n) + " rows but n = " +
                           std::to_string(*declaredN));
    Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = b.rows[i][j];
    return m;
  };
  Matrix am = to_matrix(a, "A");
  Matrix sm = to_matrix(sigma, "Sigma");
  if (am.rows() != sm.rows())
    throw ParseError(Errc::semantic, sigma.headerLine, 1, "A and Sigma differ in dimension");
  return VouModel::create(std::move(am), std::move(sm));
}

std::string format_exact(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

std::string dump_model(const VouModel& model) {
  std::string out = "[model]\nn = " + std::to_string(model.dim()) + "\n";
  auto block = [&](const char* name, const Matrix& m) {
    out += "[";
    out += name;
    out += "]\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (j) out += ' ';
        out += format_exact(m(i, j));
      }
      out += '\n';
    }
  };
  block("A", model.A());
  block("Sigma", model.Sigma());
  return out;
}

}  // namespace vougc::io
