// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace vougc {

/// Fine-grained failure reasons raised by the core library.
enum class Errc {
  parse,              ///< malformed input document
  semantic,           ///< undefined identifier, arity or dimension mismatch in a document
  dimension,          ///< non-conformant matrix shapes
  domain,             ///< argument outside the operation's domain
  validation,         ///< invalid model, partition or option combination
  unsupported,        ///< well-formed request outside what an operation supports
  diffusion,          ///< diffusion matrix not symmetric positive-definite
  singular_equation,  ///< matrix equation with no unique solution
  no_solution,        ///< Riccati equation without a stabilising solution
  convergence,        ///< solver finished with residual above tolerance
  not_detectable,     ///< detectability hypothesis violated
  consistency,        ///< results that contradict an analytic identity
  ill_conditioned,    ///< covariance block numerically singular
  degenerate,         ///< determinant or factorisation degenerate
  coverage,           ///< too many failed samples in an aggregate
  divergence,         ///< trajectory left the overflow guard
};

/// Coarse categories; the numeric values double as CLI exit codes.
enum class ErrorCategory : int {
  parse = 2,
  validation = 3,
  solver = 4,
  numerical = 5,
  divergence = 6,
};

constexpr ErrorCategory category_of(Errc e) noexcept {
  switch (e) {
    case Errc::parse:
    case Errc::semantic:
      return ErrorCategory::parse;
    case Errc::dimension:
    case Errc::domain:
    case Errc::validation:
    case Errc::unsupported:
    case Errc::diffusion:
      return ErrorCategory::validation;
    case Errc::singular_equation:
    case Errc::no_solution:
    case Errc::convergence:
    case Errc::not_detectable:
    case Errc::consistency:
      return ErrorCategory::solver;
    case Errc::ill_conditioned:
    case Errc::degenerate:
    case Errc::coverage:
      return ErrorCategory::numerical;
    case Errc::divergence:
      return ErrorCategory::divergence;
  }
  return ErrorCategory::validation;
}

const char* errc_name(Errc e) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  Errc code_;
};

/// Riccati solver failure; carries the Hamiltonian spectrum for diagnostics.
class NoSolutionError : public Error {
 public:
  NoSolutionError(const std::string& what, std::vector<std::complex<double>> spectrum)
      : Error(Errc::no_solution, what), spectrum_(std::move(spectrum)) {}
  const std::vector<std::complex<double>>& spectrum() const noexcept { return spectrum_; }

 private:
  std::vector<std::complex<double>> spectrum_;
};

/// Document error with a 1-based source position.
class ParseError : public Error {
 public:
  ParseError(Errc code, std::size_t line, std::size_t column, const std::string& message)
      : Error(code, "line " + std::to_string(line) + ", column " + std::to_string(column) +
                        ": " + message),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace vougc
