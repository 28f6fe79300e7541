#pragma once

// Common types, tolerances and the error type shared by every chanrev module.

#include <Eigen/Dense>

#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace chanrev {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Default numerical thresholds. Every operation that uses one also accepts
/// an override.
namespace defaults {
inline constexpr double atol = 1e-10;
/// Eigenvalue grouping tolerance, relative to the spectral radius.
inline constexpr double group_rel = 1e-8;
/// Support / generalized-inverse cutoff, relative to the largest eigenvalue.
inline constexpr double cutoff = 1e-10;
/// Algebra membership: HS residual relative to the norm of the element.
inline constexpr double membership_rel = 1e-8;
inline constexpr int size_cap = 4096;
}  // namespace defaults

/// Positive infinity is used as an explicit marker (disjoint supports,
/// support violations). It is never the result of an overflow.
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  NotHermitian,
  NotPositive,
  NotInvertible,
  NumericalFailure,
  DomainError,
  SizeCapExceeded,
  ClosureNotReached,
  NumericalDegeneracy,
  SupportViolation,
  NotAnAlgebra,
  NotReversible,
  ParseError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NotPositive: return "NotPositive";
    case ErrorKind::NotInvertible: return "NotInvertible";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::SizeCapExceeded: return "SizeCapExceeded";
    case ErrorKind::ClosureNotReached: return "ClosureNotReached";
    case ErrorKind::NumericalDegeneracy: return "NumericalDegeneracy";
    case ErrorKind::SupportViolation: return "SupportViolation";
    case ErrorKind::NotAnAlgebra: return "NotAnAlgebra";
    case ErrorKind::NotReversible: return "NotReversible";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

inline void require_square(const Matrix& m, std::string_view name) {
  require(m.rows() == m.cols() && m.rows() > 0, ErrorKind::DimensionMismatch,
          std::string(name) + " must be a non-empty square matrix");
}

inline void require_finite(const Matrix& m, std::string_view name) {
  require(m.allFinite(), ErrorKind::InvalidArgument, std::string(name) + " has non-finite entries");
}

}  // namespace chanrev
