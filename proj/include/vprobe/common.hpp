#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vprobe {

/// Probability vector over a question's options, always in canonical order.
using Distribution = std::vector<double>;

inline constexpr double kProbTolerance = 1e-9;

// Error hierarchy. The CLI maps these onto exit codes (validation-like → 2, transport → 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (bad JSON, missing or unknown field).
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Caller broke an operation's precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Endpoint unreachable or failing after all retries.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Endpoint answered but produced nothing usable.
class EmptyResponseError : public Error {
 public:
  using Error::Error;
};

/// Endpoint does not support the requested primitive.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// Correlation requested over a zero-variance sample.
class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

enum class Method { Token, Sequence, Text };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

/// True when every entry is >= 0 and the sum is within `tol` of one.
bool is_distribution(std::span<const double> p, double tol = kProbTolerance);

/// Scales a non-negative vector to sum to one. Throws PreconditionError on a zero or negative total.
Distribution normalized(std::span<const double> weights);

/// Shortest round-trip decimal representation, used for every number written to reports.
std::string format_double(double v);

}  // namespace vprobe
