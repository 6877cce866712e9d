#include "vprobe/common.hpp"

#include <charconv>
#include <cmath>
#include <numeric>

namespace vprobe {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Token:
      return "token";
    case Method::Sequence:
      return "sequence";
    case Method::Text:
      return "text";
  }
  return "token";
}

Method method_from_string(std::string_view s) {
  if (s == "token") return Method::Token;
  if (s == "sequence") return Method::Sequence;
  if (s == "text") return Method::Text;
  throw ValidationError("unknown scoring method '" + std::string(s) + "' (expected token, sequence or text)");
}

bool is_distribution(std::span<const double> p, double tol) {
  if (p.empty()) return false;
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) return false;
    total += v;
  }
  return std::abs(total - 1.0) <= tol;
}

Distribution normalized(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw PreconditionError("weights must be finite and non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw PreconditionError("cannot normalize weights with zero total");
  Distribution out(weights.begin(), weights.end());
  for (double& v : out) v /= total;
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace vprobe
