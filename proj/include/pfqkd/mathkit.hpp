#pragma once

// Scalar helpers shared by the source, channel and key-rate models.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pfqkd {

/// Thrown when an argument lies outside the documented domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thrown when the photon-number truncation leaves more mass behind than allowed.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Comparison and truncation tolerances.
struct Tolerance {
  double abs_eps = 1e-12;
  double rel_eps = 1e-9;
  double tail_eps = 1e-10;

  bool valid() const {
    auto ok = [](double v) { return v > 0.0 && v < 1e-3; };
    return ok(abs_eps) && ok(rel_eps) && ok(tail_eps);
  }
};

namespace detail {

inline constexpr std::array<std::uint64_t, 21> kFactorials = [] {
  std::array<std::uint64_t, 21> f{};
  f[0] = 1;
  for (std::size_t i = 1; i < f.size(); ++i) f[i] = f[i - 1] * i;
  return f;
}();

}  // namespace detail

/// ln(n!). Exact (up to the final log) for n <= 20, lgamma beyond.
inline double log_factorial(std::int64_t n) {
  if (n < 0) throw DomainError("log_factorial: negative argument " + std::to_string(n));
  if (n <= 20) return std::log(static_cast<double>(detail::kFactorials[static_cast<std::size_t>(n)]));
  return std::lgamma(static_cast<double>(n) + 1.0);
}

/// ln C(n, k).
inline double log_binomial(std::int64_t n, std::int64_t k) {
  if (n < 0 || k < 0 || k > n) {
    throw DomainError("log_binomial: need 0 <= k <= n, got n=" + std::to_string(n) +
                      " k=" + std::to_string(k));
  }
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

/// Binary Shannon entropy in bits, with h(0) = h(1) = 0.
inline double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binary_entropy: p outside [0,1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

/// |a - b| <= abs_eps + rel_eps * max(|a|, |b|)
inline bool approx_equal(double a, double b, const Tolerance& tol = {}) {
  return std::abs(a - b) <= tol.abs_eps + tol.rel_eps * std::max(std::abs(a), std::abs(b));
}

}  // namespace pfqkd
