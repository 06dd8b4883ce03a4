#pragma once

// Brute-force check of the herald model: expands the n-pair state as a
// polynomial in six creation operators with exact coefficients, reads off
// Fock amplitudes and only then applies the click model in floating point.
// Does not use heralding_amplitude or x_basis_transform.

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "pfqkd/source.hpp"

namespace pfqkd {

using Rational = boost::multiprecision::cpp_rational;

/// Largest pair number the oracle will expand.
inline constexpr int kOracleMaxN = 8;

/// Exact element a + b√2 of Q(√2).
struct QSqrt2 {
  Rational a = 0;
  Rational b = 0;

  static QSqrt2 half_power(int s) {  // 2^(-s/2), s >= 0
    if (s < 0) throw DomainError("QSqrt2::half_power: negative exponent");
    Rational p = 1;
    for (int i = 0; i < s / 2; ++i) p /= 2;
    if (s % 2 == 0) return {p, 0};
    return {0, p / 2};
  }
  QSqrt2& operator+=(const QSqrt2& o) {
    a += o.a;
    b += o.b;
    return *this;
  }
  friend QSqrt2 operator*(const QSqrt2& x, const QSqrt2& y) { return {x.a * y.a + 2 * x.b * y.b, x.a * y.b + x.b * y.a}; }
  friend QSqrt2 operator*(const QSqrt2& x, const Rational& r) { return {x.a * r, x.b * r}; }
  bool is_zero() const { return a == 0 && b == 0; }
  double to_double() const {
    return a.convert_to<double>() + b.convert_to<double>() * std::numbers::sqrt2;
  }
};

/// Mode order of the exponent array.
enum class OracleMode { c_h = 0, c_v = 1, d_h = 2, d_v = 3, b_h = 4, b_v = 5 };

/// coefficient · 2^(-half_power/2) · Π (mode†)^exponent.
/// c_H and c_V reach D+ and D-, d_H and d_V reach D_H and D_V, b is the signal.
struct ModeMonomial {
  std::array<int, 6> exponents{};
  Rational coefficient = 1;
  int half_power = 0;

  int exponent(OracleMode mode) const { return exponents[static_cast<std::size_t>(mode)]; }
  QSqrt2 value() const { return QSqrt2::half_power(half_power) * coefficient; }
  HeraldCounts herald_counts() const { return {exponents[0], exponents[1], exponents[2], exponents[3]}; }
};

namespace detail {

inline std::vector<ModeMonomial> multiply_linear(const std::vector<ModeMonomial>& poly,
                                                 const std::vector<ModeMonomial>& factor) {
  std::vector<ModeMonomial> out;
  out.reserve(poly.size() * factor.size());
  for (const auto& p : poly) {
    for (const auto& f : factor) {
      ModeMonomial t;
      for (std::size_t i = 0; i < 6; ++i) t.exponents[i] = p.exponents[i] + f.exponents[i];
      t.coefficient = p.coefficient * f.coefficient;
      t.half_power = p.half_power + f.half_power;
      out.push_back(std::move(t));
    }
  }
  return out;
}

inline ModeMonomial linear_term(OracleMode mode, Rational coeff, int half_power) {
  ModeMonomial t;
  t.exponents[static_cast<std::size_t>(mode)] = 1;
  t.coefficient = std::move(coeff);
  t.half_power = half_power;
  return t;
}

inline Rational factorial(int n) {
  Rational f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

inline Rational binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

}  // namespace detail

/// (½c_H + ½c_V + d_H/√2)^(n-m) (½c_H - ½c_V + d_V/√2)^m / ((n-m)! m!) with
/// signal exponents b_H = m, b_V = n - m. Terms are left uncollected.
inline std::vector<ModeMonomial> expand_pair_state(int n, int m) {
  if (n > kOracleMaxN) throw DomainError("expand_pair_state: n exceeds the oracle limit of 8");
  if (n < 0 || m < 0 || m > n) throw DomainError("expand_pair_state: need 0 <= m <= n");
  const Rational half(1, 2);
  const std::vector<ModeMonomial> from_h{detail::linear_term(OracleMode::c_h, half, 0),
                                         detail::linear_term(OracleMode::c_v, half, 0),
                                         detail::linear_term(OracleMode::d_h, 1, 1)};
  const std::vector<ModeMonomial> from_v{detail::linear_term(OracleMode::c_h, half, 0),
                                         detail::linear_term(OracleMode::c_v, -half, 0),
                                         detail::linear_term(OracleMode::d_v, 1, 1)};
  std::vector<ModeMonomial> poly(1);
  for (int i = 0; i < n - m; ++i) poly = detail::multiply_linear(poly, from_h);
  for (int i = 0; i < m; ++i) poly = detail::multiply_linear(poly, from_v);
  const Rational pre = 1 / (detail::factorial(n - m) * detail::factorial(m));
  for (auto& t : poly) {
    t.coefficient *= pre;
    t.exponents[static_cast<std::size_t>(OracleMode::b_h)] = m;
    t.exponents[static_cast<std::size_t>(OracleMode::b_v)] = n - m;
  }
  return poly;
}

/// Merges monomials with equal exponents and equal half_power, dropping
/// those that cancel. Output is ordered by (exponents, half_power).
inline std::vector<ModeMonomial> collect(const std::vector<ModeMonomial>& terms) {
  std::map<std::pair<std::array<int, 6>, int>, Rational> acc;
  for (const auto& t : terms) acc[{t.exponents, t.half_power}] += t.coefficient;
  std::vector<ModeMonomial> out;
  for (auto& [key, c] : acc) {
    if (c == 0) continue;
    out.push_back({key.first, c, key.second});
  }
  return out;
}

/// Exact probability of one herald-count tuple and signal Fock state inside
/// the normalised n-pair state.
struct OracleOutcome {
  HeraldCounts counts;
  int signal_first = 0;  ///< photons in H (Z basis) or + (X basis)
  QSqrt2 probability;
};

struct OracleSector {
  int n = 0;
  std::vector<OracleOutcome> z;
  std::vector<OracleOutcome> x;

  /// Σ of all outcome probabilities in one basis, exact.
  QSqrt2 norm(Basis basis) const {
    QSqrt2 s;
    for (const auto& o : basis == Basis::z ? z : x) s += o.probability;
    return s;
  }
};

/// Fock amplitudes of the n-pair state (normalised by 1/√(n+1)) squared
/// exactly, in both signal bases. For the X basis the signal operators are
/// rewritten as b_H = (b+ + b-)/√2, b_V = (b+ - b-)/√2 before squaring.
inline OracleSector oracle_sector(int n) {
  if (n < 0 || n > kOracleMaxN) throw DomainError("oracle_sector: n must lie in [0, 8]");
  OracleSector sec;
  sec.n = n;
  const Rational inv_norm = Rational(1) / (n + 1);
  // Signal polynomial per herald exponent tuple, X basis, indexed by + count.
  std::map<std::array<int, 4>, std::vector<QSqrt2>> x_poly;
  for (int m = 0; m <= n; ++m) {
    for (const auto& t : collect(expand_pair_state(n, m))) {
      const auto counts = t.herald_counts();
      Rational fock = detail::factorial(counts.plus) * detail::factorial(counts.minus) *
                      detail::factorial(counts.h) * detail::factorial(counts.v);
      const QSqrt2 v = t.value();
      sec.z.push_back({counts, m, v * v * (fock * detail::factorial(m) * detail::factorial(n - m) * inv_norm)});

      auto& row = x_poly[{counts.plus, counts.minus, counts.h, counts.v}];
      row.resize(static_cast<std::size_t>(n + 1));
      const QSqrt2 scaled = v * QSqrt2::half_power(n);
      // (b+ + b-)^m (b+ - b-)^(n-m), coefficient of b+^(x+y).
      for (int x = 0; x <= m; ++x) {
        for (int y = 0; y <= n - m; ++y) {
          Rational c = detail::binomial(m, x) * detail::binomial(n - m, y);
          if ((n - m - y) % 2 != 0) c = -c;
          row[static_cast<std::size_t>(x + y)] += scaled * c;
        }
      }
    }
  }
  for (const auto& [key, row] : x_poly) {
    const HeraldCounts counts{key[0], key[1], key[2], key[3]};
    const Rational fock = detail::factorial(key[0]) * detail::factorial(key[1]) * detail::factorial(key[2]) *
                          detail::factorial(key[3]);
    for (int t = 0; t <= n; ++t) {
      const auto& amp = row[static_cast<std::size_t>(t)];
      if (amp.is_zero()) continue;
      sec.x.push_back({counts, t, amp * amp * (fock * detail::factorial(t) * detail::factorial(n - t) * inv_norm)});
    }
  }
  return sec;
}

/// Joint distribution P_x(m, k) built from the exact expansion. Only P(n)
/// and the click probabilities are floating point.
inline SignalDistribution oracle_distribution(const SourceParams& params, HeraldClass cls, Basis basis = Basis::z) {
  params.validate();
  if (params.n_cut > kOracleMaxN) throw DomainError("oracle_distribution: n_cut exceeds the oracle limit of 8");
  std::vector<double> entries(SignalDistribution::size_for(params.n_cut), 0.0);
  for (int n = 0; n <= params.n_cut; ++n) {
    const double pn = pair_number_prob(params.lambda, n);
    const auto sec = oracle_sector(n);
    for (const auto& o : basis == Basis::z ? sec.z : sec.x) {
      const double gamma = click_class_prob(o.counts, cls, params.eta_h, params.dark);
      entries[SignalDistribution::index(o.signal_first, n - o.signal_first)] += pn * o.probability.to_double() * gamma;
    }
  }
  return SignalDistribution(params.n_cut, std::move(entries), params.truncated_tail(), cls, basis);
}

struct OracleDiscrepancy {
  HeraldClass cls;
  Basis basis = Basis::z;
  double max_abs = 0.0;
};

/// Largest elementwise |source - oracle| for each class and basis.
inline std::vector<OracleDiscrepancy> verify_against_oracle(const SourceParams& params) {
  const HeraldedSource src(params);
  std::vector<OracleDiscrepancy> out;
  for (Basis basis : {Basis::z, Basis::x}) {
    for (HeraldClass cls : HeraldClass::all()) {
      const auto ref = oracle_distribution(params, cls, basis);
      const auto& got = src.distribution(basis, cls);
      double worst = 0.0;
      for (std::size_t i = 0; i < ref.entries().size(); ++i)
        worst = std::max(worst, std::abs(ref.entries()[i] - got.entries()[i]));
      out.push_back({cls, basis, worst});
    }
  }
  return out;
}

}  // namespace pfqkd
