#pragma once

// Fiber loss and Bob's two-detector threshold measurement.

#include <cmath>
#include <string>

#include "pfqkd/mathkit.hpp"
#include "pfqkd/source.hpp"

namespace pfqkd {

struct ChannelParams {
  double alpha = 0.2;     ///< fiber attenuation, dB/km
  double distance = 0.0;  ///< km
  double eta_d = 0.65;    ///< Bob detector efficiency
  double dark = 1e-6;     ///< Bob dark-count probability per pulse and detector
  double e_d = 0.015;     ///< basis misalignment error

  void validate() const {
    if (!(alpha >= 0.0)) throw DomainError("ChannelParams: alpha must be >= 0");
    if (!(distance >= 0.0)) throw DomainError("ChannelParams: distance must be >= 0");
    if (!(eta_d >= 0.0 && eta_d <= 1.0)) throw DomainError("ChannelParams: eta_d must lie in [0,1]");
    if (!(dark >= 0.0 && dark < 1.0)) throw DomainError("ChannelParams: dark must lie in [0,1)");
    if (!(e_d >= 0.0 && e_d <= 0.5)) throw DomainError("ChannelParams: e_d must lie in [0,0.5]");
  }

  ChannelParams at_distance(double km) const {
    ChannelParams c = *this;
    c.distance = km;
    return c;
  }
};

/// Observed statistics of one herald class: Q_x and E_x, plus Q_x E_x kept
/// separately so the error LP does not round-trip through a division.
struct ClassStats {
  double gain = 0.0;
  double qber = 0.0;
  double error_gain = 0.0;
};

/// The signal state a key-generating herald class is meant to prepare.
enum class Polarization { h, v, plus, minus };

inline Basis basis_of(Polarization p) { return (p == Polarization::h || p == Polarization::v) ? Basis::z : Basis::x; }

/// True when the nominal state occupies the first mode (H or +) of its basis.
inline bool occupies_first_mode(Polarization p) { return p == Polarization::h || p == Polarization::plus; }

inline const char* to_string(Polarization p) {
  switch (p) {
    case Polarization::h: return "H";
    case Polarization::v: return "V";
    case Polarization::plus: return "+";
    case Polarization::minus: return "-";
  }
  return "?";
}

/// Signal state prepared by a single-click herald class. A click in D_H
/// heralds a V photon (and vice versa); D+ heralds +, D- heralds -.
inline Polarization nominal_polarization(HeraldClass cls) {
  if (cls == HeraldClass::h()) return Polarization::v;
  if (cls == HeraldClass::v()) return Polarization::h;
  if (cls == HeraldClass::plus()) return Polarization::plus;
  if (cls == HeraldClass::minus()) return Polarization::minus;
  throw DomainError("nominal_polarization: class " + cls.name() + " does not generate key");
}

/// η_c = 10^(-α L / 10)
inline double transmittance(double alpha, double distance) {
  if (!(alpha >= 0.0) || !(distance >= 0.0)) throw DomainError("transmittance: alpha and distance must be >= 0");
  return std::pow(10.0, -alpha * distance / 10.0);
}

namespace detail {

struct BobClicks {
  double first;   // detector of the first mode (H or +)
  double second;  // detector of the second mode (V or -)
};

inline BobClicks bob_clicks(int m, int k, const ChannelParams& ch) {
  if (m < 0 || k < 0) throw DomainError("yield: photon numbers must be >= 0");
  const double t = transmittance(ch.alpha, ch.distance) * ch.eta_d;
  return {click_probability(m, t, ch.dark), click_probability(k, t, ch.dark)};
}

}  // namespace detail

/// Probability that exactly one of Bob's two detectors clicks for |m>|k>.
/// Double clicks are discarded.
inline double yield(int m, int k, const ChannelParams& ch) {
  const auto c = detail::bob_clicks(m, k, ch);
  return c.first * (1.0 - c.second) + c.second * (1.0 - c.first);
}

struct ErrorRate {
  double error_yield = 0.0;  ///< e * Y
  double rate = 0.0;         ///< e, zero when Y = 0
};

/// Error model for a state whose correct outcome is the first mode: a lone
/// first-mode click is wrong with probability e_d, a lone second-mode click
/// with probability 1 - e_d.
inline ErrorRate error_rate(int m, int k, const ChannelParams& ch) {
  const auto c = detail::bob_clicks(m, k, ch);
  const double first_only = c.first * (1.0 - c.second);
  const double second_only = c.second * (1.0 - c.first);
  const double ey = ch.e_d * first_only + (1.0 - ch.e_d) * second_only;
  const double y = first_only + second_only;
  return {ey, y > 0.0 ? ey / y : 0.0};
}

/// e·Y of |m>|k> measured against `nominal`.
inline double error_yield(int m, int k, const ChannelParams& ch, Polarization nominal) {
  return occupies_first_mode(nominal) ? error_rate(m, k, ch).error_yield : error_rate(k, m, ch).error_yield;
}

/// Q_x and E_x of a herald class, with errors counted against `nominal`.
/// The distribution must be expressed in the basis of `nominal`.
inline ClassStats class_stats(const SignalDistribution& dist, const ChannelParams& ch, Polarization nominal) {
  ch.validate();
  if (dist.basis() != basis_of(nominal)) {
    throw DomainError(std::string("class_stats: ") + to_string(dist.basis()) +
                      "-basis distribution measured against nominal " + to_string(nominal));
  }
  ClassStats s;
  for (int n = 0; n <= dist.n_cut(); ++n) {
    for (int m = 0; m <= n; ++m) {
      const double p = dist.at(m, n - m);
      if (p == 0.0) continue;
      s.gain += p * yield(m, n - m, ch);
      s.error_gain += p * error_yield(m, n - m, ch, nominal);
    }
  }
  s.qber = s.gain > 0.0 ? s.error_gain / s.gain : 0.0;
  return s;
}

}  // namespace pfqkd
