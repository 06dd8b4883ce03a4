#pragma once

// Secret-key rates from the decoy bounds, distance and λ searches, and the
// actively modulated weak-coherent-pulse baseline.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pfqkd/channel.hpp"
#include "pfqkd/decoy.hpp"
#include "pfqkd/optimize.hpp"
#include "pfqkd/source.hpp"

namespace pfqkd {

struct ProtocolParams {
  double q = 0.5;
  double f = 1.16;
  double pulse_rate = 1e6;  ///< Hz
  std::vector<HeraldClass> keygen_classes{HeraldClass::h(), HeraldClass::v(), HeraldClass::plus(),
                                          HeraldClass::minus()};

  void validate() const {
    if (!(q > 0.0 && q <= 1.0)) throw DomainError("ProtocolParams: q must lie in (0,1]");
    if (!(f >= 1.0)) throw DomainError("ProtocolParams: f must be >= 1");
    if (!(pulse_rate > 0.0)) throw DomainError("ProtocolParams: pulse_rate must be > 0");
    for (auto c : keygen_classes)
      if (!c.is_keygen()) throw DomainError("ProtocolParams: class " + c.name() + " cannot generate key");
  }
};

struct ClassRate {
  HeraldClass cls;
  Polarization nominal = Polarization::h;
  double class_prob = 0.0;  ///< Σ P_x, the heralding probability of the class
  ClassStats stats;
  DecoyBounds bounds;
  SinglePhotonTruth truth;
  double rate = 0.0;       ///< R_x from the bounds, unclamped
  double true_rate = 0.0;  ///< R_x with the exact single-photon quantities, unclamped
};

struct RatePoint {
  double distance = 0.0;
  double lambda = 0.0;
  double per_pulse_rate = 0.0;  ///< Σ max(R_x, 0)
  double throughput = 0.0;      ///< pulse_rate × per_pulse_rate, secret bits/s
  double keygen_prob = 0.0;     ///< Σ over keygen classes of the heralding probability
  double heralded_rate = 0.0;   ///< per_pulse_rate / keygen_prob, bits per heralded pulse
  double true_per_pulse_rate = 0.0;
  std::vector<ClassRate> classes;
};

/// R_x = q [p1y1 (1 - h(e1)) - Q f h(E)], unclamped. e1 above 1/2 is
/// treated as 1/2 (no single-photon contribution).
inline double class_key_rate(double p1y1, double e1, const ClassStats& stats, const ProtocolParams& p) {
  const double e1c = std::clamp(e1, 0.0, 0.5);
  const double ec = std::clamp(stats.qber, 0.0, 1.0);
  return p.q * (p1y1 * (1.0 - binary_entropy(e1c)) - stats.gain * p.f * binary_entropy(ec));
}

inline double class_key_rate(const DecoyBounds& bounds, const ClassStats& stats, const ProtocolParams& p) {
  if (bounds.status != LpStatus::optimal)
    throw SolverError(std::string("class_key_rate: decoy bounds not optimal (") + to_string(bounds.status) + ")");
  return class_key_rate(bounds.p1y1_lower, bounds.e1_upper, stats, p);
}

/// Holds the 32 distributions of one source so that many distances can be
/// evaluated without rebuilding them.
class RateModel {
 public:
  explicit RateModel(const SourceParams& src) : source_(src) {}

  const HeraldedSource& source() const { return source_; }

  RatePoint evaluate(const ChannelParams& ch, const ProtocolParams& p) const {
    ch.validate();
    p.validate();
    RatePoint pt;
    pt.distance = ch.distance;
    pt.lambda = source_.params().lambda;
    for (HeraldClass cls : p.keygen_classes) {
      ClassRate cr;
      cr.cls = cls;
      cr.nominal = nominal_polarization(cls);
      const auto dists = source_.distributions(basis_of(cr.nominal));
      std::vector<ClassStats> stats;
      stats.reserve(dists.size());
      for (const auto& d : dists) stats.push_back(class_stats(d, ch, cr.nominal));
      const auto& target = dists[cls.mask()];
      cr.class_prob = target.total();
      cr.stats = stats[cls.mask()];
      try {
        cr.bounds = single_photon_bounds(dists, stats, cls);
        cr.rate = class_key_rate(cr.bounds, cr.stats, p);
      } catch (const SolverError& e) {
        throw SolverError("class " + cls.name() + ": " + e.what());
      }
      cr.truth = single_photon_truth(target, ch, cr.nominal);
      cr.true_rate = class_key_rate(cr.truth.p1y1, cr.truth.e1(), cr.stats, p);
      pt.per_pulse_rate += std::max(cr.rate, 0.0);
      pt.true_per_pulse_rate += std::max(cr.true_rate, 0.0);
      pt.keygen_prob += cr.class_prob;
      pt.classes.push_back(cr);
    }
    pt.throughput = p.pulse_rate * pt.per_pulse_rate;
    pt.heralded_rate = pt.keygen_prob > 0.0 ? pt.per_pulse_rate / pt.keygen_prob : 0.0;
    return pt;
  }

 private:
  HeraldedSource source_;
};

inline RatePoint total_rate(const SourceParams& src, const ChannelParams& ch, const ProtocolParams& p) {
  return RateModel(src).evaluate(ch, p);
}

struct DistanceSearch {
  double step = 25.0;        ///< bracketing step, km
  double resolution = 0.1;   ///< km
  double limit = 1000.0;     ///< km
};

/// Largest L with a positive per-pulse rate, 0 when the rate vanishes at L = 0.
inline double max_distance(const SourceParams& src, const ProtocolParams& p, const ChannelParams& ch_template,
                           const DistanceSearch& search = {}) {
  const RateModel model(src);
  return last_positive([&](double L) { return model.evaluate(ch_template.at_distance(L), p).per_pulse_rate > 0.0; },
                       search.step, search.resolution, search.limit);
}

struct LambdaRange {
  double lo = 1e-4;
  double hi = 0.3;
  int grid_points = 40;
  double rel_tol = 1e-3;
};

struct LambdaOptimum {
  double lambda = 0.0;
  RatePoint point;
  bool all_zero = false;  ///< throughput vanished everywhere in the range
};

/// Source for a given λ, copying η_h, Pd and tolerances from `tmpl` and
/// raising n_cut as needed to keep the truncation tail within tolerance.
inline SourceParams source_for_lambda(const SourceParams& tmpl, double lambda) {
  const int n_cut = required_n_cut(lambda, tmpl.tol.tail_eps, tmpl.n_cut);
  return SourceParams(lambda, tmpl.eta_h, tmpl.dark, n_cut, tmpl.tol);
}

inline LambdaOptimum optimize_lambda(const ChannelParams& ch, const ProtocolParams& p, const LambdaRange& range = {},
                                     const SourceParams& tmpl = {}) {
  if (!(range.lo > 0.0 && range.hi <= 1.0 && range.lo <= range.hi))
    throw DomainError("optimize_lambda: lambda range must lie in (0,1]");
  if (range.grid_points < 3) throw DomainError("optimize_lambda: need at least 3 grid points");
  auto throughput = [&](double lambda) { return total_rate(source_for_lambda(tmpl, lambda), ch, p).throughput; };
  const auto best = scan_and_refine_log(throughput, range.lo, range.hi, range.grid_points, range.rel_tol);
  LambdaOptimum out;
  if (!(best.value > 0.0)) {
    out.all_zero = true;
    out.lambda = 0.5 * (range.lo + range.hi);
  } else {
    out.lambda = best.x;
  }
  out.point = total_rate(source_for_lambda(tmpl, out.lambda), ch, p);
  return out;
}

// Weak-coherent-pulse baseline: Poisson photon number, all photons in the
// nominal first mode, single-photon yield and error known exactly.

inline double active_wcp_baseline(double mu, const ChannelParams& ch, const ProtocolParams& p) {
  if (!(mu > 0.0)) throw DomainError("active_wcp_baseline: mu must be > 0");
  ch.validate();
  p.validate();
  double gain = 0.0;
  double error_gain = 0.0;
  double mass = 0.0;
  for (int n = 0; n <= 400; ++n) {
    const double pn = std::exp(n * std::log(mu) - mu - log_factorial(n));
    const auto er = error_rate(n, 0, ch);
    gain += pn * yield(n, 0, ch);
    error_gain += pn * er.error_yield;
    mass += pn;
    if (n > mu && 1.0 - mass < 1e-16) break;
  }
  const ClassStats stats{gain, gain > 0.0 ? error_gain / gain : 0.0, error_gain};
  const double p1y1 = mu * std::exp(-mu) * yield(1, 0, ch);
  return class_key_rate(p1y1, error_rate(1, 0, ch).rate, stats, p);
}

struct WcpOptimum {
  double mu = 0.0;
  double rate = 0.0;  ///< bits per pulse, may be negative when no μ yields key
};

inline WcpOptimum optimal_wcp_baseline(const ChannelParams& ch, const ProtocolParams& p, double mu_lo = 1e-3,
                                       double mu_hi = 2.0, int grid_points = 40) {
  const auto best = scan_and_refine_log([&](double mu) { return active_wcp_baseline(mu, ch, p); }, mu_lo, mu_hi,
                                        grid_points, 1e-4);
  return {best.x, best.value};
}

inline double wcp_max_distance(const ProtocolParams& p, const ChannelParams& ch_template,
                               const DistanceSearch& search = {}) {
  return last_positive([&](double L) { return optimal_wcp_baseline(ch_template.at_distance(L), p).rate > 0.0; },
                       search.step, search.resolution, search.limit);
}

}  // namespace pfqkd
