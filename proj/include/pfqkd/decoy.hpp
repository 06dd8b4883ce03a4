#pragma once

// Passive decoy-state analysis: every herald class is a decoy. Two LPs bound
// the single-photon gain of a key class from below and its single-photon
// error gain from above.

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfqkd/channel.hpp"
#include "pfqkd/simplex.hpp"
#include "pfqkd/source.hpp"

namespace pfqkd {

struct DecoyBounds {
  double p1y1_lower = 0.0;    ///< lower bound on P(1,0)Y_{1,0} + P(0,1)Y_{0,1}
  double e1y1p1_upper = 0.0;  ///< upper bound on P(1,0)Y_{1,0}e_{1,0} + P(0,1)Y_{0,1}e_{0,1}
  double e1_upper = 0.0;      ///< e1y1p1_upper / p1y1_lower, 0 when the gain bound vanishes
  LpStatus status = LpStatus::optimal;
};

namespace detail {

inline void check_decoy_inputs(std::span<const SignalDistribution> dists, std::span<const ClassStats> stats) {
  if (dists.size() != kHeraldClassCount || stats.size() != kHeraldClassCount) {
    throw DomainError("decoy LP: need one distribution and one ClassStats per herald class (16)");
  }
  const int n_cut = dists[0].n_cut();
  for (std::size_t i = 0; i < dists.size(); ++i) {
    if (dists[i].herald_class().mask() != i) throw DomainError("decoy LP: distributions must be ordered by class mask");
    if (dists[i].n_cut() != n_cut) throw DomainError("decoy LP: mismatched truncation orders across classes");
    if (dists[i].basis() != dists[0].basis()) throw DomainError("decoy LP: mixed measurement bases");
  }
  if (n_cut < 1) throw DomainError("decoy LP: n_cut must be >= 1");
}

inline LinearProgram build_decoy_lp(std::span<const SignalDistribution> dists, std::span<const ClassStats> stats,
                                    HeraldClass target, bool errors) {
  check_decoy_inputs(dists, stats);
  const int n_cut = dists[0].n_cut();
  const auto nv = SignalDistribution::size_for(n_cut);
  double tail = 0.0;
  for (const auto& d : dists) tail = std::max(tail, d.tail());

  LinearProgram lp;
  lp.sense = errors ? Sense::maximize : Sense::minimize;
  lp.names.resize(nv);
  lp.bounds.assign(nv, VariableBounds{0.0, 1.0});
  for (int n = 0; n <= n_cut; ++n)
    for (int m = 0; m <= n; ++m)
      lp.names[SignalDistribution::index(m, n - m)] =
          std::string(errors ? "W_" : "Y_") + std::to_string(m) + "_" + std::to_string(n - m);

  lp.objective.assign(nv, 0.0);
  const auto& td = dists[target.mask()];
  lp.objective[SignalDistribution::index(1, 0)] = td.at(1, 0);
  lp.objective[SignalDistribution::index(0, 1)] = td.at(0, 1);

  lp.constraints.reserve(2 * kHeraldClassCount);
  for (std::size_t x = 0; x < dists.size(); ++x) {
    const auto e = dists[x].entries();
    std::vector<double> row(e.begin(), e.end());
    const double observed = errors ? stats[x].error_gain : stats[x].gain;
    lp.constraints.push_back({row, Relation::less_equal, observed});
    lp.constraints.push_back({std::move(row), Relation::greater_equal, observed - tail});
  }
  return lp;
}

}  // namespace detail

/// min P_t(1,0)Y_{1,0} + P_t(0,1)Y_{0,1} subject to, for all 16 classes x,
/// Q_x - tail <= Σ P_x(m,k) Y_{m,k} <= Q_x and 0 <= Y <= 1.
inline LinearProgram build_yield_lp(std::span<const SignalDistribution> dists, std::span<const ClassStats> stats,
                                    HeraldClass target) {
  return detail::build_decoy_lp(dists, stats, target, false);
}

/// Same constraint structure on W = Y·e with Q_x E_x as the observations;
/// maximises the target's single-photon error gain.
inline LinearProgram build_error_lp(std::span<const SignalDistribution> dists, std::span<const ClassStats> stats,
                                    HeraldClass target) {
  return detail::build_decoy_lp(dists, stats, target, true);
}

inline DecoyBounds single_photon_bounds(std::span<const SignalDistribution> dists, std::span<const ClassStats> stats,
                                        HeraldClass target) {
  DecoyBounds out;
  const auto gain = solve(build_yield_lp(dists, stats, target));
  const auto err = solve(build_error_lp(dists, stats, target));
  if (gain.status == LpStatus::unbounded || err.status == LpStatus::unbounded) {
    throw std::logic_error("single_photon_bounds: box-bounded decoy LP reported unbounded");
  }
  if (gain.status != LpStatus::optimal || err.status != LpStatus::optimal) {
    out.status = LpStatus::infeasible;
    return out;
  }
  out.p1y1_lower = std::max(gain.objective, 0.0);
  out.e1y1p1_upper = std::max(err.objective, 0.0);
  out.e1_upper = out.p1y1_lower > 0.0 ? std::min(out.e1y1p1_upper / out.p1y1_lower, 1.0) : 0.0;
  return out;
}

/// Forward-model single-photon gain and error gain of one class, for
/// comparison with the LP bounds.
struct SinglePhotonTruth {
  double p1y1 = 0.0;
  double e1y1p1 = 0.0;
  double e1() const { return p1y1 > 0.0 ? e1y1p1 / p1y1 : 0.0; }
};

inline SinglePhotonTruth single_photon_truth(const SignalDistribution& dist, const ChannelParams& ch,
                                             Polarization nominal) {
  SinglePhotonTruth t;
  for (auto [m, k] : {std::pair{1, 0}, std::pair{0, 1}}) {
    t.p1y1 += dist.at(m, k) * yield(m, k, ch);
    t.e1y1p1 += dist.at(m, k) * error_yield(m, k, ch, nominal);
  }
  return t;
}

}  // namespace pfqkd
