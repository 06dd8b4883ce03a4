#pragma once

// Heralded PDC source: pair-number statistics, herald interference
// amplitudes, the 16-outcome click model and the resulting signal-state
// photon-number distributions in the Z (H/V) and X (+/-) bases.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "pfqkd/herald.hpp"
#include "pfqkd/mathkit.hpp"

namespace pfqkd {

enum class Basis { z, x };

inline const char* to_string(Basis b) { return b == Basis::z ? "Z" : "X"; }

/// P(n) = (n+1) λ^n / (1+λ)^(n+2). Accepts λ = 0 (vacuum).
inline double pair_number_prob(double lambda, int n) {
  if (!(lambda >= 0.0)) throw DomainError("pair_number_prob: lambda must be >= 0");
  if (n < 0) throw DomainError("pair_number_prob: negative n");
  if (lambda == 0.0) return n == 0 ? 1.0 : 0.0;
  const double x = lambda / (1.0 + lambda);
  return (n + 1) * std::pow(x, n) * (1.0 - x) * (1.0 - x);
}

/// Σ_{n > n_cut} P(n) in closed form, x^(N+1) ((N+2) - (N+1) x) with x = λ/(1+λ).
inline double pair_number_tail(double lambda, int n_cut) {
  if (lambda == 0.0) return 0.0;
  const double x = lambda / (1.0 + lambda);
  return std::pow(x, n_cut + 1) * ((n_cut + 2) - (n_cut + 1) * x);
}

/// Smallest truncation order (>= floor) whose pair-number tail is within tail_eps.
inline int required_n_cut(double lambda, double tail_eps, int floor = 2) {
  int n = std::max(floor, 2);
  while (pair_number_tail(lambda, n) > tail_eps) {
    if (++n > 200) throw TruncationError("required_n_cut: lambda too large for any practical truncation");
  }
  return n;
}

/// Source configuration. Validated on construction, including the truncation tail.
struct SourceParams {
  double lambda = 0.01;  ///< sinh^2 of the squeezing; mean pair number is 2λ
  double eta_h = 0.65;   ///< herald detector efficiency (shared by all four)
  double dark = 1e-6;    ///< herald dark-count probability per pulse
  int n_cut = 10;        ///< truncation order on the total pair number
  Tolerance tol{};

  SourceParams() { validate(); }
  SourceParams(double lambda_, double eta_h_ = 0.65, double dark_ = 1e-6, int n_cut_ = 10, Tolerance tol_ = {})
      : lambda(lambda_), eta_h(eta_h_), dark(dark_), n_cut(n_cut_), tol(tol_) {
    validate();
  }

  double truncated_tail() const { return pair_number_tail(lambda, n_cut); }

  void validate() const {
    if (!(lambda > 0.0 && std::isfinite(lambda))) throw DomainError("SourceParams: lambda must be > 0");
    if (!(eta_h >= 0.0 && eta_h <= 1.0)) throw DomainError("SourceParams: eta_h must lie in [0,1]");
    if (!(dark >= 0.0 && dark < 1.0)) throw DomainError("SourceParams: dark must lie in [0,1)");
    if (n_cut < 2) throw DomainError("SourceParams: n_cut must be >= 2");
    if (!tol.valid()) throw DomainError("SourceParams: tolerances must lie in (0, 1e-3)");
    const double tail = truncated_tail();
    if (tail > tol.tail_eps) {
      throw TruncationError("SourceParams: pair-number tail " + std::to_string(tail) + " beyond n_cut=" +
                            std::to_string(n_cut) + " exceeds tail_eps; raise n_cut");
    }
  }
};

inline double pair_number_prob(const SourceParams& params, int n) { return pair_number_prob(params.lambda, n); }

/// Joint photon-number table P(m, k) over the signal modes, m + k <= n_cut.
/// In the Z basis m counts H photons and k counts V photons; in the X basis
/// m counts + photons and k counts - photons. Entries are joint with the
/// herald outcome, so they sum to the class probability rather than to 1.
class SignalDistribution {
 public:
  SignalDistribution(int n_cut, std::vector<double> entries, double tail, HeraldClass cls = {},
                     Basis basis = Basis::z)
      : n_cut_(n_cut), entries_(std::move(entries)), tail_(tail), class_(cls), basis_(basis) {
    if (n_cut_ < 0) throw DomainError("SignalDistribution: negative n_cut");
    if (entries_.size() != size_for(n_cut_)) throw DomainError("SignalDistribution: entry count does not match n_cut");
    constexpr double slack = 1e-12;
    double sum = 0.0;
    for (double e : entries_) {
      if (!(e >= 0.0 && e <= 1.0 + slack)) throw DomainError("SignalDistribution: entry outside [0,1]");
      sum += e;
    }
    if (!(tail_ >= 0.0)) throw DomainError("SignalDistribution: negative tail");
    if (sum + tail_ > 1.0 + slack) throw DomainError("SignalDistribution: total mass exceeds 1");
  }

  static SignalDistribution zeros(int n_cut, HeraldClass cls = {}, Basis basis = Basis::z) {
    return SignalDistribution(n_cut, std::vector<double>(size_for(n_cut), 0.0), 0.0, cls, basis);
  }

  /// Triangular layout: all (m, k) with m + k = n are contiguous, ordered by m.
  static constexpr std::size_t index(int m, int k) {
    const auto n = static_cast<std::size_t>(m + k);
    return n * (n + 1) / 2 + static_cast<std::size_t>(m);
  }
  static constexpr std::size_t size_for(int n_cut) { return index(0, n_cut + 1); }

  int n_cut() const { return n_cut_; }
  double tail() const { return tail_; }
  HeraldClass herald_class() const { return class_; }
  Basis basis() const { return basis_; }
  std::span<const double> entries() const { return entries_; }

  double at(int m, int k) const {
    if (m < 0 || k < 0 || m + k > n_cut_) throw DomainError("SignalDistribution::at: index out of range");
    return entries_[index(m, k)];
  }

  /// Σ entries = probability of the herald outcome (within the truncation).
  double total() const {
    double s = 0.0;
    for (double e : entries_) s += e;
    return s;
  }

  double photon_number_marginal(int n) const {
    double s = 0.0;
    for (int m = 0; m <= n; ++m) s += at(m, n - m);
    return s;
  }

  /// Entries divided by the class probability (presentation only).
  std::vector<double> conditional() const {
    const double t = total();
    std::vector<double> out(entries_.size(), 0.0);
    if (t > 0.0) std::transform(entries_.begin(), entries_.end(), out.begin(), [t](double e) { return e / t; });
    return out;
  }

 private:
  int n_cut_;
  std::vector<double> entries_;
  double tail_;
  HeraldClass class_;
  Basis basis_;
};

namespace detail {

inline int checked_counts(int n, int m, const HeraldCounts& c) {
  if (n < 0 || m < 0 || m > n) throw DomainError("heralding_amplitude: need 0 <= m <= n");
  if (c.plus < 0 || c.minus < 0 || c.h < 0 || c.v < 0) throw DomainError("heralding_amplitude: negative count");
  if (c.total() != n) throw DomainError("heralding_amplitude: herald counts must sum to n");
  if (c.h > n - m || c.v > m) throw DomainError("heralding_amplitude: counts incompatible with m");
  return n;
}

}  // namespace detail

/// Signed amplitude of |n+, n-, n_H, n_V>_herald |m>_bH |n-m>_bV inside the
/// normalised n-pair state after the herald beam splitter and wave plate.
/// P(n) * A^2 is the joint probability of that herald/signal configuration.
inline double heralding_amplitude(int n, int m, const HeraldCounts& counts) {
  detail::checked_counts(n, m, counts);
  const int i3 = counts.h;
  const int j3 = counts.v;
  const double half_log2 = 0.5 * std::numbers::ln2;
  const double shared = 0.5 * (log_factorial(counts.plus) + log_factorial(counts.minus) + log_factorial(i3) +
                               log_factorial(j3)) -
                        (log_factorial(i3) + log_factorial(j3)) - (2 * n - i3 - j3) * half_log2;
  double sum = 0.0;
  for (int i1 = 0; i1 <= counts.plus; ++i1) {
    const int j1 = counts.plus - i1;
    const int i2 = n - m - i3 - i1;
    const int j2 = m - j3 - j1;
    if (i2 < 0 || j2 < 0) continue;
    const double log_mag =
        shared - (log_factorial(i1) + log_factorial(i2) + log_factorial(j1) + log_factorial(j2));
    const double term = std::exp(log_mag);
    sum += (j2 % 2 != 0) ? -term : term;
  }
  return sum * std::exp(0.5 * (log_factorial(m) + log_factorial(n - m) - std::log(n + 1.0)));
}

/// Threshold detector: 1 - (1-Pd)(1-η)^photons.
inline double click_probability(int photons, double eta, double dark) {
  return 1.0 - (1.0 - dark) * std::pow(1.0 - eta, photons);
}

/// γ_x: probability that exactly the detectors in `cls` click.
inline double click_class_prob(const HeraldCounts& counts, HeraldClass cls, double eta_h, double dark) {
  double p = 1.0;
  for (Detector d : {Detector::plus, Detector::minus, Detector::h, Detector::v}) {
    const double click = click_probability(counts.at(d), eta_h, dark);
    p *= cls.clicked(d) ? click : 1.0 - click;
  }
  return p;
}

/// Row-major (n+1)x(n+1) matrix U with U[t][m] = <t,n-t|_{+-} |m,n-m>_{HV}.
inline std::vector<double> x_basis_transform(int n) {
  std::vector<double> u(static_cast<std::size_t>((n + 1) * (n + 1)), 0.0);
  for (int t = 0; t <= n; ++t) {
    for (int m = 0; m <= n; ++m) {
      double binom_sum = 0.0;
      for (int x = std::max(0, t - (n - m)); x <= std::min(m, t); ++x) {
        const int y = t - x;
        const double c = std::exp(log_binomial(m, x) + log_binomial(n - m, y));
        binom_sum += ((n - m - y) % 2 != 0) ? -std::round(c) : std::round(c);
      }
      const double scale = std::exp(0.5 * (log_factorial(t) + log_factorial(n - t) - log_factorial(m) -
                                           log_factorial(n - m)) -
                                    0.5 * n * std::numbers::ln2);
      u[static_cast<std::size_t>(t * (n + 1) + m)] = scale * binom_sum;
    }
  }
  return u;
}

/// Rewrites an n-photon amplitude vector indexed by m (H count) into the
/// +/- Fock basis, indexed by t (+ count).
inline std::vector<double> project_amplitudes_x(std::span<const double> amps_by_m, std::span<const double> transform) {
  const auto dim = amps_by_m.size();
  std::vector<double> out(dim, 0.0);
  for (std::size_t t = 0; t < dim; ++t) {
    double s = 0.0;
    for (std::size_t m = 0; m < dim; ++m) s += transform[t * dim + m] * amps_by_m[m];
    out[t] = s;
  }
  return out;
}

/// Re-expresses a distribution in the other polarization basis by treating
/// √P(m, n-m) as real non-negative amplitudes of one coherent n-photon state.
/// The herald model itself uses the signed per-outcome amplitudes instead
/// (see HeraldKernel), which this cannot recover from probabilities alone.
inline SignalDistribution project_x_basis(const SignalDistribution& dist) {
  const int n_cut = dist.n_cut();
  std::vector<double> out(SignalDistribution::size_for(n_cut), 0.0);
  for (int n = 0; n <= n_cut; ++n) {
    std::vector<double> amps(static_cast<std::size_t>(n + 1));
    for (int m = 0; m <= n; ++m) amps[static_cast<std::size_t>(m)] = std::sqrt(dist.at(m, n - m));
    const auto projected = project_amplitudes_x(amps, x_basis_transform(n));
    for (int t = 0; t <= n; ++t) {
      const double a = projected[static_cast<std::size_t>(t)];
      out[SignalDistribution::index(t, n - t)] = a * a;
    }
  }
  return SignalDistribution(n_cut, std::move(out), dist.tail(), dist.herald_class(),
                            dist.basis() == Basis::z ? Basis::x : Basis::z);
}

/// λ-independent part of the herald model for fixed (η, Pd): for each class,
/// basis and signal configuration (m, n-m), the probability of that
/// configuration and herald outcome given that n pairs were emitted.
/// The X-basis weights project each herald-count outcome's signed amplitude
/// vector before squaring.
class HeraldKernel {
 public:
  HeraldKernel(double eta_h, double dark, int n_cut) : eta_h_(eta_h), dark_(dark), n_cut_(n_cut) {
    if (!(eta_h >= 0.0 && eta_h <= 1.0)) throw DomainError("HeraldKernel: eta_h must lie in [0,1]");
    if (!(dark >= 0.0 && dark < 1.0)) throw DomainError("HeraldKernel: dark must lie in [0,1)");
    if (n_cut < 0) throw DomainError("HeraldKernel: negative n_cut");
    const auto size = SignalDistribution::size_for(n_cut);
    for (auto& per_basis : weights_)
      for (auto& per_class : per_basis) per_class.assign(size, 0.0);
    for (int n = 0; n <= n_cut; ++n) accumulate_sector(n);
  }

  /// Shared, memoised kernel. Weights for a given n do not depend on n_cut,
  /// so a larger cached kernel serves smaller truncations unchanged.
  static std::shared_ptr<const HeraldKernel> shared(double eta_h, double dark, int n_cut) {
    static std::mutex mutex;
    static std::map<std::pair<double, double>, std::shared_ptr<const HeraldKernel>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{eta_h, dark}];
    if (!slot || slot->n_cut() < n_cut) slot = std::make_shared<const HeraldKernel>(eta_h, dark, n_cut);
    return slot;
  }

  int n_cut() const { return n_cut_; }
  double eta_h() const { return eta_h_; }
  double dark() const { return dark_; }

  double weight(Basis basis, HeraldClass cls, int m, int k) const {
    return weights_[basis == Basis::z ? 0 : 1][cls.mask()][SignalDistribution::index(m, k)];
  }

  /// Σ over herald outcomes and signal configurations of A^2 for each n.
  double sector_norm(int n) const { return sector_norms_.at(static_cast<std::size_t>(n)); }

 private:
  void accumulate_sector(int n) {
    const auto transform = x_basis_transform(n);
    const auto dim = static_cast<std::size_t>(n + 1);
    const auto base = SignalDistribution::index(0, n);
    std::vector<double> amps(dim);
    double norm = 0.0;
    // Herald counts enumerated as (n_H, n_V, n+) with n- fixed by the total.
    for (int nh = 0; nh <= n; ++nh) {
      for (int nv = 0; nv <= n - nh; ++nv) {
        for (int np = 0; np <= n - nh - nv; ++np) {
          const HeraldCounts counts{np, n - nh - nv - np, nh, nv};
          std::fill(amps.begin(), amps.end(), 0.0);
          for (int m = nv; m <= n - nh; ++m) amps[static_cast<std::size_t>(m)] = heralding_amplitude(n, m, counts);
          const auto x_amps = project_amplitudes_x(amps, transform);

          std::array<double, kHeraldClassCount> gamma{};
          for (HeraldClass cls : HeraldClass::all()) gamma[cls.mask()] = click_class_prob(counts, cls, eta_h_, dark_);

          for (std::size_t m = 0; m < dim; ++m) {
            const double pz = amps[m] * amps[m];
            const double px = x_amps[m] * x_amps[m];
            norm += pz;
            for (unsigned c = 0; c < kHeraldClassCount; ++c) {
              weights_[0][c][base + m] += pz * gamma[c];
              weights_[1][c][base + m] += px * gamma[c];
            }
          }
        }
      }
    }
    sector_norms_.push_back(norm);
  }

  double eta_h_;
  double dark_;
  int n_cut_;
  std::array<std::array<std::vector<double>, kHeraldClassCount>, 2> weights_;
  std::vector<double> sector_norms_;
};

/// All 32 joint distributions (16 classes x 2 bases) of one configured source.
class HeraldedSource {
 public:
  explicit HeraldedSource(const SourceParams& params)
      : params_(params), kernel_(HeraldKernel::shared(params.eta_h, params.dark, params.n_cut)) {
    params_.validate();
    const double tail = params_.truncated_tail();
    for (Basis basis : {Basis::z, Basis::x}) {
      auto& slot = dists_[basis == Basis::z ? 0 : 1];
      for (HeraldClass cls : HeraldClass::all()) {
        std::vector<double> entries(SignalDistribution::size_for(params_.n_cut), 0.0);
        for (int n = 0; n <= params_.n_cut; ++n) {
          const double pn = pair_number_prob(params_.lambda, n);
          for (int m = 0; m <= n; ++m)
            entries[SignalDistribution::index(m, n - m)] = pn * kernel_->weight(basis, cls, m, n - m);
        }
        slot.emplace_back(params_.n_cut, std::move(entries), tail, cls, basis);
      }
    }
  }

  const SourceParams& params() const { return params_; }
  const SignalDistribution& distribution(Basis basis, HeraldClass cls) const {
    return dists_[basis == Basis::z ? 0 : 1][cls.mask()];
  }
  /// The 16 distributions of one basis, indexed by class mask.
  std::span<const SignalDistribution> distributions(Basis basis) const { return dists_[basis == Basis::z ? 0 : 1]; }
  double tail() const { return params_.truncated_tail(); }

 private:
  SourceParams params_;
  std::shared_ptr<const HeraldKernel> kernel_;
  std::array<std::vector<SignalDistribution>, 2> dists_;
};

/// Z-basis joint distribution of the signal conditioned on herald class `cls`.
inline SignalDistribution signal_distribution(const SourceParams& params, HeraldClass cls) {
  return HeraldedSource(params).distribution(Basis::z, cls);
}

/// X-basis counterpart of signal_distribution.
inline SignalDistribution x_basis_distribution(const SourceParams& params, HeraldClass cls) {
  return HeraldedSource(params).distribution(Basis::x, cls);
}

/// Single-threshold-detector heralding of a Poissonian pair source with mean
/// photon number |λ|^2. Returns (click, no-click) joint distributions on the
/// k = 0 column.
inline std::pair<SignalDistribution, SignalDistribution> poisson_heralded_dists(double lambda, double eta_h,
                                                                                double dark, int n_cut,
                                                                                const Tolerance& tol = {}) {
  if (!(lambda >= 0.0)) throw DomainError("poisson_heralded_dists: lambda must be >= 0");
  if (!(eta_h >= 0.0 && eta_h <= 1.0)) throw DomainError("poisson_heralded_dists: eta_h must lie in [0,1]");
  if (!(dark >= 0.0 && dark < 1.0)) throw DomainError("poisson_heralded_dists: dark must lie in [0,1)");
  if (n_cut < 0) throw DomainError("poisson_heralded_dists: negative n_cut");
  const double mean = lambda * lambda;
  std::vector<double> click(SignalDistribution::size_for(n_cut), 0.0);
  std::vector<double> no_click(click.size(), 0.0);
  double kept = 0.0;
  for (int n = 0; n <= n_cut; ++n) {
    const double pn = mean == 0.0 ? (n == 0 ? 1.0 : 0.0) : std::exp(n * std::log(mean) - mean - log_factorial(n));
    const double silent = (1.0 - dark) * std::pow(1.0 - eta_h, n);
    click[SignalDistribution::index(n, 0)] = pn * (1.0 - silent);
    no_click[SignalDistribution::index(n, 0)] = pn * silent;
    kept += pn;
  }
  const double tail = std::max(0.0, 1.0 - kept);
  if (tail > tol.tail_eps) throw TruncationError("poisson_heralded_dists: tail exceeds tail_eps; raise n_cut");
  return {SignalDistribution(n_cut, std::move(click), tail), SignalDistribution(n_cut, std::move(no_click), tail)};
}

}  // namespace pfqkd
