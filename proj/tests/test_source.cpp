#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "pfqkd/source.hpp"

using namespace pfqkd;

namespace {

double class_total(const HeraldedSource& src, Basis b) {
  double s = 0.0;
  for (const auto& d : src.distributions(b)) s += d.total();
  return s;
}

SourceParams params(double lambda, double eta, double dark, int n_cut = 10) {
  return SourceParams(lambda, eta, dark, n_cut);
}

}  // namespace

TEST(PairNumber, Examples) {
  EXPECT_EQ(pair_number_prob(0.0, 0), 1.0);
  EXPECT_EQ(pair_number_prob(0.0, 3), 0.0);
  EXPECT_DOUBLE_EQ(pair_number_prob(1.0, 0), 0.25);
  EXPECT_THROW(pair_number_prob(-0.1, 0), DomainError);
  EXPECT_THROW(pair_number_prob(0.1, -1), DomainError);
}

TEST(PairNumber, NormalisedWithMeanTwoLambda) {
  for (double lambda : {1e-3, 0.05, 0.3, 1.0}) {
    double sum = 0.0, mean = 0.0;
    for (int n = 0; n < 2000; ++n) {
      const double p = pair_number_prob(lambda, n);
      sum += p;
      mean += n * p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12) << lambda;
    EXPECT_NEAR(mean, 2.0 * lambda, 1e-10) << lambda;
  }
}

TEST(PairNumber, ClosedFormTailMatchesSum) {
  for (double lambda : {0.01, 0.1, 0.3}) {
    for (int n_cut : {2, 5, 10}) {
      double head = 0.0;
      for (int n = 0; n <= n_cut; ++n) head += pair_number_prob(lambda, n);
      EXPECT_NEAR(pair_number_tail(lambda, n_cut), 1.0 - head, 1e-14);
    }
  }
}

TEST(SourceParams, ValidatesFieldsAndTail) {
  EXPECT_NO_THROW(params(0.01, 0.65, 1e-6));
  EXPECT_THROW(params(0.0, 0.65, 1e-6), DomainError);
  EXPECT_THROW(params(0.01, 1.5, 1e-6), DomainError);
  EXPECT_THROW(params(0.01, 0.65, 1.0), DomainError);
  EXPECT_THROW(params(0.01, 0.65, 1e-6, 1), DomainError);
  EXPECT_THROW(params(0.3, 0.65, 1e-6, 10), TruncationError);
  EXPECT_NO_THROW(params(0.3, 0.65, 1e-6, required_n_cut(0.3, 1e-10)));
}

TEST(HeraldingAmplitude, SinglePairExamples) {
  // One pair, signal V, herald photon in the H arm: 1/2 for the arm times 1/2 from the pair normalisation.
  const double a = heralding_amplitude(1, 0, {0, 0, 1, 0});
  EXPECT_NEAR(a * a, 0.25, 1e-15);
  const double b = heralding_amplitude(1, 1, {0, 0, 0, 1});
  EXPECT_NEAR(b * b, 0.25, 1e-15);
  // Herald H cannot accompany signal H.
  EXPECT_THROW(heralding_amplitude(1, 1, {0, 0, 1, 0}), DomainError);
}

TEST(HeraldingAmplitude, TwoPairsBothPlus) {
  // Frozen from the exact oracle: (n=2, m=1, n+=2) has A^2 = 1/24.
  const double a = heralding_amplitude(2, 1, {2, 0, 0, 0});
  EXPECT_NEAR(a * a, 1.0 / 24.0, 1e-12);
}

TEST(HeraldingAmplitude, InconsistentCounts) {
  EXPECT_THROW(heralding_amplitude(2, 1, {1, 0, 0, 0}), DomainError);
  EXPECT_THROW(heralding_amplitude(2, 3, {2, 0, 0, 0}), DomainError);
  EXPECT_THROW(heralding_amplitude(2, 1, {-1, 3, 0, 0}), DomainError);
}

TEST(HeraldingAmplitude, PerSectorUnitarity) {
  for (int n = 0; n <= 10; ++n) {
    double s = 0.0;
    for (int m = 0; m <= n; ++m)
      for (int nh = 0; nh <= n - m; ++nh)
        for (int nv = 0; nv <= m; ++nv)
          for (int np = 0; np <= n - nh - nv; ++np) {
            const double a = heralding_amplitude(n, m, {np, n - nh - nv - np, nh, nv});
            s += a * a;
          }
    EXPECT_NEAR(s, 1.0, 1e-10) << n;
  }
}

TEST(ClickModel, Examples) {
  EXPECT_EQ(click_class_prob({0, 0, 0, 0}, HeraldClass::none(), 0.65, 0.0), 1.0);
  EXPECT_EQ(click_class_prob({0, 0, 1, 0}, HeraldClass::h(), 1.0, 0.0), 1.0);
  const double pd = 1e-6;
  EXPECT_NEAR(click_class_prob({0, 0, 1, 0}, HeraldClass::h(), 0.65, pd),
              (1.0 - (1.0 - pd) * 0.35) * std::pow(1.0 - pd, 3), 1e-15);
}

TEST(ClickModel, ClassesPartitionOutcomes) {
  for (HeraldCounts c : {HeraldCounts{0, 0, 0, 0}, HeraldCounts{1, 2, 0, 3}, HeraldCounts{4, 0, 1, 1}}) {
    double s = 0.0;
    for (auto cls : HeraldClass::all()) s += click_class_prob(c, cls, 0.65, 1e-3);
    EXPECT_NEAR(s, 1.0, 1e-14);
  }
}

TEST(SignalDistribution, IndexingAndValidation) {
  EXPECT_EQ(SignalDistribution::size_for(2), 6u);
  EXPECT_EQ(SignalDistribution::size_for(10), 66u);
  EXPECT_EQ(SignalDistribution::index(0, 0), 0u);
  EXPECT_EQ(SignalDistribution::index(1, 0), 2u);
  EXPECT_EQ(SignalDistribution::index(0, 1), 1u);
  EXPECT_THROW(SignalDistribution(2, std::vector<double>(6, 0.5), 0.0), DomainError);
  EXPECT_THROW(SignalDistribution(2, std::vector<double>(5, 0.0), 0.0), DomainError);
  EXPECT_THROW(SignalDistribution(2, {0, 0, -0.1, 0, 0, 0}, 0.0), DomainError);
}

TEST(SignalDistribution, PartitionOfUnity) {
  for (double lambda : {0.001, 0.05, 0.3}) {
    for (double eta : {0.3, 0.65, 1.0}) {
      for (double dark : {0.0, 1e-6}) {
        const HeraldedSource src(params(lambda, eta, dark, required_n_cut(lambda, 1e-10, 10)));
        for (Basis b : {Basis::z, Basis::x})
          EXPECT_NEAR(class_total(src, b) + src.tail(), 1.0, 1e-10) << lambda << " " << eta << " " << dark;
      }
    }
  }
}

TEST(SignalDistribution, BellHeraldingLimit) {
  const HeraldedSource src(params(1e-4, 1.0, 0.0));
  auto conditional = [&](Basis b, HeraldClass c, int m, int k) {
    const auto& d = src.distribution(b, c);
    return d.at(m, k) / d.total();
  };
  EXPECT_GE(conditional(Basis::z, HeraldClass::h(), 0, 1), 0.999);
  EXPECT_GE(conditional(Basis::z, HeraldClass::v(), 1, 0), 0.999);
  EXPECT_GE(conditional(Basis::x, HeraldClass::plus(), 1, 0), 0.999);
  EXPECT_GE(conditional(Basis::x, HeraldClass::minus(), 0, 1), 0.999);

  const HeraldedSource tiny(params(1e-8, 1.0, 0.0));
  const auto& h = tiny.distribution(Basis::z, HeraldClass::h());
  EXPECT_GE(h.at(0, 1) / h.total(), 1.0 - 1e-6);
}

TEST(SignalDistribution, SymmetricClasses) {
  const HeraldedSource src(params(0.05, 0.65, 1e-6));
  const auto& h = src.distribution(Basis::z, HeraldClass::h());
  const auto& v = src.distribution(Basis::z, HeraldClass::v());
  const auto& p = src.distribution(Basis::x, HeraldClass::plus());
  const auto& q = src.distribution(Basis::x, HeraldClass::minus());
  for (int n = 0; n <= 10; ++n)
    for (int m = 0; m <= n; ++m) {
      EXPECT_NEAR(h.at(m, n - m), v.at(n - m, m), 1e-15);
      EXPECT_NEAR(p.at(m, n - m), q.at(n - m, m), 1e-15);
    }
}

TEST(SignalDistribution, ConditionalNormalised) {
  const HeraldedSource src(params(0.05, 0.65, 1e-6));
  const auto c = src.distribution(Basis::z, HeraldClass::h()).conditional();
  EXPECT_NEAR(std::accumulate(c.begin(), c.end(), 0.0), 1.0, 1e-12);
}

TEST(SignalDistribution, FreeFunctionsAgreeWithSource) {
  const auto p = params(0.02, 0.65, 1e-6, 6);
  const HeraldedSource src(p);
  const auto z = signal_distribution(p, HeraldClass::plus());
  const auto x = x_basis_distribution(p, HeraldClass::plus());
  for (std::size_t i = 0; i < z.entries().size(); ++i) {
    EXPECT_EQ(z.entries()[i], src.distribution(Basis::z, HeraldClass::plus()).entries()[i]);
    EXPECT_EQ(x.entries()[i], src.distribution(Basis::x, HeraldClass::plus()).entries()[i]);
  }
}

TEST(ProjectXBasis, SingleHorizontalPhoton) {
  std::vector<double> e(SignalDistribution::size_for(2), 0.0);
  e[SignalDistribution::index(1, 0)] = 0.4;
  const auto out = project_x_basis(SignalDistribution(2, e, 0.0));
  EXPECT_EQ(out.basis(), Basis::x);
  EXPECT_NEAR(out.at(1, 0), 0.2, 1e-15);
  EXPECT_NEAR(out.at(0, 1), 0.2, 1e-15);
}

TEST(ProjectXBasis, HongOuMandelCancellation) {
  std::vector<double> e(SignalDistribution::size_for(3), 0.0);
  e[SignalDistribution::index(1, 1)] = 0.6;
  const auto out = project_x_basis(SignalDistribution(3, e, 0.0));
  EXPECT_NEAR(out.at(2, 0), 0.3, 1e-15);
  EXPECT_NEAR(out.at(0, 2), 0.3, 1e-15);
  EXPECT_NEAR(out.at(1, 1), 0.0, 1e-15);
}

TEST(ProjectXBasis, TransformIsOrthogonal) {
  for (int n = 0; n <= 10; ++n) {
    const auto u = x_basis_transform(n);
    const int d = n + 1;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int t = 0; t < d; ++t) s += u[t * d + i] * u[t * d + j];
        EXPECT_NEAR(s, i == j ? 1.0 : 0.0, 1e-12) << n;
      }
  }
}

TEST(ProjectXBasis, PreservesPhotonNumberMarginal) {
  const HeraldedSource src(params(0.1, 0.65, 1e-6, 12));
  const auto& d = src.distribution(Basis::z, HeraldClass::of({Detector::h, Detector::plus}));
  const auto out = project_x_basis(d);
  for (int n = 0; n <= d.n_cut(); ++n) EXPECT_NEAR(out.photon_number_marginal(n), d.photon_number_marginal(n), 1e-15);
  EXPECT_EQ(out.tail(), d.tail());
}

TEST(HeraldKernel, SectorNormIsOne) {
  const auto k = HeraldKernel::shared(0.65, 1e-6, 12);
  for (int n = 0; n <= 12; ++n) EXPECT_NEAR(k->sector_norm(n), 1.0, 1e-10);
  EXPECT_GE(HeraldKernel::shared(0.65, 1e-6, 5)->n_cut(), 12);
}

TEST(PoissonHerald, Examples) {
  const auto [click0, silent0] = poisson_heralded_dists(0.0, 0.65, 0.0, 5);
  EXPECT_EQ(silent0.at(0, 0), 1.0);
  EXPECT_EQ(click0.total(), 0.0);

  const double lambda = 0.1, pd = 1e-6;
  const auto [click, silent] = poisson_heralded_dists(lambda, 0.65, pd, 10);
  const double mean = lambda * lambda;
  EXPECT_NEAR(click.at(1, 0), mean * std::exp(-mean) * (1.0 - (1.0 - pd) * 0.35), 1e-16);
  for (int n = 0; n <= 10; ++n) {
    const double pn = std::exp(n * std::log(mean) - mean - log_factorial(n));
    EXPECT_NEAR(click.at(n, 0) + silent.at(n, 0), pn, 1e-16);
    EXPECT_EQ(click.at(0, n > 0 ? n : 1), 0.0);
  }
}
