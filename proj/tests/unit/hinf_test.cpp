#include "destab/hinf.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "suite.hpp"

namespace destab {
namespace {

StateSpace first_order(double a, double b, double c, double d) {
  return StateSpace(RealMatrix::Constant(1, 1, a), RealMatrix::Constant(1, 1, b),
                    RealMatrix::Constant(1, 1, c), RealMatrix::Constant(1, 1, d));
}

// 1 / (s^2 + 2 zeta s + 1)
StateSpace resonance(double zeta) {
  RealMatrix a(2, 2), b(2, 1), c(1, 2);
  a << 0, 1, -1, -2 * zeta;
  b << 0, 1;
  c << 1, 0;
  return StateSpace(a, b, c, RealMatrix::Zero(1, 1));
}

TEST(HinfNorm, OscillatorPeaksAtOne) {
  const CriticalPoint cp = hinf_norm(testing::oscillator_plant());
  EXPECT_NEAR(cp.peak, 1.0, 1e-12);
  EXPECT_NEAR(cp.omega0, 1.0, 1e-10);
  EXPECT_FALSE(cp.at_infinity);
  EXPECT_NEAR(std::abs(cp.left_vec(0)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(cp.right_vec(0)), 1.0, 1e-14);
}

TEST(HinfNorm, LowPassPeaksAtZero) {
  const CriticalPoint cp = hinf_norm(first_order(-1.0, 1.0, 1.0, 0.0));
  EXPECT_NEAR(cp.peak, 1.0, 1e-12);
  EXPECT_EQ(cp.omega0, 0.0);
}

TEST(HinfNorm, ResonancePeakMatchesClosedForm) {
  for (double zeta : {0.05, 0.2, 0.5}) {
    const CriticalPoint cp = hinf_norm(resonance(zeta));
    EXPECT_NEAR(cp.peak, 1.0 / (2.0 * zeta * std::sqrt(1.0 - zeta * zeta)), 1e-7) << zeta;
    EXPECT_NEAR(cp.omega0, std::sqrt(1.0 - 2.0 * zeta * zeta), 1e-6) << zeta;
  }
}

TEST(HinfNorm, CounterexamplePeaksAtZero) {
  const CriticalPoint cp = hinf_norm(testing::counterexample_plant());
  EXPECT_NEAR(cp.peak, 1.0, 1e-12);
  EXPECT_EQ(cp.omega0, 0.0);
  // singular values of H(jw) are 1 / (1 + w^2) and w / (1 + w^2)
  for (double w : {0.1, 0.5, 1.0, 3.0}) {
    EXPECT_NEAR(gain_at(testing::counterexample_plant(), w), std::max(1.0, w) / (1.0 + w * w), 1e-14);
  }
}

TEST(HinfNorm, StatelessAndZeroInput) {
  RealMatrix d(2, 2);
  d << 3, 0, 0, 4;
  EXPECT_NEAR(hinf_norm(StateSpace::gain(d)).peak, 4.0, 1e-14);
  const StateSpace zero_b(RealMatrix::Constant(1, 1, -1.0), RealMatrix::Zero(1, 2),
                          RealMatrix::Ones(2, 1), d);
  EXPECT_NEAR(hinf_norm(zero_b).peak, 4.0, 1e-12);
}

TEST(HinfNorm, PeakAtInfinity) {
  // (2s + 1) / (s + 1) rises monotonically to 2.
  const CriticalPoint cp = hinf_norm(first_order(-1.0, 1.0, -1.0, 2.0));
  EXPECT_TRUE(cp.at_infinity);
  EXPECT_TRUE(std::isinf(cp.omega0));
  EXPECT_NEAR(cp.peak, 2.0, 1e-14);
}

TEST(HinfNorm, Preconditions) {
  EXPECT_THROW(hinf_norm(first_order(1.0, 1.0, 1.0, 0.0)), PreconditionError);
  EXPECT_THROW(hinf_norm(first_order(-1.0, 0.0, 1.0, 0.0)), PreconditionError);
  EXPECT_THROW(hinf_norm(testing::oscillator_plant(), 0.0), PreconditionError);
}

TEST(HinfNorm, ScalingAndSimilarity) {
  for (const StateSpace& g : testing::random_suite(8, 21)) {
    const double base = hinf_norm(g).peak;
    EXPECT_NEAR(hinf_norm(scale_output(g, 3.0)).peak, 3.0 * base, 1e-7 * base);
    RealMatrix t = RealMatrix::Identity(g.states(), g.states());
    t.diagonal().setLinSpaced(0.5, 2.0);
    EXPECT_NEAR(hinf_norm(similarity_transform(g, t)).peak, base, 1e-7 * base);
  }
}

TEST(HinfNorm, UpperBoundsEveryGridSample) {
  for (const StateSpace& g : testing::random_suite(10, 33)) {
    const CriticalPoint cp = hinf_norm(g);
    for (int k = 0; k <= 400; ++k) {
      const double w = std::pow(10.0, -3.0 + 6.0 * k / 400.0);
      EXPECT_LE(gain_at(g, w), cp.peak * (1.0 + 1e-8));
    }
    EXPECT_NEAR(gain_at(g, cp.omega0), cp.peak, 1e-12 * cp.peak);
    EXPECT_NEAR(testing::dense_grid_peak(g, 20000), cp.peak, 1e-5 * cp.peak);
  }
}

TEST(Hamiltonian, CrossingsAreSingularValues) {
  for (const StateSpace& g : testing::random_suite(10, 44)) {
    const double gamma = 0.7 * hinf_norm(g).peak;
    for (double w : level_crossings(g, gamma)) {
      const Svd dec = svd(evaluate(g, Complex(0.0, w)));
      double nearest = INFINITY;
      for (Eigen::Index k = 0; k < dec.sigma.size(); ++k) {
        nearest = std::min(nearest, std::abs(dec.sigma(k) - gamma));
      }
      EXPECT_LT(nearest, 1e-6 * gamma) << "w = " << w;
    }
  }
}

TEST(Hamiltonian, OscillatorCrossings) {
  // |G(jw)| = 1/sqrt(2) where (1 - w^2)^2 = w^2, i.e. w = (sqrt(5) -/+ 1) / 2.
  const std::vector<double> w = level_crossings(testing::oscillator_plant(), 1.0 / std::sqrt(2.0));
  ASSERT_EQ(w.size(), 2u);
  EXPECT_NEAR(w[0], (std::sqrt(5.0) - 1.0) / 2.0, 1e-10);
  EXPECT_NEAR(w[1], (std::sqrt(5.0) + 1.0) / 2.0, 1e-10);
  EXPECT_TRUE(level_crossings(testing::oscillator_plant(), 1.5).empty());
}

}  // namespace
}  // namespace destab
