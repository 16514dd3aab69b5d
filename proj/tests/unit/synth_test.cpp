#include "destab/synth.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "destab/verify.hpp"
#include "suite.hpp"

namespace destab {
namespace {

const Complex j(0.0, 1.0);

StateSpace first_order(double a, double b, double c, double d) {
  return StateSpace(RealMatrix::Constant(1, 1, a), RealMatrix::Constant(1, 1, b),
                    RealMatrix::Constant(1, 1, c), RealMatrix::Constant(1, 1, d));
}

// 1 / (s^2 + 0.2 s + 1): peak at a nonzero frequency with complex G(j w0).
StateSpace resonance() {
  RealMatrix a(2, 2), b(2, 1), c(1, 2);
  a << 0, 1, -1, -0.2;
  b << 0, 1;
  c << 1, 0;
  return StateSpace(a, b, c, RealMatrix::Zero(1, 1));
}

TEST(AllPass, InterpolatesJAtOne) {
  const AllPassFactor r = allpass_interpolant(j, 1.0);
  EXPECT_EQ(r.kind, AllPassFactor::Kind::kFirstOrder);
  EXPECT_EQ(r.sigma, 1);
  EXPECT_NEAR(r.alpha, 1.0, 1e-15);
  EXPECT_NEAR(std::abs(r(j) - j), 0.0, 1e-15);
}

TEST(AllPass, NegativeImaginaryFlipsSign) {
  const AllPassFactor r = allpass_interpolant(-j, 1.0);
  EXPECT_EQ(r.sigma, -1);
  EXPECT_NEAR(std::abs(r(j) + j), 0.0, 1e-15);
}

TEST(AllPass, RealValuesAreConstants) {
  for (double z : {0.0, 2.5, -0.75}) {
    const AllPassFactor r = allpass_interpolant(z, 3.0);
    EXPECT_EQ(r.kind, AllPassFactor::Kind::kConstant);
    EXPECT_DOUBLE_EQ(r(Complex(0.3, 7.0)).real(), z);
  }
  EXPECT_EQ(allpass_interpolant(Complex(1.0, 1e-14), 2.0).kind, AllPassFactor::Kind::kConstant);
}

TEST(AllPass, NonRealAtZeroFrequencyIsUnrepresentable) {
  EXPECT_THROW(allpass_interpolant(Complex(1.0, 1.0), 0.0), UnrepresentableError);
}

TEST(AllPass, InterpolatesFlatAndStable) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> w(0.05, 20.0);
  for (int k = 0; k < 200; ++k) {
    const Complex z(u(rng), u(rng));
    const double omega0 = (k % 2 ? 1.0 : -1.0) * w(rng);
    const AllPassFactor r = allpass_interpolant(z, omega0);
    EXPECT_NEAR(std::abs(r(Complex(0.0, omega0)) - z), 0.0, 1e-12 * (1.0 + std::abs(z)));
    if (r.kind == AllPassFactor::Kind::kFirstOrder) EXPECT_GT(r.alpha, 0.0);
    for (double probe : {0.0, 0.1, 1.0, 10.0, 1e3}) {
      EXPECT_NEAR(std::abs(r(Complex(0.0, probe))), std::abs(z), 1e-12 * (1.0 + std::abs(z)));
    }
    const StateSpace real = realize_allpass(r);
    const Complex s(0.3, 1.1);
    EXPECT_NEAR(std::abs(evaluate(real, s)(0, 0) - r(s)), 0.0, 1e-12 * (1.0 + std::abs(z)));
  }
}

TEST(WellPosednessFilter, UnitAtTargetAndBounded) {
  EXPECT_NEAR(std::abs(wellposedness_filter_value(1.0, j) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(wellposedness_filter_value(1.0, 10.0 * j)), 20.0 / 101.0, 1e-15);
  EXPECT_NEAR(std::abs(wellposedness_filter_value(0.0, 0.0) - 1.0), 0.0, 1e-15);
  for (double omega0 : {0.0, 0.3, 1.0, 7.0}) {
    const StateSpace f = wellposedness_filter(omega0);
    EXPECT_EQ(f.d()(0, 0), 0.0);
    EXPECT_EQ(classify(f).tag, Stability::kHurwitz);
    for (double w = 0.0; w < 50.0; w += 0.37) {
      const Complex s(0.0, w);
      EXPECT_LE(std::abs(wellposedness_filter_value(omega0, s)), 1.0 + 1e-14);
      EXPECT_NEAR(std::abs(evaluate(f, s)(0, 0) - wellposedness_filter_value(omega0, s)), 0.0,
                  1e-13);
    }
  }
}

TEST(Construction, NamesRoundTrip) {
  for (Construction c : {Construction::kSiso, Construction::kMimo, Construction::kNearMinimal}) {
    EXPECT_EQ(construction_from_string(to_string(c)), c);
  }
  EXPECT_EQ(to_string(Construction::kNearMinimal), "near_minimal");
  EXPECT_FALSE(construction_from_string("optimal"));
}

TEST(SynthSiso, OscillatorGivesUnitGain) {
  const StateSpace g = testing::oscillator_plant();
  const AttackSystem att = synth_siso(g, hinf_norm(g));
  EXPECT_TRUE(att.realization.stateless());
  EXPECT_NEAR(att.realization.d()(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(att.claimed_norm, 1.0, 1e-12);
  EXPECT_EQ(att.construction, Construction::kSiso);
}

TEST(SynthSiso, ComplexValueNeedsFirstOrderFactor) {
  const StateSpace g = resonance();
  const CriticalPoint cp = hinf_norm(g);
  const AttackSystem att = synth_siso(g, cp);
  EXPECT_EQ(att.realization.states(), 1);
  const Complex s0(0.0, cp.omega0);
  EXPECT_NEAR(std::abs(evaluate(att.realization, s0)(0, 0) * evaluate(g, s0)(0, 0) - 1.0), 0.0, 1e-9);
  EXPECT_NEAR(hinf_norm(att.realization).peak * cp.peak, 1.0, 1e-9);
}

TEST(SynthSiso, RejectsMimoAndInfinity) {
  EXPECT_THROW(synth_siso(testing::counterexample_plant(), hinf_norm(testing::counterexample_plant())),
               DimensionError);
  const StateSpace g = first_order(-1.0, 1.0, -1.0, 2.0);
  EXPECT_THROW(synth_siso(g, hinf_norm(g)), PreconditionError);
}

TEST(SynthMimo, CounterexampleDyadSingularizesAtZero) {
  const StateSpace h = testing::counterexample_plant();
  const CriticalPoint cp = hinf_norm(h);
  const AttackSystem att = synth_mimo(h, cp);
  EXPECT_EQ(att.construction, Construction::kMimo);
  const ComplexMatrix m = evaluate(att.realization, 0.0) * evaluate(h, 0.0);
  EXPECT_LT(std::abs(determinant(ComplexMatrix::Identity(2, 2) - m)), 1e-12);
  EXPECT_NEAR(hinf_norm(att.realization).peak, 1.0, 1e-9);
}

TEST(SynthMimo, FormAndRealizationAgree) {
  for (const StateSpace& g : testing::random_suite(10, 51)) {
    const AttackSystem att = synthesize(g);
    ASSERT_TRUE(att.form.has_value());
    for (Complex s : {Complex(0.0, 0.4), Complex(0.2, 2.0), Complex(1.0, 0.0)}) {
      EXPECT_LT(((*att.form)(s) - evaluate(att.realization, s)).norm(), 1e-10);
    }
    if (std::isfinite(att.target_omega0)) {
      const Complex s0(0.0, att.target_omega0);
      const ComplexMatrix m = evaluate(att.realization, s0) * evaluate(g, s0);
      const Spectrum spec = eigenvalues(m);
      double nearest = INFINITY;
      for (Complex z : spec) nearest = std::min(nearest, std::abs(z - 1.0));
      EXPECT_LT(nearest, 1e-9);
    }
  }
}

TEST(WellPosedness, FeedthroughPlantGetsStrictlyProperAttack) {
  // 1/(s^2 + 0.2 s + 1) + 0.5 has a finite peak and D != 0.
  StateSpace base = resonance();
  const StateSpace g(base.a(), base.b(), base.c(), RealMatrix::Constant(1, 1, 0.5));
  const AttackSystem att = synthesize(g);
  EXPECT_EQ(att.realization.d()(0, 0), 0.0);
  ASSERT_TRUE(att.form && att.form->filter_omega0);
  EXPECT_TRUE(certify(g, att).passes());
}

TEST(ScaleAttack, ScalesEverything) {
  const StateSpace g = resonance();
  const AttackSystem att = synthesize(g);
  const AttackSystem big = scale_attack(att, 0.25);
  EXPECT_NEAR(big.claimed_norm, 1.25 * att.claimed_norm, 1e-15);
  const Complex s(0.1, 0.8);
  EXPECT_LT((evaluate(big.realization, s) - 1.25 * evaluate(att.realization, s)).norm(), 1e-13);
  EXPECT_LT(((*big.form)(s) - 1.25 * (*att.form)(s)).norm(), 1e-13);
  EXPECT_THROW(scale_attack(att, -1.0), PreconditionError);
}

TEST(Synthesize, InfinitePeakNeedsSlack) {
  const StateSpace g = first_order(-1.0, 1.0, -1.0, 2.0);
  try {
    synthesize(g);
    FAIL() << "expected PreconditionError";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("--eps-near-minimal"), std::string::npos);
  }
}

TEST(Synthesize, NearMinimalAttack) {
  // |G(jw)|^2 = (4 w^2 + 1) / (w^2 + 1); 1.01 |G| >= 2 first holds near w = 6.09.
  const StateSpace g = first_order(-1.0, 1.0, -1.0, 2.0);
  const double eps = 0.01;
  const AttackSystem att = synthesize(g, eps);
  EXPECT_EQ(att.construction, Construction::kNearMinimal);
  EXPECT_DOUBLE_EQ(att.epsilon, eps);
  const double w = att.target_omega0;
  EXPECT_GE((1.0 + eps) * std::sqrt((4 * w * w + 1) / (w * w + 1)), 2.0);
  EXPECT_GT(w, 6.0);
  EXPECT_LT(w, 6.09 * std::pow(2.0, 1.0 / 16.0));
  EXPECT_EQ(att.realization.d()(0, 0), 0.0);
  const AttackCertificate cert = certify(g, att);
  EXPECT_LT(cert.destabilization_residual, 1e-9);
  EXPECT_LE(cert.attack_norm * cert.system_norm, 1.0 + eps);
  EXPECT_THROW(synth_near_minimal(g, 0.0), PreconditionError);
}

}  // namespace
}  // namespace destab
