#pragma once

#include <optional>
#include <string>
#include <vector>

#include "destab/hinf.hpp"
#include "destab/lti.hpp"

namespace destab {

/// Real-coefficient all-pass r(s) that interpolates a complex value at j*omega0.
///   constant:    r(s) = gain
///   first order: r(s) = gain * (s - alpha) / (s + alpha), gain = sigma * |z|
struct AllPassFactor {
  enum class Kind { kConstant, kFirstOrder };

  Kind kind = Kind::kConstant;
  double gain = 0.0;
  int sigma = 1;
  double alpha = 0.0;

  Complex operator()(Complex s) const;
};

/// Stable, proper, real-coefficient r with r(j omega0) = z and |r(jw)| = |z|.
/// Values with |Im z| <= 1e-12 |z| are treated as real and give a constant.
/// Throws UnrepresentableError for non-real z at omega0 = 0.
AllPassFactor allpass_interpolant(Complex z, double omega0);

/// Stateless gain, or (A, B, C, D) = (-alpha, 2 alpha, -gain, gain).
StateSpace realize_allpass(const AllPassFactor& factor);

/// Strictly proper scalar filter with r(j omega0) = 1 and |r(jw)| <= 1:
/// 2|w0| s / (s + |w0|)^2 for omega0 != 0, 1 / (s + 1) for omega0 = 0.
Complex wellposedness_filter_value(double omega0, Complex s);
StateSpace wellposedness_filter(double omega0);

/// Symbolic form of a dyadic attack: scale * r(s) * a(s) b(s)^T where each
/// entry of a (m of them) and b (p of them) is an all-pass factor and r is
/// the optional well-posedness filter. SISO attacks use a = {r}, b = {1}.
struct AttackForm {
  std::vector<AllPassFactor> a;
  std::vector<AllPassFactor> b;
  double scale = 1.0;
  std::optional<double> filter_omega0;

  ComplexMatrix operator()(Complex s) const;

  /// series(sum_inputs(b), [filter], stack_outputs(a)) with C, D scaled.
  StateSpace realize() const;
};

enum class Construction { kSiso, kMimo, kNearMinimal };

std::string to_string(Construction construction);
std::optional<Construction> construction_from_string(const std::string& name);

struct AttackSystem {
  StateSpace realization;
  /// Present for synthesized attacks; absent for attacks loaded from files.
  std::optional<AttackForm> form;
  double target_omega0 = 0.0;
  double claimed_norm = 0.0;
  Construction construction = Construction::kSiso;
  /// Near-minimal slack; zero for exact constructions.
  double epsilon = 0.0;
};

/// Scalar attack 1 / G(j omega0) extended by an all-pass. Requires m = p = 1
/// and a finite critical point.
AttackSystem synth_siso(const StateSpace& g, const CriticalPoint& cp);

/// Rank-one attack (1/sigma1) a(s) b(s)^T with a(j omega0) = v and
/// b(j omega0) = conj(u).
AttackSystem synth_mimo(const StateSpace& g, const CriticalPoint& cp);

/// Multiplies the attack by the strictly proper filter for omega0.
AttackSystem apply_wellposedness_filter(const AttackSystem& att, double omega0);

/// For plants whose gain peaks only at infinity: an attack built at the
/// first frequency (ascending geometric search) with
/// (1 + eps) sigma_max(G(jw)) >= ||G||. Falls through to the exact
/// construction when a finite critical frequency exists.
AttackSystem synth_near_minimal(const StateSpace& g, double eps, double rel_tol = 1e-8);

/// (1 + eps) * Delta. Requires eps > -1.
AttackSystem scale_attack(const AttackSystem& att, double eps);

/// Full pipeline: hinf_norm, SISO or MIMO construction, well-posedness filter
/// whenever D != 0. When the peak is only at infinity, `near_minimal_eps` must
/// be given; otherwise PreconditionError.
AttackSystem synthesize(const StateSpace& g, std::optional<double> near_minimal_eps = std::nullopt,
                        double rel_tol = 1e-8);

}  // namespace destab
