#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "destab/synth.hpp"

namespace destab {

inline constexpr double kCertificateTolerance = 1e-6;

/// Evidence that an attack is a minimal destabilizer of g. Every number is
/// recomputed from the two realizations; nothing is taken from the attack's
/// claimed norm.
struct AttackCertificate {
  /// sigma_min(I - Delta(j w0) G(j w0)); +inf when w0 is not finite.
  double destabilization_residual = 0.0;
  /// | ||Delta|| * ||G|| - 1 |.
  double minimality_residual = 0.0;
  /// Absent when the interconnection is ill-posed.
  std::optional<StabilityClass> closed_loop_class;
  bool well_posed = false;

  double omega0 = 0.0;
  double system_norm = 0.0;
  double attack_norm = 0.0;
  Complex wellposedness_certificate;

  bool passes() const;
};

AttackCertificate certify(const StateSpace& g, const AttackSystem& att);

/// Classifies the loop closed with tau * Delta for each tau.
std::vector<StabilityClass> small_gain_sweep(const StateSpace& g, const AttackSystem& att,
                                             std::span<const double> taus);

struct BranchSample {
  double eps = 0.0;
  Complex value;
};

/// Closed-loop eigenvalue z(eps) of the loop with (1 + eps) * Delta, followed
/// from j*omega0 at eps = 0 by nearest-neighbour continuation.
struct EigenBranch {
  std::vector<BranchSample> samples;  // sorted by eps
  /// Re dz/deps at eps = 0 (central difference).
  double crossing_rate = 0.0;
  /// dz/deps at eps = 0 (central difference).
  Complex zdot;
  /// Re z(eps) > 0 for every retained sample with eps > 0.
  bool positive_for_positive_eps = false;
  /// Continuation stopped early because two eigenvalues were equidistant.
  bool truncated = false;
  std::string diagnostic;
};

/// Samples eps on a symmetric grid of `steps` points over [-eps_max, eps_max];
/// steps must be odd so eps = 0 is on the grid. Grid points are evaluated in
/// parallel, continuation is sequential.
EigenBranch trace_branch(const StateSpace& g, const AttackSystem& att, double eps_max = 0.2,
                         int steps = 41);

struct BranchDerivative {
  /// d lambda / ds at j*omega0 for the eigenvalue branch of Delta(s) G(s)
  /// passing through 1.
  Complex lambda_prime;
  /// dz/deps at 0 from trace_branch.
  Complex zdot;
  /// |zdot + 1 / lambda_prime| / |zdot|.
  double residual = 0.0;
  bool skipped = false;
  std::string diagnostic;

  bool re_lambda_prime_negative() const { return !skipped && lambda_prime.real() < 0.0; }
};

/// Compares dz/deps from the closed-loop eigenvalue with -1 / lambda'(0)
/// computed from the open-loop return ratio Delta(s) G(s). lambda' uses
/// central differences with h = 1e-6 and one Richardson step.
BranchDerivative branch_derivative_check(const StateSpace& g, const AttackSystem& att);

struct SemiSimplicity {
  int rank_m_minus_i = 0;
  int rank_squared = 0;
  bool semi_simple() const { return rank_m_minus_i == rank_squared; }
};

/// Ranks of (M - I) and (M - I)^2 for M = Delta(j w0) G(j w0); singular
/// values below rel_threshold * max(1, sigma_max(M)) count as zero.
SemiSimplicity semi_simplicity_check(const StateSpace& g, const AttackSystem& att,
                                     double rel_threshold = 1e-8);

}  // namespace destab
