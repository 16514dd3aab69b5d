#pragma once

#include <vector>

#include "destab/lti.hpp"

namespace destab {

/// A frequency attaining the H-infinity norm together with the singular
/// vector pair of G(j omega0) for the largest singular value.
struct CriticalPoint {
  /// Nonnegative; +infinity when the supremum is only reached as omega -> inf.
  double omega0 = 0.0;
  double peak = 0.0;
  /// Unit left singular vector u (p entries): G(j omega0) v = peak * u.
  ComplexVector left_vec;
  /// Unit right singular vector v (m entries).
  ComplexVector right_vec;
  bool at_infinity = false;
};

/// ||G||_Hinf for a Hurwitz system.
///
/// A log-spaced grid (plus every pole frequency) seeds a lower bound; the
/// bound is then raised by the Hamiltonian level-set iteration: at
/// gamma = (1 + 2 rel_tol) * lower, imaginary-axis eigenvalues of the
/// Hamiltonian mark where some singular value of G(jw) equals gamma, and the
/// gain at the midpoints of those intervals becomes the next lower bound.
/// When no crossings remain the norm is bracketed to rel_tol. omega0 is the
/// smallest attaining frequency, polished by solving d sigma_max / d omega = 0.
///
/// Throws PreconditionError when g is not Hurwitz or G is identically zero.
CriticalPoint hinf_norm(const StateSpace& g, double rel_tol = 1e-8);

/// sigma_max(G(j omega)).
double gain_at(const StateSpace& g, double omega);

/// Hamiltonian whose imaginary-axis eigenvalues j*w are the frequencies where
/// gamma is a singular value of G(jw). gamma must not be a singular value of D.
RealMatrix hamiltonian(const StateSpace& g, double gamma);

/// Nonnegative frequencies where some singular value of G(jw) equals gamma,
/// ascending. Eigenvalues within 1e-6 (relative) of the axis are accepted.
std::vector<double> level_crossings(const StateSpace& g, double gamma);

}  // namespace destab
