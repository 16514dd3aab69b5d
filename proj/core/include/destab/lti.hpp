#pragma once

#include <string>
#include <vector>

#include "destab/numeric.hpp"

namespace destab {

/// Continuous-time LTI system x' = A x + B w, r = C x + D w.
///
/// n = 0 is allowed and encodes a stateless gain r = D w. Construction checks
/// that the four blocks agree on (n, m, p) and that every entry is finite.
class StateSpace {
 public:
  StateSpace(RealMatrix a, RealMatrix b, RealMatrix c, RealMatrix d);

  /// Stateless system with transfer matrix `d`.
  static StateSpace gain(RealMatrix d);

  const RealMatrix& a() const { return a_; }
  const RealMatrix& b() const { return b_; }
  const RealMatrix& c() const { return c_; }
  const RealMatrix& d() const { return d_; }

  Eigen::Index states() const { return a_.rows(); }
  Eigen::Index inputs() const { return d_.cols(); }
  Eigen::Index outputs() const { return d_.rows(); }
  bool stateless() const { return a_.rows() == 0; }

 private:
  RealMatrix a_, b_, c_, d_;
};

enum class Stability { kHurwitz, kMarginal, kUnstable };

std::string to_string(Stability tag);

struct StabilityClass {
  Stability tag = Stability::kHurwitz;
  /// Eigenvalue with the largest real part; -inf for stateless systems.
  Complex rightmost;
};

/// Half-width of the Marginal band around the imaginary axis.
double axis_tolerance(Complex rightmost);

StabilityClass classify(const RealMatrix& a);
StabilityClass classify(const StateSpace& sys);

/// Evaluates G(s) = C (sI - A)^-1 B + D, rejecting s within 1e-12 of a pole.
ComplexMatrix evaluate(const StateSpace& g, Complex s);

/// Repeated evaluation of one transfer matrix. Pole locations are computed
/// once; each call is a single LU solve.
class FrequencyResponse {
 public:
  explicit FrequencyResponse(const StateSpace& g);

  ComplexMatrix operator()(Complex s) const;
  /// dG/ds at s.
  ComplexMatrix derivative(Complex s) const;

  const StateSpace& system() const { return g_; }
  const Spectrum& poles() const { return poles_; }

 private:
  void check_regular(Complex s) const;
  ComplexMatrix resolvent_times_b(Complex s) const;

  StateSpace g_;
  Spectrum poles_;
};

struct ClosedLoop {
  /// Autonomous system over the stacked state (x, xtilde); B, C, D are empty.
  StateSpace combined;
  bool well_posed = false;
  /// det(I - Dtilde D).
  Complex certificate;
};

inline constexpr double kWellPosednessThreshold = 1e-9;

/// Feedback loop w = Delta(r), r = G(w). `g` maps m -> p, `delta` maps p -> m.
/// Throws WellPosednessError when |det(I - Dtilde D)| <= 1e-9.
ClosedLoop interconnect(const StateSpace& g, const StateSpace& delta);

/// Characteristic polynomial det(sI - A) evaluated at s.
Complex char_poly(const RealMatrix& a, Complex s);

/// |det(sI - Acl) - p_A(s) p_Atilde(s) det(I - Delta(s) G(s)) / det(I - Dtilde D)|
/// normalised by 1 + |det(sI - Acl)|.
double char_poly_identity_residual(const StateSpace& g, const StateSpace& delta, Complex s);

/// Cascade: the output of `head` drives `tail`. Transfer = tail(s) * head(s).
StateSpace series(const StateSpace& head, const StateSpace& tail);

/// Same input fed to every part; outputs stacked vertically.
StateSpace stack_outputs(const std::vector<StateSpace>& parts);

/// Separate inputs per part (concatenated); outputs summed.
StateSpace sum_inputs(const std::vector<StateSpace>& parts);

/// Multiplies C and D by k.
StateSpace scale_output(const StateSpace& sys, double k);

/// T A T^-1, T B, C T^-1, D.
StateSpace similarity_transform(const StateSpace& sys, const RealMatrix& t);

}  // namespace destab
