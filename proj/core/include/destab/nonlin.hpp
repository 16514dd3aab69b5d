#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "destab/dynexpr.hpp"
#include "destab/lti.hpp"
#include "destab/synth.hpp"

namespace destab {

using InputField = std::function<RealVector(const RealVector& x, const RealVector& w)>;
using AutonomousField = std::function<RealVector(const RealVector& x)>;
using ScalarFunction = std::function<double(const RealVector& x)>;

/// Exposed plant x' = f(x, w), r = g(x, w) with an equilibrium at the origin.
class NonlinearSystem {
 public:
  /// `output_feedthrough` declares whether g depends on w directly.
  /// Throws PreconditionError unless f(0,0) and g(0,0) vanish to 1e-12.
  NonlinearSystem(Eigen::Index state_dim, Eigen::Index input_dim, Eigen::Index output_dim,
                  InputField vector_field, InputField output_map, bool output_feedthrough,
                  std::optional<StateSpace> linearization = std::nullopt);

  static NonlinearSystem from_linear(const StateSpace& sys);
  static NonlinearSystem from_field_spec(FieldSpec spec,
                                         std::optional<StateSpace> linearization = std::nullopt);

  RealVector field(const RealVector& x, const RealVector& w) const { return f_(x, w); }
  RealVector output(const RealVector& x, const RealVector& w) const { return g_(x, w); }

  Eigen::Index state_dim() const { return n_; }
  Eigen::Index input_dim() const { return m_; }
  Eigen::Index output_dim() const { return p_; }
  bool output_feedthrough() const { return feedthrough_; }
  const std::optional<StateSpace>& linearization() const { return linearization_; }

 private:
  Eigen::Index n_, m_, p_;
  InputField f_, g_;
  bool feedthrough_;
  std::optional<StateSpace> linearization_;
};

/// x1' = x2, x2' = -x1 - x2 - x2^3 + w, r = x2 (exact linearization attached).
NonlinearSystem cubic_damped_oscillator();

/// Jacobians at the origin by Richardson-extrapolated central differences
/// (h = 1e-6). When the system carries an exact linearization it is checked
/// against the numeric one (to 1e-6) and returned.
StateSpace linearize(const NonlinearSystem& sys);

struct LoopField {
  AutonomousField field;
  Eigen::Index plant_states = 0;
  Eigen::Index attack_states = 0;
};

/// x' = f(x, w), xt' = At xt + Bt r, w = Dt r + Ct xt, r = g(x, .).
/// Dt != 0 together with an output map that reads w is an algebraic loop and
/// throws WellPosednessError.
LoopField close_loop(const NonlinearSystem& sys, const StateSpace& delta);
LoopField close_loop(const NonlinearSystem& sys, const AttackSystem& att);

/// x' = f(x, 0).
LoopField open_loop(const NonlinearSystem& sys);

enum class Verdict { kConverged, kDiverged, kInconclusive };
std::string to_string(Verdict verdict);

enum class Method { kRk4, kRk45 };

struct IntegrationOptions {
  double t_final = 200.0;
  double dt = 1e-3;
  Method method = Method::kRk4;
  double rtol = 1e-8;  // rk45 only
  double atol = 1e-10;
  /// Defaults to 1e3 * max(1, |x0|).
  std::optional<double> blowup_radius;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<RealVector> states;
  Verdict verdict = Verdict::kInconclusive;
  double max_norm = 0.0;
  bool blew_up = false;
};

class IntegrationError : public NumericError {
 public:
  IntegrationError(const std::string& message, double last_valid_time)
      : NumericError(message), last_valid_time_(last_valid_time) {}
  double last_valid_time() const { return last_valid_time_; }

 private:
  double last_valid_time_;
};

/// Fixed-step classical RK4 (one sample per step) or adaptive Dormand-Prince
/// 5(4) (samples thinned to one per dt). Stops early with verdict Diverged
/// once |x| exceeds the blow-up radius.
Trajectory integrate(const AutonomousField& field, const RealVector& x0,
                     const IntegrationOptions& options = {});

/// Diverged: blow-up, or final |x| > 10 |x0| with the last-20% peak above the
/// first-20% peak.
/// Converged: final |x| < 1e-3 max(1, |x0|) with a non-increasing envelope
/// over the last 20%; or a window-peak envelope (20 windows) that strictly
/// decreases throughout and ends at least 0.1% below where it started.
Verdict classify_trajectory(const Trajectory& traj, double x0_norm);

struct LyapunovProbe {
  double max_vdot = 0.0;
  RealVector witness;
};

/// max over `grid` of grad V . field, with grad V by central differences
/// (h = 1e-7).
LyapunovProbe lyapunov_probe(const AutonomousField& field, const ScalarFunction& v,
                             std::span<const RealVector> grid);

/// Header "t,x1,...,xk" then one row per sample, 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace destab
