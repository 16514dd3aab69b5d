#include "destab/nonlin.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <limits>
#include <memory>
#include <sstream>

namespace destab {
namespace {

constexpr double kEquilibriumTolerance = 1e-12;

void require_origin(const RealVector& value, const char* what) {
  for (Eigen::Index i = 0; i < value.size(); ++i) {
    if (!(std::abs(value(i)) <= kEquilibriumTolerance)) {
      std::ostringstream msg;
      msg << "the origin is not an equilibrium: " << what << " component " << i + 1
          << " evaluates to " << value(i) << " at x = 0, w = 0";
      throw PreconditionError(msg.str());
    }
  }
}

bool finite(const RealVector& v) { return v.allFinite(); }

// Richardson-extrapolated central difference of `fn` along every coordinate
// of the origin in a space of dimension `dim`.
RealMatrix jacobian(const std::function<RealVector(const RealVector&)>& fn, Eigen::Index rows,
                    Eigen::Index dim) {
  constexpr double kStep = 1e-6;
  RealMatrix out(rows, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    auto central = [&](double h) {
      RealVector plus = RealVector::Zero(dim);
      RealVector minus = RealVector::Zero(dim);
      plus(j) = h;
      minus(j) = -h;
      const RealVector fp = fn(plus);
      const RealVector fm = fn(minus);
      if (!finite(fp) || !finite(fm)) {
        throw NumericError("linearize: non-finite evaluation next to the origin");
      }
      return RealVector((fp - fm) / (2.0 * h));
    };
    out.col(j) = (4.0 * central(0.5 * kStep) - central(kStep)) / 3.0;
  }
  return out;
}

double max_abs(const RealMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// Peak of |x| over samples [begin, end).
double window_peak(const std::vector<double>& norms, std::size_t begin, std::size_t end) {
  double peak = 0.0;
  for (std::size_t i = begin; i < end; ++i) peak = std::max(peak, norms[i]);
  return peak;
}

}  // namespace

NonlinearSystem::NonlinearSystem(Eigen::Index state_dim, Eigen::Index input_dim,
                                 Eigen::Index output_dim, InputField vector_field,
                                 InputField output_map, bool output_feedthrough,
                                 std::optional<StateSpace> linearization)
    : n_(state_dim),
      m_(input_dim),
      p_(output_dim),
      f_(std::move(vector_field)),
      g_(std::move(output_map)),
      feedthrough_(output_feedthrough),
      linearization_(std::move(linearization)) {
  if (n_ < 0 || m_ < 0 || p_ < 0) throw DimensionError("NonlinearSystem: negative dimension");
  if (linearization_ && (linearization_->states() != n_ || linearization_->inputs() != m_ ||
                         linearization_->outputs() != p_)) {
    throw DimensionError("NonlinearSystem: linearization dimensions do not match");
  }
  const RealVector zx = RealVector::Zero(n_);
  const RealVector zw = RealVector::Zero(m_);
  const RealVector f0 = f_(zx, zw);
  const RealVector g0 = g_(zx, zw);
  if (f0.size() != n_ || g0.size() != p_) {
    throw DimensionError("NonlinearSystem: vector field or output map returns the wrong size");
  }
  require_origin(f0, "vector field");
  require_origin(g0, "output map");
}

NonlinearSystem NonlinearSystem::from_linear(const StateSpace& sys) {
  const RealMatrix a = sys.a(), b = sys.b(), c = sys.c(), d = sys.d();
  const bool feedthrough = max_abs(d) > 0.0;
  return NonlinearSystem(
      sys.states(), sys.inputs(), sys.outputs(),
      [a, b](const RealVector& x, const RealVector& w) { return RealVector(a * x + b * w); },
      [c, d](const RealVector& x, const RealVector& w) { return RealVector(c * x + d * w); },
      feedthrough, sys);
}

NonlinearSystem NonlinearSystem::from_field_spec(FieldSpec spec,
                                                 std::optional<StateSpace> linearization) {
  const auto n = static_cast<Eigen::Index>(spec.state_dim);
  const auto m = static_cast<Eigen::Index>(spec.input_dim);
  const auto p = static_cast<Eigen::Index>(spec.outputs.size());
  const bool feedthrough = spec.output_depends_on_input();
  auto shared = std::make_shared<const FieldSpec>(std::move(spec));
  return NonlinearSystem(
      n, m, p, [shared](const RealVector& x, const RealVector& w) { return evaluate(*shared, x, w).dx; },
      [shared](const RealVector& x, const RealVector& w) { return evaluate(*shared, x, w).r; },
      feedthrough, std::move(linearization));
}

NonlinearSystem cubic_damped_oscillator() {
  RealMatrix a(2, 2), b(2, 1), c(1, 2);
  a << 0.0, 1.0, -1.0, -1.0;
  b << 0.0, 1.0;
  c << 0.0, 1.0;
  StateSpace lin(a, b, c, RealMatrix::Zero(1, 1));
  return NonlinearSystem(
      2, 1, 1,
      [](const RealVector& x, const RealVector& w) {
        RealVector dx(2);
        dx << x(1), -x(0) - x(1) - x(1) * x(1) * x(1) + w(0);
        return dx;
      },
      [](const RealVector& x, const RealVector&) { return RealVector::Constant(1, x(1)); }, false,
      std::move(lin));
}

StateSpace linearize(const NonlinearSystem& sys) {
  const Eigen::Index n = sys.state_dim();
  const Eigen::Index m = sys.input_dim();
  const Eigen::Index p = sys.output_dim();
  const RealVector zx = RealVector::Zero(n);
  const RealVector zw = RealVector::Zero(m);
  const RealMatrix a = jacobian([&](const RealVector& x) { return sys.field(x, zw); }, n, n);
  const RealMatrix b = jacobian([&](const RealVector& w) { return sys.field(zx, w); }, n, m);
  const RealMatrix c = jacobian([&](const RealVector& x) { return sys.output(x, zw); }, p, n);
  const RealMatrix d = jacobian([&](const RealVector& w) { return sys.output(zx, w); }, p, m);
  StateSpace numeric(a, b, c, d);

  if (const auto& exact = sys.linearization()) {
    auto check = [](const RealMatrix& provided, const RealMatrix& estimated, const char* name) {
      const double diff = max_abs(provided - estimated);
      if (diff > 1e-6 * (1.0 + max_abs(provided))) {
        std::ostringstream msg;
        msg << "linearize: provided " << name << " differs from the numeric Jacobian by " << diff;
        throw NumericError(msg.str());
      }
    };
    check(exact->a(), a, "A");
    check(exact->b(), b, "B");
    check(exact->c(), c, "C");
    check(exact->d(), d, "D");
    return *exact;
  }
  return numeric;
}

LoopField close_loop(const NonlinearSystem& sys, const StateSpace& delta) {
  if (delta.inputs() != sys.output_dim() || delta.outputs() != sys.input_dim()) {
    std::ostringstream msg;
    msg << "close_loop: plant maps " << sys.input_dim() << " -> " << sys.output_dim()
        << " but attack maps " << delta.inputs() << " -> " << delta.outputs();
    throw DimensionError(msg.str());
  }
  const bool direct = max_abs(delta.d()) > 0.0;
  if (direct && sys.output_feedthrough()) {
    throw WellPosednessError(
        "close_loop: the attack has a direct term and the output map reads w, forming an "
        "algebraic loop; apply the well-posedness filter to obtain a strictly proper attack");
  }
  const Eigen::Index n = sys.state_dim();
  const Eigen::Index nt = delta.states();
  const StateSpace d = delta;
  const RealVector zero_w = RealVector::Zero(sys.input_dim());
  LoopField loop;
  loop.plant_states = n;
  loop.attack_states = nt;
  loop.field = [sys, d, n, nt, direct, zero_w](const RealVector& z) {
    const RealVector x = z.head(n);
    const RealVector xt = z.tail(nt);
    RealVector w, r;
    if (direct) {
      r = sys.output(x, zero_w);
      w = d.d() * r + d.c() * xt;
    } else {
      w = d.c() * xt;
      r = sys.output(x, w);
    }
    RealVector dz(n + nt);
    dz.head(n) = sys.field(x, w);
    dz.tail(nt) = d.a() * xt + d.b() * r;
    return dz;
  };
  return loop;
}

LoopField close_loop(const NonlinearSystem& sys, const AttackSystem& att) {
  return close_loop(sys, att.realization);
}

LoopField open_loop(const NonlinearSystem& sys) {
  const RealVector zero_w = RealVector::Zero(sys.input_dim());
  LoopField loop;
  loop.plant_states = sys.state_dim();
  loop.field = [sys, zero_w](const RealVector& x) { return sys.field(x, zero_w); };
  return loop;
}

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kConverged:
      return "Converged";
    case Verdict::kDiverged:
      return "Diverged";
    case Verdict::kInconclusive:
      return "Inconclusive";
  }
  return "Inconclusive";
}

Trajectory integrate(const AutonomousField& field, const RealVector& x0,
                     const IntegrationOptions& options) {
  if (!(options.t_final > 0.0)) throw PreconditionError("integrate: t_final must be positive");
  if (!(options.dt > 0.0)) throw PreconditionError("integrate: dt must be positive");
  if (!finite(x0)) throw PreconditionError("integrate: non-finite initial state");

  const double x0_norm = x0.norm();
  const double radius = options.blowup_radius.value_or(1e3 * std::max(1.0, x0_norm));

  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(x0);
  traj.max_norm = x0_norm;

  double t = 0.0;
  RealVector x = x0;
  auto eval = [&](const RealVector& at) {
    RealVector v = field(at);
    if (!finite(v)) {
      std::ostringstream msg;
      msg << "integrate: non-finite vector field value near t = " << t;
      throw IntegrationError(msg.str(), t);
    }
    return v;
  };
  // Returns false once the blow-up radius is crossed.
  auto record = [&](double time, const RealVector& state) {
    traj.times.push_back(time);
    traj.states.push_back(state);
    const double norm = state.norm();
    traj.max_norm = std::max(traj.max_norm, norm);
    if (norm > radius) {
      traj.blew_up = true;
      return false;
    }
    return true;
  };

  if (options.method == Method::kRk4) {
    const auto steps = static_cast<long long>(std::ceil(options.t_final / options.dt - 1e-9));
    for (long long k = 0; k < steps; ++k) {
      const double h = std::min(options.dt, options.t_final - t);
      const RealVector k1 = eval(x);
      const RealVector k2 = eval(x + 0.5 * h * k1);
      const RealVector k3 = eval(x + 0.5 * h * k2);
      const RealVector k4 = eval(x + h * k3);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t = k + 1 == steps ? options.t_final : t + h;
      if (!record(t, x)) break;
    }
  } else {
    // Dormand-Prince 5(4), first-same-as-last.
    constexpr double a21 = 1.0 / 5.0;
    constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                     a54 = -212.0 / 729.0;
    constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                     a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                     b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    constexpr double e1 = b1 - 5179.0 / 57600.0, e3 = b3 - 7571.0 / 16695.0,
                     e4 = b4 - 393.0 / 640.0, e5 = b5 - -92097.0 / 339200.0,
                     e6 = b6 - 187.0 / 2100.0, e7 = -1.0 / 40.0;

    double h = options.dt;
    double last_sample = 0.0;
    RealVector k1 = eval(x);
    int rejected_in_row = 0;
    while (t < options.t_final) {
      h = std::min(h, options.t_final - t);
      const RealVector k2 = eval(x + h * (a21 * k1));
      const RealVector k3 = eval(x + h * (a31 * k1 + a32 * k2));
      const RealVector k4 = eval(x + h * (a41 * k1 + a42 * k2 + a43 * k3));
      const RealVector k5 = eval(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const RealVector k6 = eval(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      const RealVector next = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const RealVector k7 = eval(next);
      const RealVector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double acc = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double sc = options.atol + options.rtol * std::max(std::abs(x(i)), std::abs(next(i)));
        acc += (err(i) / sc) * (err(i) / sc);
      }
      const double err_norm = x.size() == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(x.size()));
      const double factor =
          err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);

      if (err_norm <= 1.0) {
        t += h;
        x = next;
        k1 = k7;
        rejected_in_row = 0;
        const bool last = t >= options.t_final;
        if (last || t - last_sample >= options.dt * (1.0 - 1e-12)) {
          last_sample = t;
          if (!record(t, x)) break;
        } else if (x.norm() > radius) {
          record(t, x);
          break;
        }
        h *= factor;
      } else {
        h *= std::min(1.0, factor);
        if (++rejected_in_row > 100 || h < 1e-14 * (1.0 + t)) {
          std::ostringstream msg;
          msg << "integrate: step size underflow at t = " << t;
          throw IntegrationError(msg.str(), t);
        }
      }
    }
  }

  traj.verdict = classify_trajectory(traj, x0_norm);
  return traj;
}

Verdict classify_trajectory(const Trajectory& traj, double x0_norm) {
  if (traj.blew_up) return Verdict::kDiverged;
  const std::size_t count = traj.states.size();
  if (count == 0) return Verdict::kInconclusive;

  std::vector<double> norms(count);
  for (std::size_t i = 0; i < count; ++i) norms[i] = traj.states[i].norm();
  const double final_norm = norms.back();

  const std::size_t fifth = std::max<std::size_t>(1, count / 5);
  const double head_peak = window_peak(norms, 0, fifth);
  const double tail_peak = window_peak(norms, count - fifth, count);
  if (final_norm > 10.0 * x0_norm && tail_peak > head_peak) return Verdict::kDiverged;

  if (final_norm < 1e-3 * std::max(1.0, x0_norm)) {
    // Non-increasing envelope over five sub-windows of the last 20%.
    const std::size_t begin = count - fifth;
    const std::size_t parts = std::min<std::size_t>(5, fifth);
    bool monotone = true;
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < parts; ++k) {
      const std::size_t lo = begin + k * fifth / parts;
      const std::size_t hi = begin + (k + 1) * fifth / parts;
      const double peak = window_peak(norms, lo, hi);
      if (peak > previous) monotone = false;
      previous = peak;
    }
    if (monotone) return Verdict::kConverged;
  }

  constexpr std::size_t kWindows = 20;
  if (count >= 2 * kWindows) {
    std::vector<double> peaks(kWindows);
    for (std::size_t k = 0; k < kWindows; ++k) {
      peaks[k] = window_peak(norms, k * count / kWindows, (k + 1) * count / kWindows);
    }
    bool decreasing = true;
    for (std::size_t k = 1; k < kWindows; ++k) {
      if (!(peaks[k] < peaks[k - 1])) decreasing = false;
    }
    if (decreasing && peaks.back() < (1.0 - 1e-3) * peaks.front()) return Verdict::kConverged;
  }
  return Verdict::kInconclusive;
}

LyapunovProbe lyapunov_probe(const AutonomousField& field, const ScalarFunction& v,
                             std::span<const RealVector> grid) {
  constexpr double kStep = 1e-7;
  LyapunovProbe out;
  out.max_vdot = -std::numeric_limits<double>::infinity();
  for (const RealVector& x : grid) {
    RealVector grad(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      RealVector plus = x, minus = x;
      plus(i) += kStep;
      minus(i) -= kStep;
      grad(i) = (v(plus) - v(minus)) / (2.0 * kStep);
    }
    const double vdot = grad.dot(field(x));
    if (vdot > out.max_vdot) {
      out.max_vdot = vdot;
      out.witness = x;
    }
  }
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const Eigen::Index k = traj.states.empty() ? 0 : traj.states.front().size();
  out << "t";
  for (Eigen::Index i = 0; i < k; ++i) out << ",x" << i + 1;
  out << '\n';
  char buf[40];
  for (std::size_t r = 0; r < traj.times.size(); ++r) {
    std::snprintf(buf, sizeof buf, "%.17g", traj.times[r]);
    out << buf;
    for (Eigen::Index i = 0; i < k; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", traj.states[r](i));
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace destab
