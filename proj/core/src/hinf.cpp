#include "destab/hinf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace destab {
namespace {

constexpr int kGridPoints = 256;
constexpr int kMaxLevelIterations = 200;
constexpr double kAxisTolerance = 1e-6;
constexpr double kZeroSnap = 1e-6;

struct Sample {
  double omega;
  double gain;
};

class GainCurve {
 public:
  explicit GainCurve(const StateSpace& g) : response_(g) {}

  double gain(double omega) const { return sigma_max(response_(Complex(0.0, omega))); }

  // d sigma_max(G(jw)) / dw = Re(u* (j G'(jw)) v) for a simple sigma_max.
  double slope(double omega) const {
    const Complex s(0.0, omega);
    const Svd dec = svd(response_(s));
    const ComplexMatrix dg = Complex(0.0, 1.0) * response_.derivative(s);
    return (dec.u.col(0).adjoint() * dg * dec.v.col(0))(0, 0).real();
  }

  const FrequencyResponse& response() const { return response_; }

 private:
  FrequencyResponse response_;
};

double golden_maximize(const GainCurve& curve, double lo, double hi) {
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = curve.gain(x1);
  double f2 = curve.gain(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + std::abs(hi)); ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = curve.gain(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = curve.gain(x1);
    }
  }
  return f1 >= f2 ? x1 : x2;
}

// Locates the stationary point of the gain near `guess` by bisection on the
// sign of its slope. Returns `guess` when no sign change can be bracketed
// (e.g. repeated top singular value).
double polish_peak(const GainCurve& curve, double guess, double lo_limit, double hi_limit) {
  double step = 1e-6 * (1.0 + guess);
  double lo = guess, hi = guess;
  bool bracketed = false;
  for (int it = 0; it < 40; ++it) {
    lo = std::max(lo_limit, guess - step);
    hi = std::min(hi_limit, guess + step);
    const double s_lo = lo <= 0.0 ? 0.0 : curve.slope(lo);
    const double s_hi = curve.slope(hi);
    if (s_lo >= 0.0 && s_hi <= 0.0) {
      bracketed = true;
      break;
    }
    step *= 4.0;
  }
  if (!bracketed) return guess;
  for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + hi);
       ++it) {
    const double mid = 0.5 * (lo + hi);
    if (curve.slope(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

CriticalPoint point_from_svd(const ComplexMatrix& value, double omega, bool at_infinity) {
  const Svd dec = svd(value);
  CriticalPoint cp;
  cp.omega0 = omega;
  cp.peak = dec.sigma(0);
  cp.left_vec = dec.u.col(0);
  cp.right_vec = dec.v.col(0);
  cp.at_infinity = at_infinity;
  return cp;
}

}  // namespace

double gain_at(const StateSpace& g, double omega) {
  return sigma_max(evaluate(g, Complex(0.0, omega)));
}

RealMatrix hamiltonian(const StateSpace& g, double gamma) {
  const Eigen::Index n = g.states();
  const Eigen::Index m = g.inputs();
  const Eigen::Index p = g.outputs();
  const RealMatrix& a = g.a();
  const RealMatrix& b = g.b();
  const RealMatrix& c = g.c();
  const RealMatrix& d = g.d();
  const double g2 = gamma * gamma;

  const RealMatrix r = d.transpose() * d - g2 * RealMatrix::Identity(m, m);
  const RealMatrix s = d * d.transpose() - g2 * RealMatrix::Identity(p, p);
  Eigen::PartialPivLU<RealMatrix> r_lu(r);
  Eigen::PartialPivLU<RealMatrix> s_lu(s);
  const RealMatrix r_inv_dt_c = r_lu.solve(d.transpose() * c);
  const RealMatrix r_inv_bt = r_lu.solve(b.transpose());

  RealMatrix h(2 * n, 2 * n);
  h.topLeftCorner(n, n) = a - b * r_inv_dt_c;
  h.topRightCorner(n, n) = -gamma * b * r_inv_bt;
  h.bottomLeftCorner(n, n) = gamma * c.transpose() * s_lu.solve(c);
  h.bottomRightCorner(n, n) = -a.transpose() + c.transpose() * d * r_inv_bt;
  return h;
}

std::vector<double> level_crossings(const StateSpace& g, double gamma) {
  std::vector<double> out;
  if (g.stateless()) return out;
  for (const Complex& lambda : eigenvalues(hamiltonian(g, gamma))) {
    if (lambda.imag() < 0.0) continue;
    if (std::abs(lambda.real()) <= kAxisTolerance * std::max(1.0, std::abs(lambda))) {
      out.push_back(lambda.imag());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](double x, double y) { return std::abs(x - y) <= 1e-12 * (1.0 + y); }),
            out.end());
  return out;
}

CriticalPoint hinf_norm(const StateSpace& g, double rel_tol) {
  if (!(rel_tol > 0.0)) throw PreconditionError("hinf_norm: rel_tol must be positive");
  if (g.inputs() == 0 || g.outputs() == 0) {
    throw PreconditionError("hinf_norm: system has no inputs or no outputs");
  }
  const StabilityClass stability = classify(g);
  if (stability.tag != Stability::kHurwitz) {
    std::ostringstream msg;
    msg << "hinf_norm: system is not Hurwitz (" << to_string(stability.tag)
        << ", rightmost eigenvalue " << stability.rightmost << ")";
    throw PreconditionError(msg.str());
  }

  const double d_gain = sigma_max(g.d().cast<Complex>());
  if (g.stateless()) {
    if (d_gain == 0.0) throw PreconditionError("hinf_norm: transfer function is identically zero");
    return point_from_svd(g.d().cast<Complex>(), 0.0, false);
  }

  const GainCurve curve(g);
  const Spectrum& poles = curve.response().poles();
  double radius = 0.0;
  for (const Complex& pole : poles) radius = std::max(radius, std::abs(pole));
  const double scale = std::max(1.0, radius);

  std::vector<Sample> samples;
  auto sample = [&](double omega) {
    const double value = curve.gain(omega);
    samples.push_back({omega, value});
    return value;
  };

  double lower = d_gain;
  lower = std::max(lower, sample(0.0));
  const double log_lo = std::log10(1e-4 * scale);
  const double log_hi = std::log10(1e4 * scale);
  for (int i = 0; i < kGridPoints; ++i) {
    const double t = static_cast<double>(i) / (kGridPoints - 1);
    lower = std::max(lower, sample(std::pow(10.0, log_lo + t * (log_hi - log_lo))));
  }
  for (const Complex& pole : poles) {
    if (pole.imag() > 0.0) lower = std::max(lower, sample(pole.imag()));
  }
  if (lower == 0.0) throw PreconditionError("hinf_norm: transfer function is identically zero");

  for (int it = 0; it < kMaxLevelIterations; ++it) {
    const double gamma = (1.0 + 2.0 * rel_tol) * lower;
    const std::vector<double> crossings = level_crossings(g, gamma);
    if (crossings.empty()) break;
    double best_mid = 0.0;
    double left = 0.0;
    for (double right : crossings) {
      if (right > left) {
        const double mid = left == 0.0 ? 0.5 * right : std::sqrt(left * right);
        best_mid = std::max(best_mid, sample(mid));
      }
      left = right;
    }
    if (best_mid <= lower * (1.0 + rel_tol)) break;
    lower = best_mid;
  }

  std::sort(samples.begin(), samples.end(),
            [](const Sample& x, const Sample& y) { return x.omega < y.omega; });
  double best = 0.0;
  for (const auto& s : samples) best = std::max(best, s.gain);

  // Smallest-frequency sample that is a local maximum within tolerance of
  // the best gain seen.
  std::size_t pick = samples.size() - 1;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const bool left_ok = i == 0 || samples[i].gain >= samples[i - 1].gain;
    const bool right_ok = i + 1 == samples.size() || samples[i].gain >= samples[i + 1].gain;
    if (left_ok && right_ok && samples[i].gain >= best * (1.0 - rel_tol)) {
      pick = i;
      break;
    }
  }

  const bool at_upper_end = pick + 1 == samples.size();
  double omega0 = samples[pick].omega;
  double finite_best = samples[pick].gain;
  if (!at_upper_end) {
    const double lo = pick == 0 ? 0.0 : samples[pick - 1].omega;
    const double hi = samples[pick + 1].omega;
    const double guess = golden_maximize(curve, lo, hi);
    const double guess_gain = curve.gain(guess);
    if (pick == 0 && samples[0].omega == 0.0 && samples[0].gain >= guess_gain) {
      omega0 = 0.0;
      finite_best = samples[0].gain;
    } else {
      const double polished = polish_peak(curve, guess, lo, hi);
      const double polished_gain = curve.gain(polished);
      if (polished_gain >= guess_gain * (1.0 - 1e-14)) {
        omega0 = polished;
        finite_best = polished_gain;
      } else {
        omega0 = guess;
        finite_best = guess_gain;
      }
      if (finite_best < samples[pick].gain) {
        omega0 = samples[pick].omega;
        finite_best = samples[pick].gain;
      }
    }
    // The gain is even in omega, so a peak at 0 shows up as a flat top that
    // the search resolves to roundoff-sized frequencies.
    if (lo == 0.0 && omega0 > 0.0 && omega0 < kZeroSnap * scale) {
      const double at_zero = curve.gain(0.0);
      if (at_zero >= finite_best * (1.0 - 1e-12)) {
        omega0 = 0.0;
        finite_best = at_zero;
      }
    }
  }

  const bool at_infinity = d_gain > (1.0 + rel_tol) * finite_best ||
                           (at_upper_end && d_gain >= finite_best * (1.0 - rel_tol));
  if (at_infinity) {
    return point_from_svd(g.d().cast<Complex>(), std::numeric_limits<double>::infinity(), true);
  }
  return point_from_svd(curve.response()(Complex(0.0, omega0)), omega0, false);
}

}  // namespace destab
