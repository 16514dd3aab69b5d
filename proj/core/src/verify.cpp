#include "destab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "destab/parallel.hpp"

namespace destab {
namespace {

ComplexMatrix return_ratio(const StateSpace& g, const StateSpace& delta, Complex s) {
  return evaluate(delta, s) * evaluate(g, s);
}

void require_finite_omega(const AttackSystem& att, const char* what) {
  if (!std::isfinite(att.target_omega0)) {
    throw PreconditionError(std::string(what) + ": attack has no finite target frequency");
  }
}

// Index of the entry nearest to `target`, and whether the runner-up is
// within `tie` of the same distance.
std::pair<std::size_t, bool> nearest(const Spectrum& values, Complex target, double tie) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  double second_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = std::abs(values[i] - target);
    if (d < best_d) {
      second_d = best_d;
      best_d = d;
      best = i;
    } else if (d < second_d) {
      second_d = d;
    }
  }
  return {best, second_d - best_d <= tie};
}

}  // namespace

bool AttackCertificate::passes() const {
  return well_posed && closed_loop_class && closed_loop_class->tag == Stability::kMarginal &&
         destabilization_residual < kCertificateTolerance &&
         minimality_residual < kCertificateTolerance;
}

AttackCertificate certify(const StateSpace& g, const AttackSystem& att) {
  const StateSpace& delta = att.realization;
  if (delta.inputs() != g.outputs() || delta.outputs() != g.inputs()) {
    std::ostringstream msg;
    msg << "certify: plant maps " << g.inputs() << " -> " << g.outputs() << " but attack maps "
        << delta.inputs() << " -> " << delta.outputs();
    throw DimensionError(msg.str());
  }

  AttackCertificate cert;
  cert.omega0 = att.target_omega0;
  cert.system_norm = hinf_norm(g).peak;
  cert.attack_norm = hinf_norm(delta).peak;
  cert.minimality_residual = std::abs(cert.attack_norm * cert.system_norm - 1.0);

  if (std::isfinite(att.target_omega0)) {
    const ComplexMatrix m = return_ratio(g, delta, Complex(0.0, att.target_omega0));
    cert.destabilization_residual =
        sigma_min(ComplexMatrix::Identity(m.rows(), m.cols()) - m);
  } else {
    cert.destabilization_residual = std::numeric_limits<double>::infinity();
  }

  const RealMatrix loop = RealMatrix::Identity(g.inputs(), g.inputs()) - delta.d() * g.d();
  cert.wellposedness_certificate = Complex(g.inputs() == 0 ? 1.0 : loop.determinant(), 0.0);
  try {
    const ClosedLoop closed = interconnect(g, delta);
    cert.well_posed = true;
    cert.closed_loop_class = classify(closed.combined);
  } catch (const WellPosednessError&) {
    cert.well_posed = false;
  }
  return cert;
}

std::vector<StabilityClass> small_gain_sweep(const StateSpace& g, const AttackSystem& att,
                                             std::span<const double> taus) {
  std::vector<StabilityClass> out;
  out.reserve(taus.size());
  for (double tau : taus) {
    const StateSpace scaled = scale_output(att.realization, tau);
    out.push_back(classify(interconnect(g, scaled).combined));
  }
  return out;
}

EigenBranch trace_branch(const StateSpace& g, const AttackSystem& att, double eps_max, int steps) {
  if (steps < 3 || steps % 2 == 0) {
    throw PreconditionError("trace_branch: steps must be odd and at least 3");
  }
  if (!(eps_max > 0.0 && eps_max < 1.0)) {
    throw PreconditionError("trace_branch: eps_max must lie in (0, 1)");
  }
  require_finite_omega(att, "trace_branch");

  const std::size_t count = static_cast<std::size_t>(steps);
  const std::size_t center = count / 2;
  const double h = 2.0 * eps_max / static_cast<double>(steps - 1);
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) {
    grid[k] = (static_cast<double>(k) - static_cast<double>(center)) * h;
  }

  std::vector<Spectrum> spectra(count);
  parallel_for(count, [&](std::size_t k) {
    const StateSpace scaled = scale_output(att.realization, 1.0 + grid[k]);
    spectra[k] = eigenvalues(interconnect(g, scaled).combined.a());
  });

  constexpr double kTie = 1e-9;
  EigenBranch branch;
  std::vector<std::optional<Complex>> values(count);
  const Complex start(0.0, att.target_omega0);
  {
    const auto [idx, tie] = nearest(spectra[center], start, kTie);
    if (tie) {
      branch.truncated = true;
      branch.diagnostic = "two closed-loop eigenvalues are equidistant from j*omega0 at eps = 0";
      return branch;
    }
    values[center] = spectra[center][idx];
  }
  auto follow = [&](std::size_t from, std::size_t to) {
    const auto [idx, tie] = nearest(spectra[to], *values[from], kTie);
    if (tie) {
      branch.truncated = true;
      std::ostringstream msg;
      msg << "continuation ambiguous at eps = " << grid[to];
      branch.diagnostic = msg.str();
      return false;
    }
    values[to] = spectra[to][idx];
    return true;
  };
  for (std::size_t k = center + 1; k < count; ++k) {
    if (!follow(k - 1, k)) break;
  }
  for (std::size_t k = center; k-- > 0;) {
    if (!follow(k + 1, k)) break;
  }

  branch.positive_for_positive_eps = true;
  for (std::size_t k = 0; k < count; ++k) {
    if (!values[k]) continue;
    branch.samples.push_back({grid[k], *values[k]});
    if (grid[k] > 0.0 && !(values[k]->real() > 0.0)) branch.positive_for_positive_eps = false;
  }
  if (values[center - 1] && values[center + 1]) {
    branch.zdot = (*values[center + 1] - *values[center - 1]) / (2.0 * h);
    branch.crossing_rate = branch.zdot.real();
  } else {
    branch.crossing_rate = std::numeric_limits<double>::quiet_NaN();
    branch.zdot = Complex(branch.crossing_rate, branch.crossing_rate);
  }
  return branch;
}

BranchDerivative branch_derivative_check(const StateSpace& g, const AttackSystem& att) {
  require_finite_omega(att, "branch_derivative_check");
  BranchDerivative out;
  const FrequencyResponse plant(g);
  const FrequencyResponse attack(att.realization);
  auto ratio = [&](Complex s) -> ComplexMatrix { return attack(s) * plant(s); };

  const Complex s0(0.0, att.target_omega0);
  const Spectrum at_peak = eigenvalues(ratio(s0));
  const auto [idx, tie] = nearest(at_peak, Complex(1.0, 0.0), 0.0);
  (void)tie;
  const Complex lambda0 = at_peak[idx];
  int near_one = 0;
  for (const Complex& l : at_peak) {
    if (std::abs(l - 1.0) <= 1e-6) ++near_one;
  }
  if (near_one != 1) {
    out.skipped = true;
    std::ostringstream msg;
    msg << "eigenvalue 1 of Delta(j w0) G(j w0) has multiplicity " << near_one
        << "; a single branch cannot be isolated numerically";
    out.diagnostic = msg.str();
    return out;
  }

  auto branch_value = [&](Complex s) {
    const Spectrum values = eigenvalues(ratio(s));
    return values[nearest(values, lambda0, 0.0).first];
  };
  auto central = [&](double step) {
    return (branch_value(s0 + step) - branch_value(s0 - step)) / (2.0 * step);
  };
  constexpr double kStep = 1e-6;
  out.lambda_prime = (4.0 * central(0.5 * kStep) - central(kStep)) / 3.0;

  const EigenBranch branch = trace_branch(g, att, 1e-3, 3);
  out.zdot = branch.zdot;
  out.residual = std::abs(out.zdot + 1.0 / out.lambda_prime) / std::abs(out.zdot);
  if (branch.truncated) {
    out.diagnostic = branch.diagnostic;
  }
  return out;
}

SemiSimplicity semi_simplicity_check(const StateSpace& g, const AttackSystem& att,
                                     double rel_threshold) {
  require_finite_omega(att, "semi_simplicity_check");
  const ComplexMatrix m = return_ratio(g, att.realization, Complex(0.0, att.target_omega0));
  const ComplexMatrix x = m - ComplexMatrix::Identity(m.rows(), m.cols());
  // Threshold relative to ||M|| (>= 1 here), so a numerically zero M - I
  // has rank 0 rather than being judged against its own rounding noise.
  const double cutoff = rel_threshold * std::max(1.0, sigma_max(m));
  auto rank = [cutoff](const ComplexMatrix& a) {
    const RealVector s = svd(a).sigma;
    return static_cast<int>((s.array() > cutoff).count());
  };
  return {rank(x), rank(x * x)};
}

}  // namespace destab
