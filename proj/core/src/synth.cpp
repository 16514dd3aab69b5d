#include "destab/synth.hpp"

#include <cmath>
#include <sstream>

namespace destab {
namespace {

constexpr double kRealBranchTolerance = 1e-12;

bool has_feedthrough(const StateSpace& g) {
  return g.d().size() > 0 && g.d().cwiseAbs().maxCoeff() > 0.0;
}

AttackSystem finish(AttackForm form, const CriticalPoint& cp, Construction construction) {
  StateSpace realization = form.realize();
  return AttackSystem{std::move(realization), std::move(form), cp.omega0, 1.0 / cp.peak,
                      construction, 0.0};
}

}  // namespace

Complex AllPassFactor::operator()(Complex s) const {
  if (kind == Kind::kConstant) return Complex(gain, 0.0);
  return gain * (s - alpha) / (s + alpha);
}

AllPassFactor allpass_interpolant(Complex z, double omega0) {
  const double modulus = std::abs(z);
  if (!std::isfinite(modulus) || !std::isfinite(omega0)) {
    throw NumericError("allpass_interpolant: non-finite interpolation data");
  }
  if (modulus == 0.0 || std::abs(z.imag()) <= kRealBranchTolerance * modulus) {
    return AllPassFactor{AllPassFactor::Kind::kConstant, z.real(), 1, 0.0};
  }
  if (omega0 == 0.0) {
    std::ostringstream msg;
    msg << "allpass_interpolant: non-real value " << z
        << " cannot be attained at omega = 0 by a real-coefficient function";
    throw UnrepresentableError(msg.str());
  }
  const int sigma = omega0 * z.imag() > 0.0 ? 1 : -1;
  const double denominator = modulus + sigma * z.real();
  if (denominator < kRealBranchTolerance * modulus) {
    return AllPassFactor{AllPassFactor::Kind::kConstant, z.real(), 1, 0.0};
  }
  const double alpha = std::abs(omega0 * z.imag()) / denominator;
  return AllPassFactor{AllPassFactor::Kind::kFirstOrder, sigma * modulus, sigma, alpha};
}

StateSpace realize_allpass(const AllPassFactor& factor) {
  if (factor.kind == AllPassFactor::Kind::kConstant) {
    return StateSpace::gain(RealMatrix::Constant(1, 1, factor.gain));
  }
  return StateSpace(RealMatrix::Constant(1, 1, -factor.alpha),
                    RealMatrix::Constant(1, 1, 2.0 * factor.alpha),
                    RealMatrix::Constant(1, 1, -factor.gain),
                    RealMatrix::Constant(1, 1, factor.gain));
}

Complex wellposedness_filter_value(double omega0, Complex s) {
  if (omega0 == 0.0) return 1.0 / (s + 1.0);
  const double w = std::abs(omega0);
  return 2.0 * w * s / ((s + w) * (s + w));
}

StateSpace wellposedness_filter(double omega0) {
  if (omega0 == 0.0) {
    return StateSpace(RealMatrix::Constant(1, 1, -1.0), RealMatrix::Constant(1, 1, 1.0),
                      RealMatrix::Constant(1, 1, 1.0), RealMatrix::Zero(1, 1));
  }
  const double w = std::abs(omega0);
  RealMatrix a(2, 2);
  a << 0.0, 1.0, -w * w, -2.0 * w;
  RealMatrix b(2, 1);
  b << 0.0, 1.0;
  RealMatrix c(1, 2);
  c << 0.0, 2.0 * w;
  return StateSpace(std::move(a), std::move(b), std::move(c), RealMatrix::Zero(1, 1));
}

ComplexMatrix AttackForm::operator()(Complex s) const {
  ComplexVector av(static_cast<Eigen::Index>(a.size()));
  ComplexVector bv(static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) av(static_cast<Eigen::Index>(i)) = a[i](s);
  for (std::size_t j = 0; j < b.size(); ++j) bv(static_cast<Eigen::Index>(j)) = b[j](s);
  Complex k = scale;
  if (filter_omega0) k *= wellposedness_filter_value(*filter_omega0, s);
  return k * av * bv.transpose();
}

StateSpace AttackForm::realize() const {
  if (a.empty() || b.empty()) throw DimensionError("AttackForm: empty factor list");
  std::vector<StateSpace> row, column;
  row.reserve(b.size());
  column.reserve(a.size());
  for (const auto& f : b) row.push_back(realize_allpass(f));
  for (const auto& f : a) column.push_back(realize_allpass(f));
  StateSpace path = sum_inputs(row);
  if (filter_omega0) path = series(path, wellposedness_filter(*filter_omega0));
  path = series(path, stack_outputs(column));
  return scale_output(path, scale);
}

std::string to_string(Construction construction) {
  switch (construction) {
    case Construction::kSiso:
      return "siso";
    case Construction::kMimo:
      return "mimo";
    case Construction::kNearMinimal:
      return "near_minimal";
  }
  return "unknown";
}

std::optional<Construction> construction_from_string(const std::string& name) {
  if (name == "siso") return Construction::kSiso;
  if (name == "mimo") return Construction::kMimo;
  if (name == "near_minimal") return Construction::kNearMinimal;
  return std::nullopt;
}

AttackSystem synth_siso(const StateSpace& g, const CriticalPoint& cp) {
  if (g.inputs() != 1 || g.outputs() != 1) {
    std::ostringstream msg;
    msg << "synth_siso: expected a 1x1 system, got " << g.outputs() << "x" << g.inputs();
    throw DimensionError(msg.str());
  }
  if (cp.at_infinity) {
    throw PreconditionError("synth_siso: critical frequency is at infinity; use synth_near_minimal");
  }
  const Complex value = evaluate(g, Complex(0.0, cp.omega0))(0, 0);
  AttackForm form;
  form.a = {allpass_interpolant(1.0 / value, cp.omega0)};
  form.b = {AllPassFactor{AllPassFactor::Kind::kConstant, 1.0, 1, 0.0}};
  return finish(std::move(form), cp, Construction::kSiso);
}

AttackSystem synth_mimo(const StateSpace& g, const CriticalPoint& cp) {
  if (cp.at_infinity) {
    throw PreconditionError("synth_mimo: critical frequency is at infinity; use synth_near_minimal");
  }
  if (cp.left_vec.size() != g.outputs() || cp.right_vec.size() != g.inputs()) {
    throw DimensionError("synth_mimo: singular vectors do not match the plant dimensions");
  }
  ComplexVector u = cp.left_vec;
  ComplexVector v = cp.right_vec;
  if (cp.omega0 == 0.0) {
    // G(0) is real, so the phase-fixed singular vectors are real up to rounding.
    u = u.real().cast<Complex>();
    v = v.real().cast<Complex>();
  }
  AttackForm form;
  form.scale = 1.0 / cp.peak;
  for (Eigen::Index i = 0; i < v.size(); ++i) form.a.push_back(allpass_interpolant(v(i), cp.omega0));
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    form.b.push_back(allpass_interpolant(std::conj(u(j)), cp.omega0));
  }
  return finish(std::move(form), cp, Construction::kMimo);
}

AttackSystem apply_wellposedness_filter(const AttackSystem& att, double omega0) {
  if (!std::isfinite(omega0)) {
    throw PreconditionError("apply_wellposedness_filter: omega0 must be finite");
  }
  AttackSystem out = att;
  if (att.form) {
    out.form->filter_omega0 = omega0;
    out.realization = out.form->realize();
    return out;
  }
  // Diagonal bank: one filter per output channel.
  std::vector<StateSpace> channels;
  for (Eigen::Index i = 0; i < att.realization.outputs(); ++i) {
    RealMatrix select = RealMatrix::Zero(1, att.realization.outputs());
    select(0, i) = 1.0;
    channels.push_back(series(StateSpace::gain(select), wellposedness_filter(omega0)));
  }
  out.realization = series(att.realization, stack_outputs(channels));
  return out;
}

AttackSystem scale_attack(const AttackSystem& att, double eps) {
  if (!(eps > -1.0)) throw PreconditionError("scale_attack: eps must exceed -1");
  const double factor = 1.0 + eps;
  AttackSystem out = att;
  out.realization = scale_output(att.realization, factor);
  if (out.form) out.form->scale *= factor;
  out.claimed_norm *= factor;
  return out;
}

namespace {

AttackSystem exact_attack(const StateSpace& g, const CriticalPoint& cp) {
  AttackSystem att = (g.inputs() == 1 && g.outputs() == 1) ? synth_siso(g, cp) : synth_mimo(g, cp);
  if (has_feedthrough(g)) att = apply_wellposedness_filter(att, cp.omega0);
  return att;
}

}  // namespace

AttackSystem synth_near_minimal(const StateSpace& g, double eps, double rel_tol) {
  if (!(eps > 0.0)) throw PreconditionError("synth_near_minimal: eps must be positive");
  const CriticalPoint cp = hinf_norm(g, rel_tol);
  if (!cp.at_infinity) return exact_attack(g, cp);

  double radius = 0.0;
  for (const Complex& pole : eigenvalues(g.a())) radius = std::max(radius, std::abs(pole));
  const double scale = std::max(1.0, radius);
  const FrequencyResponse response(g);
  const double step = std::pow(2.0, 1.0 / 16.0);
  for (double omega = 1e-4 * scale; omega < 1e14 * scale; omega *= step) {
    const ComplexMatrix value = response(Complex(0.0, omega));
    const Svd dec = svd(value);
    if ((1.0 + eps) * dec.sigma(0) >= cp.peak) {
      CriticalPoint local;
      local.omega0 = omega;
      local.peak = dec.sigma(0);
      local.left_vec = dec.u.col(0);
      local.right_vec = dec.v.col(0);
      AttackSystem att = exact_attack(g, local);
      att.construction = Construction::kNearMinimal;
      att.epsilon = eps;
      return att;
    }
  }
  throw NumericError("synth_near_minimal: no finite frequency reaches the requested fraction of the norm");
}

AttackSystem synthesize(const StateSpace& g, std::optional<double> near_minimal_eps,
                        double rel_tol) {
  const CriticalPoint cp = hinf_norm(g, rel_tol);
  if (cp.at_infinity) {
    if (!near_minimal_eps) {
      std::ostringstream msg;
      msg << "the gain of this system peaks only at infinite frequency (sigma_max(D) = " << cp.peak
          << "); no finite frequency attains the norm. Request a near-minimal attack with a "
             "slack eps > 0 (CLI: --eps-near-minimal)";
      throw PreconditionError(msg.str());
    }
    return synth_near_minimal(g, *near_minimal_eps, rel_tol);
  }
  return exact_attack(g, cp);
}

}  // namespace destab
