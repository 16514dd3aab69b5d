#include "destab/lti.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace destab {
namespace {

std::string shape(const RealMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

RealMatrix block_diagonal(const std::vector<const RealMatrix*>& blocks) {
  Eigen::Index rows = 0, cols = 0;
  for (const auto* b : blocks) {
    rows += b->rows();
    cols += b->cols();
  }
  RealMatrix out = RealMatrix::Zero(rows, cols);
  Eigen::Index r = 0, c = 0;
  for (const auto* b : blocks) {
    out.block(r, c, b->rows(), b->cols()) = *b;
    r += b->rows();
    c += b->cols();
  }
  return out;
}

ComplexMatrix shifted(const RealMatrix& a, Complex s) {
  ComplexMatrix m = -a.cast<Complex>();
  m.diagonal().array() += s;
  return m;
}

}  // namespace

StateSpace::StateSpace(RealMatrix a, RealMatrix b, RealMatrix c, RealMatrix d)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)) {
  const Eigen::Index n = a_.rows();
  const bool ok = a_.cols() == n && b_.rows() == n && c_.cols() == n &&
                  b_.cols() == d_.cols() && c_.rows() == d_.rows();
  if (!ok) {
    throw DimensionError("StateSpace: inconsistent blocks A " + shape(a_) + ", B " + shape(b_) +
                         ", C " + shape(c_) + ", D " + shape(d_));
  }
  if (!all_finite(a_) || !all_finite(b_) || !all_finite(c_) || !all_finite(d_)) {
    throw NumericError("StateSpace: non-finite matrix entry");
  }
}

StateSpace StateSpace::gain(RealMatrix d) {
  const Eigen::Index p = d.rows();
  const Eigen::Index m = d.cols();
  return StateSpace(RealMatrix(0, 0), RealMatrix(0, m), RealMatrix(p, 0), std::move(d));
}

std::string to_string(Stability tag) {
  switch (tag) {
    case Stability::kHurwitz:
      return "Hurwitz";
    case Stability::kMarginal:
      return "Marginal";
    case Stability::kUnstable:
      return "Unstable";
  }
  return "Unknown";
}

double axis_tolerance(Complex rightmost) { return 1e-6 * (1.0 + std::abs(rightmost)); }

StabilityClass classify(const RealMatrix& a) {
  if (a.rows() == 0) {
    return {Stability::kHurwitz, Complex(-std::numeric_limits<double>::infinity(), 0.0)};
  }
  const Spectrum spectrum = eigenvalues(a);
  const Complex rightmost = spectrum.front();
  const double tol = axis_tolerance(rightmost);
  Stability tag = Stability::kMarginal;
  if (rightmost.real() < -tol) {
    tag = Stability::kHurwitz;
  } else if (rightmost.real() > tol) {
    tag = Stability::kUnstable;
  }
  return {tag, rightmost};
}

StabilityClass classify(const StateSpace& sys) { return classify(sys.a()); }

FrequencyResponse::FrequencyResponse(const StateSpace& g) : g_(g), poles_(eigenvalues(g.a())) {}

void FrequencyResponse::check_regular(Complex s) const {
  for (const Complex& pole : poles_) {
    if (std::abs(s - pole) <= 1e-12) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "transfer evaluation at s = " << s << " hits the pole " << pole;
      throw PoleEvaluationError(msg.str());
    }
  }
}

ComplexMatrix FrequencyResponse::resolvent_times_b(Complex s) const {
  return solve(shifted(g_.a(), s), g_.b().cast<Complex>());
}

ComplexMatrix FrequencyResponse::operator()(Complex s) const {
  if (g_.stateless()) return g_.d().cast<Complex>();
  check_regular(s);
  return g_.c().cast<Complex>() * resolvent_times_b(s) + g_.d().cast<Complex>();
}

ComplexMatrix FrequencyResponse::derivative(Complex s) const {
  if (g_.stateless()) return ComplexMatrix::Zero(g_.outputs(), g_.inputs());
  check_regular(s);
  const ComplexMatrix rb = resolvent_times_b(s);
  const ComplexMatrix r2b = solve(shifted(g_.a(), s), rb);
  return -(g_.c().cast<Complex>() * r2b);
}

ComplexMatrix evaluate(const StateSpace& g, Complex s) { return FrequencyResponse(g)(s); }

ClosedLoop interconnect(const StateSpace& g, const StateSpace& delta) {
  const Eigen::Index m = g.inputs();
  const Eigen::Index p = g.outputs();
  if (delta.inputs() != p || delta.outputs() != m) {
    std::ostringstream msg;
    msg << "interconnect: plant maps " << m << " -> " << p << " but attack maps "
        << delta.inputs() << " -> " << delta.outputs();
    throw DimensionError(msg.str());
  }

  const RealMatrix loop = RealMatrix::Identity(m, m) - delta.d() * g.d();
  const double certificate = m == 0 ? 1.0 : loop.determinant();
  if (!(std::abs(certificate) > kWellPosednessThreshold)) {
    std::ostringstream msg;
    msg << "interconnect: algebraic loop is ill-posed, det(I - Dtilde D) = " << certificate;
    throw WellPosednessError(msg.str());
  }
  // w = E (Dtilde C x + Ctilde xt), r = C x + D w.
  const RealMatrix e = loop.inverse();
  const Eigen::Index n = g.states();
  const Eigen::Index nt = delta.states();
  const RealMatrix edc = e * delta.d() * g.c();
  const RealMatrix ect = e * delta.c();

  RealMatrix a(n + nt, n + nt);
  a.topLeftCorner(n, n) = g.a() + g.b() * edc;
  a.topRightCorner(n, nt) = g.b() * ect;
  a.bottomLeftCorner(nt, n) = delta.b() * (g.c() + g.d() * edc);
  a.bottomRightCorner(nt, nt) = delta.a() + delta.b() * g.d() * ect;

  return ClosedLoop{StateSpace(std::move(a), RealMatrix(n + nt, 0), RealMatrix(0, n + nt),
                               RealMatrix(0, 0)),
                    true, Complex(certificate, 0.0)};
}

Complex char_poly(const RealMatrix& a, Complex s) {
  if (a.rows() == 0) return Complex(1.0, 0.0);
  return determinant(shifted(a, s));
}

double char_poly_identity_residual(const StateSpace& g, const StateSpace& delta, Complex s) {
  const ClosedLoop loop = interconnect(g, delta);
  const Complex lhs = char_poly(loop.combined.a(), s);
  const ComplexMatrix gs = evaluate(g, s);
  const ComplexMatrix ds = evaluate(delta, s);
  const Eigen::Index m = g.inputs();
  const Complex return_difference = determinant(ComplexMatrix::Identity(m, m) - ds * gs);
  const Complex rhs =
      char_poly(g.a(), s) * char_poly(delta.a(), s) * return_difference / loop.certificate;
  return std::abs(lhs - rhs) / (1.0 + std::abs(lhs));
}

StateSpace series(const StateSpace& head, const StateSpace& tail) {
  if (head.outputs() != tail.inputs()) {
    std::ostringstream msg;
    msg << "series: head has " << head.outputs() << " outputs but tail takes " << tail.inputs()
        << " inputs";
    throw DimensionError(msg.str());
  }
  const Eigen::Index n1 = head.states();
  const Eigen::Index n2 = tail.states();
  RealMatrix a = RealMatrix::Zero(n1 + n2, n1 + n2);
  a.topLeftCorner(n1, n1) = head.a();
  a.bottomLeftCorner(n2, n1) = tail.b() * head.c();
  a.bottomRightCorner(n2, n2) = tail.a();

  RealMatrix b(n1 + n2, head.inputs());
  b.topRows(n1) = head.b();
  b.bottomRows(n2) = tail.b() * head.d();

  RealMatrix c(tail.outputs(), n1 + n2);
  c.leftCols(n1) = tail.d() * head.c();
  c.rightCols(n2) = tail.c();

  return StateSpace(std::move(a), std::move(b), std::move(c), tail.d() * head.d());
}

StateSpace stack_outputs(const std::vector<StateSpace>& parts) {
  if (parts.empty()) throw DimensionError("stack_outputs: no parts");
  const Eigen::Index m = parts.front().inputs();
  std::vector<const RealMatrix*> as, cs;
  Eigen::Index n = 0, p = 0;
  for (const auto& part : parts) {
    if (part.inputs() != m) throw DimensionError("stack_outputs: parts disagree on input count");
    as.push_back(&part.a());
    cs.push_back(&part.c());
    n += part.states();
    p += part.outputs();
  }
  RealMatrix b(n, m), d(p, m);
  Eigen::Index r = 0, q = 0;
  for (const auto& part : parts) {
    b.middleRows(r, part.states()) = part.b();
    d.middleRows(q, part.outputs()) = part.d();
    r += part.states();
    q += part.outputs();
  }
  return StateSpace(block_diagonal(as), std::move(b), block_diagonal(cs), std::move(d));
}

StateSpace sum_inputs(const std::vector<StateSpace>& parts) {
  if (parts.empty()) throw DimensionError("sum_inputs: no parts");
  const Eigen::Index p = parts.front().outputs();
  std::vector<const RealMatrix*> as, bs;
  Eigen::Index n = 0, m = 0;
  for (const auto& part : parts) {
    if (part.outputs() != p) throw DimensionError("sum_inputs: parts disagree on output count");
    as.push_back(&part.a());
    bs.push_back(&part.b());
    n += part.states();
    m += part.inputs();
  }
  RealMatrix c(p, n), d(p, m);
  Eigen::Index col = 0, in = 0;
  for (const auto& part : parts) {
    c.middleCols(col, part.states()) = part.c();
    d.middleCols(in, part.inputs()) = part.d();
    col += part.states();
    in += part.inputs();
  }
  return StateSpace(block_diagonal(as), block_diagonal(bs), std::move(c), std::move(d));
}

StateSpace scale_output(const StateSpace& sys, double k) {
  return StateSpace(sys.a(), sys.b(), k * sys.c(), k * sys.d());
}

StateSpace similarity_transform(const StateSpace& sys, const RealMatrix& t) {
  if (t.rows() != sys.states() || t.cols() != sys.states()) {
    throw DimensionError("similarity_transform: T must be n x n");
  }
  Eigen::PartialPivLU<RealMatrix> lu(t);
  const RealMatrix t_inv = lu.inverse();
  return StateSpace(t * sys.a() * t_inv, t * sys.b(), sys.c() * t_inv, sys.d());
}

}  // namespace destab
