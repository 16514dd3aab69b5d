#include "destab/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace destab {
namespace {

void require_square(Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (rows != cols) {
    std::ostringstream msg;
    msg << what << ": expected a square matrix, got " << rows << "x" << cols;
    throw DimensionError(msg.str());
  }
}

}  // namespace

bool all_finite(const RealMatrix& m) { return m.allFinite(); }

bool all_finite(const ComplexMatrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const Complex z = m.data()[i];
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

void sort_spectrum(Spectrum& spectrum) {
  std::stable_sort(spectrum.begin(), spectrum.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
}

Spectrum eigenvalues(const RealMatrix& m) {
  require_square(m.rows(), m.cols(), "eigenvalues");
  if (!all_finite(m)) throw NumericError("eigenvalues: matrix has non-finite entries");
  Spectrum out;
  if (m.rows() == 0) return out;

  Eigen::EigenSolver<RealMatrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "eigenvalues: real Schur iteration did not converge for a " << m.rows() << "x"
        << m.cols() << " matrix (max |entry| = " << m.cwiseAbs().maxCoeff() << ")";
    throw NumericError(msg.str());
  }
  const auto& values = solver.eigenvalues();
  out.assign(values.data(), values.data() + values.size());
  sort_spectrum(out);
  return out;
}

Spectrum eigenvalues(const ComplexMatrix& m) {
  require_square(m.rows(), m.cols(), "eigenvalues");
  if (!all_finite(m)) throw NumericError("eigenvalues: matrix has non-finite entries");
  Spectrum out;
  if (m.rows() == 0) return out;

  Eigen::ComplexEigenSolver<ComplexMatrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "eigenvalues: complex Schur iteration did not converge for a " << m.rows() << "x"
        << m.cols() << " matrix";
    throw NumericError(msg.str());
  }
  const auto& values = solver.eigenvalues();
  out.assign(values.data(), values.data() + values.size());
  sort_spectrum(out);
  return out;
}

Svd svd(const ComplexMatrix& m) {
  if (!all_finite(m)) throw NumericError("svd: matrix has non-finite entries");
  Eigen::JacobiSVD<ComplexMatrix> solver(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (solver.info() != Eigen::Success) throw NumericError("svd: Jacobi sweeps did not converge");

  Svd out{solver.matrixU(), solver.singularValues(), solver.matrixV()};
  const Eigen::Index rank_dim = out.sigma.size();
  for (Eigen::Index k = 0; k < out.u.cols(); ++k) {
    // First entry within 1e-12 of the column's largest modulus; keeps the
    // choice stable when two entries tie in exact arithmetic.
    const double largest = out.u.col(k).cwiseAbs().maxCoeff();
    Eigen::Index pivot = 0;
    for (Eigen::Index i = 0; i < out.u.rows(); ++i) {
      if (std::abs(out.u(i, k)) >= largest * (1.0 - 1e-12)) {
        pivot = i;
        break;
      }
    }
    const Complex entry = out.u(pivot, k);
    if (std::abs(entry) == 0.0) continue;
    const Complex rotation = std::conj(entry) / std::abs(entry);
    out.u.col(k) *= rotation;
    out.u(pivot, k) = Complex(std::abs(out.u(pivot, k)), 0.0);
    if (k < rank_dim) out.v.col(k) *= rotation;
  }
  return out;
}

double sigma_max(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  if (!all_finite(m)) throw NumericError("sigma_max: matrix has non-finite entries");
  Eigen::JacobiSVD<ComplexMatrix> solver(m);
  return solver.singularValues()(0);
}

double sigma_min(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  if (!all_finite(m)) throw NumericError("sigma_min: matrix has non-finite entries");
  Eigen::JacobiSVD<ComplexMatrix> solver(m);
  const auto& s = solver.singularValues();
  return s(s.size() - 1);
}

int numeric_rank(const ComplexMatrix& m, double rel_threshold) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<ComplexMatrix> solver(m);
  const auto& s = solver.singularValues();
  if (s(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_threshold * s(0)) ++rank;
  }
  return rank;
}

ComplexMatrix solve(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_square(a.rows(), a.cols(), "solve");
  if (b.rows() != a.rows()) {
    std::ostringstream msg;
    msg << "solve: right-hand side has " << b.rows() << " rows, expected " << a.rows();
    throw DimensionError(msg.str());
  }
  if (a.rows() == 0) return ComplexMatrix(0, b.cols());
  if (!all_finite(a) || !all_finite(b)) throw NumericError("solve: non-finite input");

  Eigen::PartialPivLU<ComplexMatrix> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > 1.0 / kSingularConditionLimit)) {
    std::ostringstream msg;
    msg << "solve: matrix is singular to working precision (rcond estimate " << rcond << ")";
    throw SingularityError(msg.str());
  }
  return lu.solve(b);
}

Complex determinant(const ComplexMatrix& m) {
  require_square(m.rows(), m.cols(), "determinant");
  if (m.rows() == 0) return Complex(1.0, 0.0);
  if (m.rows() == 1) return m(0, 0);
  return Eigen::PartialPivLU<ComplexMatrix>(m).determinant();
}

}  // namespace destab
