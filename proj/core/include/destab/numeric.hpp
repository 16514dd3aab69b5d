#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "destab/errors.hpp"

namespace destab {

using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

// Eigenvalues sorted by descending real part, ties by descending imaginary
// part. Same input always yields the same sequence.
using Spectrum = std::vector<Complex>;

// Condition-number estimate above which `solve` refuses to answer.
inline constexpr double kSingularConditionLimit = 1e14;

bool all_finite(const RealMatrix& m);
bool all_finite(const ComplexMatrix& m);

void sort_spectrum(Spectrum& spectrum);

// All eigenvalues of a real square matrix, with algebraic multiplicity.
// Complex eigenvalues come out as exact conjugate pairs (real Schur form).
Spectrum eigenvalues(const RealMatrix& m);

// Eigenvalues of a general complex square matrix, same ordering rule.
Spectrum eigenvalues(const ComplexMatrix& m);

struct Svd {
  ComplexMatrix u;       // rows(m) x rows(m), unitary
  RealVector sigma;      // min(rows, cols), descending, nonnegative
  ComplexMatrix v;       // cols(m) x cols(m), unitary
};

// Full SVD m = U diag(sigma) V*. Each column of U is rotated so that its
// largest-modulus entry is real and positive; the matching column of V gets
// the same rotation so the product is unchanged.
Svd svd(const ComplexMatrix& m);

double sigma_max(const ComplexMatrix& m);
double sigma_min(const ComplexMatrix& m);

// Number of singular values above rel_threshold * sigma_max.
int numeric_rank(const ComplexMatrix& m, double rel_threshold);

// Solves a x = b by partial-pivot LU. Throws SingularityError when the
// reciprocal condition estimate drops below 1 / kSingularConditionLimit.
ComplexMatrix solve(const ComplexMatrix& a, const ComplexMatrix& b);

Complex determinant(const ComplexMatrix& m);

}  // namespace destab
