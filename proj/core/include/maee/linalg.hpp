// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "maee/types.hpp"

namespace maee::linalg {

/// Relative Hermitian defect ||A - A^H||_max / max(1, ||A||_max).
double hermitian_defect(const CMat& a);

/// (A + A^H) / 2.
CMat symmetrize(const CMat& a);

/// Hermitian PSD square root; eigenvalues below zero are clipped.
CMat psd_sqrt(const CMat& a);

/// Natural-log determinant of a Hermitian positive-definite matrix from its
/// eigenvalues. Throws NumericalError if the symmetrization defect exceeds
/// 1e-6 or an eigenvalue is not positive.
double logdet_hermitian(const CMat& a);

/// Natural-log determinant through a Cholesky factorization, falling back to
/// clipped Hermitian eigenvalues (floor 1e-14) when the factorization fails.
double logdet_chol(const CMat& a);

/// Inverse of a square matrix via partial-pivot LU with a reciprocal
/// condition check. `what` names the matrix in the error message.
CMat checked_inverse(const CMat& a, const char* what);

inline constexpr double kLn2 = 0.69314718055994530942;

}  // namespace maee::linalg
