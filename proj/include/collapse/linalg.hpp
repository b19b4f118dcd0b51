#pragma once

#include <Eigen/Dense>

namespace collapse::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSymmetryTol = 1e-10;
inline constexpr double kNegativeEigenTol = 1e-10;

/// (A + Aᵀ) / 2
Matrix symmetrize(const Matrix& a);

bool is_symmetric(const Matrix& a, double tol = kSymmetryTol);

/// Eigenvalues of the symmetrized matrix, ascending.
Vector symmetric_eigenvalues(const Matrix& a);

/// Throws invalid_model if `a` is not symmetric within kSymmetryTol or has an
/// eigenvalue below -kNegativeEigenTol. Returns the symmetrized matrix.
Matrix require_psd(const Matrix& a, const char* what);

/// Symmetric square root V·diag(√max(λ,0))·Vᵀ, re-symmetrized.
Matrix psd_sqrt(const Matrix& a);

/// Same eigenvectors, eigenvalues raised to at least `floor`.
Matrix eigen_floor(const Matrix& a, double floor);

}  // namespace collapse::linalg
