#include "collapse/linalg.hpp"

#include "collapse/error.hpp"

#include <string>

namespace collapse::linalg {

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

bool is_symmetric(const Matrix& a, double tol) {
    if (a.rows() != a.cols()) return false;
    return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol;
}

Vector symmetric_eigenvalues(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(a), Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
}

Matrix require_psd(const Matrix& a, const char* what) {
    if (a.rows() != a.cols() || a.rows() == 0)
        throw Error(ErrorCode::invalid_model, std::string(what) + ": covariance must be square and non-empty");
    if (!a.allFinite())
        throw Error(ErrorCode::invalid_model, std::string(what) + ": covariance has non-finite entries");
    if (!is_symmetric(a))
        throw Error(ErrorCode::invalid_model, std::string(what) + ": covariance is not symmetric");
    Matrix s = symmetrize(a);
    if (symmetric_eigenvalues(s).minCoeff() < -kNegativeEigenTol)
        throw Error(ErrorCode::invalid_model, std::string(what) + ": covariance is not positive semidefinite");
    return s;
}

Matrix psd_sqrt(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(a));
    Vector root = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Matrix& v = solver.eigenvectors();
    return symmetrize(v * root.asDiagonal() * v.transpose());
}

Matrix eigen_floor(const Matrix& a, double floor) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(a));
    Vector lambda = solver.eigenvalues().cwiseMax(floor);
    const Matrix& v = solver.eigenvectors();
    return symmetrize(v * lambda.asDiagonal() * v.transpose());
}

}  // namespace collapse::linalg
