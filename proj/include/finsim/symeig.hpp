#pragma once

#include <Eigen/Dense>
#include <vector>

namespace finsim {

/// Full eigendecomposition of a real symmetric matrix, eigenvalues ascending,
/// eigenvectors in columns.
struct SpectralData {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd vectors;
};

/// Symmetric tridiagonal solve via LAPACK divide and conquer. `diag` has size n,
/// `off` size n-1.
SpectralData tridiagonal_eigensolve(std::vector<double> diag, std::vector<double> off);

SpectralData dense_eigensolve(const Eigen::MatrixXd& m);

}  // namespace finsim
