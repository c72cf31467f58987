#include "finsim/symeig.hpp"

#include <lapacke.h>

#include <stdexcept>

namespace finsim {

SpectralData tridiagonal_eigensolve(std::vector<double> diag, std::vector<double> off) {
  const int n = static_cast<int>(diag.size());
  SpectralData out;
  out.vectors.resize(n, n);
  int info = LAPACKE_dstevd(LAPACK_COL_MAJOR, 'V', n, diag.data(), off.data(), out.vectors.data(), n);
  if (info != 0) throw std::runtime_error("tridiagonal_eigensolve: dstevd failed");
  out.eigenvalues = Eigen::Map<Eigen::VectorXd>(diag.data(), n);
  return out;
}

SpectralData dense_eigensolve(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw std::runtime_error("dense_eigensolve failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace finsim
