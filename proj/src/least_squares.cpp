#include "koopman/least_squares.hpp"

#include "koopman/errors.hpp"

namespace koopman {

namespace {

// Divide-and-conquer SVD; Eigen's threshold is relative to σ_max, matching
// the rcond convention.
template <typename Matrix, typename Vector>
LeastSquaresSolution svd_solve(const Matrix& a, const Vector& b, double rcond) {
  if (a.rows() != b.size()) throw DimensionMismatch("right-hand side length differs from row count");
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(rcond);
  const Vector x = svd.solve(b);
  if (!x.allFinite()) throw NonFiniteError("least-squares solution is not finite");
  LeastSquaresSolution out;
  const double nb = b.norm();
  const double r = (a * x - b).norm();
  out.relative_residual = nb > 0 ? r / nb : r;
  out.x = x.template cast<Complex>();
  out.rank = static_cast<int>(svd.rank());
  const Eigen::VectorXd& s = svd.singularValues();
  out.sigma_max = s.size() ? s(0) : 0.0;
  out.sigma_min_kept = out.rank > 0 ? s(out.rank - 1) : 0.0;
  return out;
}

}  // namespace

LeastSquaresSolution solve_least_squares(const Eigen::MatrixXd& a,
                                         const Eigen::VectorXd& b, double rcond) {
  return svd_solve(a, b, rcond);
}

LeastSquaresSolution solve_least_squares(const Eigen::MatrixXcd& a,
                                         const Eigen::VectorXcd& b, double rcond) {
  if (a.imag().isZero(0.0) && b.imag().isZero(0.0)) {
    return svd_solve(Eigen::MatrixXd(a.real()), Eigen::VectorXd(b.real()), rcond);
  }
  return svd_solve(a, b, rcond);
}

}  // namespace koopman
