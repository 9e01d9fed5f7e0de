#pragma once

#include <Eigen/Dense>

#include "koopman/polynomial.hpp"

namespace koopman {

struct LeastSquaresSolution {
  Eigen::VectorXcd x;
  // ‖Ax − b‖ / ‖b‖ (absolute residual when b = 0).
  double relative_residual = 0.0;
  int rank = 0;
  double sigma_max = 0.0;
  // Smallest singular value kept above the cutoff.
  double sigma_min_kept = 0.0;
};

// Minimum-norm least-squares solution by SVD; singular values below
// rcond·σ_max are treated as zero. Real inputs take a real kernel.
LeastSquaresSolution solve_least_squares(const Eigen::MatrixXcd& a,
                                         const Eigen::VectorXcd& b,
                                         double rcond = 1e-12);
LeastSquaresSolution solve_least_squares(const Eigen::MatrixXd& a,
                                         const Eigen::VectorXd& b,
                                         double rcond = 1e-12);

}  // namespace koopman
