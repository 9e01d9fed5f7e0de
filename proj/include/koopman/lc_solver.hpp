#pragma once

#include <Eigen/Dense>
#include <vector>

#include "koopman/limit_cycle.hpp"
#include "koopman/system.hpp"

namespace koopman {

// Coefficients of F_θ and F_y in the basis e^{inθ} b_k^{s'}(y), rows indexed
// by n + n̄ for n = −n̄ … n̄, columns by k.
struct FieldProjection {
  int n_bar = 0;
  int s_prime = 0;
  Eigen::MatrixXcd theta;
  Eigen::MatrixXcd y;
  // Max deviation of the reconstruction on the sampling grid.
  double projection_error = 0.0;
  // Max |F_θ|, |F_y| on the sampling grid.
  double scale = 0.0;
};

inline constexpr double kProjectionTolerance = 1e-4;
inline constexpr double kPeriodicityTolerance = 1e-6;
inline constexpr double kFdStep = 1e-6;

// Throws ProjectionError when the grid deviation exceeds 1e-4·scale.
FieldProjection project_field(const DynamicalSystem& sys,
                              const LimitCycleParam& lc, int n_bar, int s_prime);

struct BoundaryData {
  // Fourier coefficients of g = ∂φ/∂y on the cycle, index n + n̄.
  Eigen::VectorXcd c2;
  // g at θ_j = 2πj/K, K = 4(2n̄+1); g(0) = 1.
  Eigen::VectorXd g;
};

// g(θ) = exp ∫₀^θ (λ − ∂F_y/∂y)/F_θ dσ on the cycle. λ must be real.
// Throws LimitCycleError if F_θ vanishes on the cycle or g is not periodic.
BoundaryData boundary_c2(const DynamicalSystem& sys, const LimitCycleParam& lc,
                         Complex lambda, int n_bar);

struct LcOptions {
  int n_bar = 40;
  int degree = 20;
  int s_prime = 3;
  // Keep only harmonics n divisible by the stride.
  int harmonic_stride = 1;
  double constraint_weight = 1.0;
  double certify_threshold = 1e-3;
  double rcond = 1e-12;
};

// Unknown (h, k) sits at h·(s+1) + k, h indexing the retained harmonics in
// increasing order. PDE rows follow the same layout in degree s+s'; then
// one value row and one slope row per retained harmonic.
struct LcSystem {
  int n_bar = 0;
  int degree = 0;
  int s_prime = 0;
  int harmonic_stride = 1;
  std::vector<int> harmonics;
  int pde_rows = 0;
  Complex eigenvalue;
  double delta = 0.0;
  double constraint_weight = 1.0;
  Eigen::MatrixXcd a;
  Eigen::VectorXcd b;
};

LcSystem assemble_lc_system(const FieldProjection& field, const Eigen::VectorXcd& c2,
                            Complex lambda, double delta, const LcOptions& options);

struct FourierBernsteinEigenfunction {
  LimitCycleParam lc;
  int n_bar = 0;
  int degree = 0;
  Complex eigenvalue;
  int harmonic_stride = 1;
  // Row n + n̄, column k; rows of dropped harmonics are zero.
  Eigen::MatrixXcd coeffs;
  Eigen::VectorXcd c2;
  double lsq_residual = 0.0;
  int rank = 0;
  bool certified = false;
};

FourierBernsteinEigenfunction solve_lc(const LcSystem& system, const LimitCycleParam& lc,
                                       const Eigen::VectorXcd& c2, const LcOptions& options = {});

// Floquet exponent (computed if `lc` has none), projection, c2, assembly, solve.
FourierBernsteinEigenfunction compute_lc_eigenfunction(const DynamicalSystem& sys,
                                                       LimitCycleParam lc,
                                                       const LcOptions& options = {});

// φ at annulus coordinates; no range check.
Complex eval_lc_polar(const FourierBernsteinEigenfunction& ef, double theta, double y);

// φ at a Cartesian point. Throws AnnulusError outside min(0, −Δ) ≤ y ≤ 1.
Complex eval_lc(const FourierBernsteinEigenfunction& ef, const Eigen::Vector2d& x);

}  // namespace koopman
