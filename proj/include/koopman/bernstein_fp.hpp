#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>

#include "koopman/bernstein.hpp"
#include "koopman/system.hpp"

namespace koopman {

inline constexpr double kCertifyThreshold = 1e-3;

struct FpOptions {
  // Multiplier of the value and gradient constraint rows; √(PDE rows) if unset.
  std::optional<double> constraint_weight;
  double certify_threshold = kCertifyThreshold;
  double rcond = 1e-12;
};

// Stacked system A Φ = b on the unit box. Rows [0, pde_rows) hold the
// eigenvalue equation in the degree s+s' basis, then one value row at u*
// and N gradient rows.
struct FpSystem {
  int dimension = 0;
  int degree = 0;
  int field_degree = 0;
  int pde_rows = 0;
  Complex eigenvalue;
  Eigen::VectorXd fixed_point_box;
  double constraint_weight = 1.0;
  SparseMatrixC a;
  Eigen::VectorXcd b;
};

struct BernsteinEigenfunction {
  BoxMap box = BoxMap::unit(1);
  int degree = 0;
  Complex eigenvalue;
  TensorBernsteinVector coeffs{1, 0};
  double lsq_residual = 0.0;
  Eigen::VectorXd fixed_point_box;
  int rank = 0;
  bool certified = false;
};

struct BernsteinValue {
  Complex value;
  // x lies outside the box; the value is a polynomial extrapolation.
  bool extrapolated = false;
};

// Largest per-axis degree over the field components, the s' of the field's
// Bernstein form.
int field_bernstein_degree(const DynamicalSystem& sys_box);

// `sys_box` is the polynomial field on [0,1]ᴺ and `spec_box` its spectrum
// there (see spectrum_in_box).
FpSystem assemble_fp_system(const DynamicalSystem& sys_box,
                            const SpectrumReport& spec_box, int eig_index,
                            int degree, const FpOptions& options = {});

// Minimum-norm SVD least squares; `box` is recorded for evaluation in the
// original coordinates. Uncertified results are returned, not thrown.
BernsteinEigenfunction solve_fp(const FpSystem& system, const BoxMap& box,
                                const FpOptions& options = {});

// Pulls the field back to `box`, assembles and solves.
BernsteinEigenfunction compute_bernstein_eigenfunction(
    const DynamicalSystem& sys, const SpectrumReport& spec, int eig_index,
    const BoxMap& box, int degree, const FpOptions& options = {});

BernsteinValue eval_bernstein(const BernsteinEigenfunction& ef,
                              std::span<const double> x);

// Gradient in the original coordinates.
Eigen::VectorXcd eval_bernstein_gradient(const BernsteinEigenfunction& ef,
                                         std::span<const double> x);

}  // namespace koopman
