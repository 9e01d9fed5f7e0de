#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "koopman/polynomial.hpp"
#include "koopman/system.hpp"

namespace koopman {

// Truncated Taylor series of φ_λ about a fixed point. The constant term is
// zero and the order-1 part equals `gradient_seed`.
struct TaylorEigenfunction {
  Eigen::VectorXd center;
  Complex eigenvalue;
  int max_order = 0;
  // Centered at `center`; total degree ≤ max_order.
  MonomialPoly coeffs{1};
  Eigen::VectorXcd gradient_seed;
  // Near-resonance notices raised during the solve.
  std::vector<std::string> warnings;
};

inline constexpr double kResonanceConditionLimit = 1e12;
inline constexpr double kNearResonanceGap = 1e-4;

// Order-by-order solve of (H⁽ˢ⁾ − λI)Φ⁽ˢ⁾ = −V⁽ˢ⁾ for s = 2 … max_order.
// Requires a polynomial system.
TaylorEigenfunction solve_taylor(const DynamicalSystem& sys,
                                 const SpectrumReport& spec, int eig_index,
                                 int max_order);

// Partial sum through total degree `order` (defaults to max_order).
Complex eval_taylor(const TaylorEigenfunction& ef, std::span<const double> x,
                    std::optional<int> order = std::nullopt);

// Radius of the ball of convergence from the decay rate of the homogeneous
// parts, measured in the unitarily invariant norm
// ‖P_s‖² = Σ_{|k|=s} |φ_k|² k!/s!; +∞ when the high orders vanish.
double estimate_radius(const TaylorEigenfunction& ef);

// Truncated product Π φ_i^{k_i}, an eigenfunction for Σ k_i λ_i.
TaylorEigenfunction product_eigenfunction(
    std::span<const TaylorEigenfunction> efs, std::span<const int> powers);

// Eigenfunction of the conjugate eigenvalue for real fields.
TaylorEigenfunction conjugate(const TaylorEigenfunction& ef);

// max |F·∇φ − λφ| over the given points.
double taylor_pde_residual(const DynamicalSystem& sys,
                           const TaylorEigenfunction& ef,
                           std::span<const Eigen::VectorXd> points);

}  // namespace koopman
