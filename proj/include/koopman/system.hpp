#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "koopman/polynomial.hpp"

namespace koopman {

// Autonomous vector field ẋ = F(x) on ℝᴺ. Polynomial systems keep their exact
// monomial components; general smooth fields supply evaluation and Jacobian
// callbacks and have no polynomial form.
class DynamicalSystem {
 public:
  using EvalFn = std::function<void(const double* x, double* out)>;
  using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd& x)>;

  // Components must be real, share the dimension, and are recentered to 0.
  explicit DynamicalSystem(std::vector<MonomialPoly> components,
                           std::string name = "");
  DynamicalSystem(int dimension, EvalFn eval, JacobianFn jacobian,
                  std::string name);

  int dimension() const { return dimension_; }
  const std::string& name() const { return name_; }
  bool is_polynomial() const { return !components_.empty(); }
  // Throws Error for non-polynomial systems.
  const std::vector<MonomialPoly>& components() const;

  void eval(const double* x, double* out) const;
  Eigen::VectorXd eval(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;

  // ẋ = -F(x).
  DynamicalSystem reversed() const;

 private:
  struct Compiled;

  int dimension_;
  std::string name_;
  std::vector<MonomialPoly> components_;
  std::shared_ptr<const Compiled> compiled_;
  EvalFn eval_fn_;
  JacobianFn jacobian_fn_;
};

// Axis-aligned box with the affine chart u = (x - lower)/(upper - lower).
class BoxMap {
 public:
  BoxMap(Eigen::VectorXd lower, Eigen::VectorXd upper);
  static BoxMap unit(int dimension);

  int dimension() const { return static_cast<int>(lower_.size()); }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  Eigen::VectorXd widths() const { return upper_ - lower_; }

  Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const;
  Eigen::VectorXd from_unit(const Eigen::VectorXd& u) const;
  bool contains(const Eigen::VectorXd& x, double slack = 0.0) const;

 private:
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

struct SpectrumReport {
  Eigen::VectorXd fixed_point;
  Eigen::MatrixXd jacobian;
  Eigen::VectorXcd eigenvalues;
  // Column i is the unit left eigenvector w_i with Jᵀw_i = λ_i w_i and its
  // first nonzero entry real positive.
  Eigen::MatrixXcd left_eigenvectors;
  bool nonresonant = false;
  int nonresonance_order = 0;
};

inline constexpr double kFixedPointTolerance = 1e-12;
inline constexpr int kNewtonMaxIterations = 100;

Eigen::VectorXd find_fixed_point(const DynamicalSystem& sys,
                                 const Eigen::VectorXd& guess);

// Eigenvalues sorted by descending real part, ties by ascending imaginary part.
SpectrumReport jacobian_spectrum(const DynamicalSystem& sys,
                                 const Eigen::VectorXd& x_star,
                                 int nonresonance_order = 10);

// True iff no λ_i = Σ c_k λ_k with c_k ≥ 0 integers and 2 ≤ Σ c_k ≤ max_order
// holds within `tolerance`.
bool check_nonresonance(const Eigen::VectorXcd& eigenvalues, int max_order,
                        double tolerance = 1e-8);

// Smallest |λ_i - Σ c_k λ_k| over admissible c with Σ c_k = order exactly.
double resonance_gap(const Eigen::VectorXcd& eigenvalues, int index, int order);

// u̇_l = F_l(lower + width ∘ u) / width_l. Polynomial systems stay polynomial.
DynamicalSystem pull_back_field(const DynamicalSystem& sys, const BoxMap& box);

// Spectrum of the pulled-back field at the mapped fixed point, with left
// eigenvectors rescaled by the box widths so that φ(x) = φ̃(u) keeps the
// gradient normalization of the original coordinates.
SpectrumReport spectrum_in_box(const SpectrumReport& spec, const BoxMap& box);

}  // namespace koopman
