#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <vector>

#include "koopman/polynomial.hpp"
#include "koopman/system.hpp"

namespace koopman {

// Planar periodic orbit that is star-shaped about the origin, parametrized by
// the polar angle θ of its points. Annulus coordinates (θ, y) place
// x = x^γ(θ) + (y + Δ) e_r(θ) with e_r(θ) = ‖e_r‖ (cos θ, sin θ).
class LimitCycleParam {
 public:
  // `points[j]` is the orbit point at polar angle 2πj/K, K = points.size().
  LimitCycleParam(double period, int orientation,
                  std::vector<Eigen::Vector2d> points, double delta,
                  double e_r_norm);

  double period() const { return period_; }
  // +1 when θ increases along the flow, −1 otherwise.
  int orientation() const { return orientation_; }
  int sample_count() const { return static_cast<int>(points_.size()); }
  double sample_theta(int j) const;
  const std::vector<Eigen::Vector2d>& samples() const { return points_; }
  double delta() const { return delta_; }
  double e_r_norm() const { return e_r_norm_; }
  double max_radius() const;

  std::optional<Complex> floquet_exponent() const { return floquet_; }
  void set_floquet_exponent(Complex lambda) { floquet_ = lambda; }

  // ‖x^γ(θ)‖ and its θ-derivative from a periodic cubic spline.
  double radius(double theta) const;
  double radius_derivative(double theta) const;

  Eigen::Vector2d cycle_point(double theta) const;
  Eigen::Vector2d point(double theta, double y) const;
  // Inverse of point(): θ ∈ [0, 2π) and the annulus coordinate y.
  Eigen::Vector2d to_annulus(const Eigen::Vector2d& x) const;

  LimitCycleParam with_annulus(double delta, double e_r_norm) const;

 private:
  struct Spline;

  double period_;
  int orientation_;
  std::vector<Eigen::Vector2d> points_;
  double delta_;
  double e_r_norm_;
  std::optional<Complex> floquet_;
  std::shared_ptr<const Spline> spline_;
};

struct LimitCycleOptions {
  double delta = 0.0;
  // Defaults to twice the largest cycle radius.
  std::optional<double> e_r_norm;
  int samples = 1024;
  double max_time = 1e4;
  double closure_tolerance = 1e-8;
};

// Locates the attracting periodic orbit reached from `guess` through returns
// to the section {x₂ = 0, x₁ > 0}.
LimitCycleParam find_limit_cycle(const DynamicalSystem& sys,
                                 const Eigen::VectorXd& guess,
                                 const LimitCycleOptions& options = {});

struct PolarVelocity {
  double theta;  // F_θ
  double y;      // F_y
};

PolarVelocity polar_dynamics(const DynamicalSystem& sys,
                             const LimitCycleParam& lc, double theta, double y);

struct FloquetAnalysis {
  Eigen::MatrixXd monodromy;
  double trivial_multiplier;
  double trivial_exponent;
  // Nontrivial exponents; for planar orbits the single one comes from the
  // Liouville identity det Ψ(T) = exp ∫ tr J dt.
  std::vector<Complex> exponents;
};

inline constexpr double kTrivialMultiplierTolerance = 1e-4;

FloquetAnalysis floquet_analysis(const DynamicalSystem& sys,
                                 const LimitCycleParam& lc);

// Nontrivial exponents; the first one is stored on `lc`.
std::vector<Complex> floquet_exponents(const DynamicalSystem& sys,
                                       LimitCycleParam& lc);

}  // namespace koopman
