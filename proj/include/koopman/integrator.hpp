#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "koopman/system.hpp"

namespace koopman {

struct FlowOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double escape_radius = 1e8;
  double initial_step = 1e-3;
};

// ẏ = f(t, y) on a flat state vector.
using OdeRhs = std::function<void(const std::vector<double>& y,
                                  std::vector<double>& dydt, double t)>;

// Adaptive Dormand–Prince 4(5) stepping with dense output. The escape test
// applies to the first `escape_dim` state entries.
class DenseFlow {
 public:
  DenseFlow(OdeRhs rhs, std::vector<double> y0, int escape_dim,
            const FlowOptions& options = {}, double direction = 1.0);
  // `sys` must outlive the flow.
  DenseFlow(const DynamicalSystem& sys, const Eigen::VectorXd& x0,
            const FlowOptions& options = {}, double direction = 1.0);
  ~DenseFlow();
  DenseFlow(DenseFlow&&) noexcept;

  // Advances one accepted step; throws EscapeError or NonFiniteError.
  void step();
  double time() const;
  double previous_time() const;
  const std::vector<double>& state() const;
  // Valid for t between previous_time() and time().
  std::vector<double> interpolate(double t) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// State at time t (t may be negative for backward integration).
Eigen::VectorXd integrate_flow(const DynamicalSystem& sys,
                               const Eigen::VectorXd& x0, double t,
                               const FlowOptions& options = {});

// States at every requested time; times must be nonnegative and ascending.
std::vector<Eigen::VectorXd> integrate_to_times(const DynamicalSystem& sys,
                                                const Eigen::VectorXd& x0,
                                                std::span<const double> times,
                                                const FlowOptions& options = {});

}  // namespace koopman
