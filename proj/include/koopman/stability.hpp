#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "koopman/bernstein_fp.hpp"
#include "koopman/lc_solver.hpp"
#include "koopman/system.hpp"
#include "koopman/taylor.hpp"

namespace koopman {

// Type-erased eigenfunction: a value callback and a validity predicate.
struct EigenfunctionView {
  std::string method;
  Complex eigenvalue;
  std::function<Complex(std::span<const double>)> value;
  // Points where `value` may be trusted; everywhere when empty.
  std::function<bool(std::span<const double>)> valid;

  bool is_valid(std::span<const double> x) const { return !valid || valid(x); }
};

EigenfunctionView make_view(TaylorEigenfunction ef);
// Valid inside the box.
EigenfunctionView make_view(BernsteinEigenfunction ef);
// Valid on the annulus.
EigenfunctionView make_view(FourierBernsteinEigenfunction ef);

// V(x) = (Σ |φ_i(x)|^p)^{1/p}.
struct LyapunovFunction {
  std::vector<EigenfunctionView> members;
  int p = 2;
  // Largest Re λ over the members.
  double dominant_rate = 0.0;
};

// p defaults to 2. A lone conjugate pair keeps only its first member with
// p = 1, so V = |φ_λ₁| = |φ_λ₂|.
LyapunovFunction make_lyapunov(std::vector<EigenfunctionView> members,
                               std::optional<int> p = std::nullopt);

// value is NaN when any member is invalid at the point.
struct LyapunovSample {
  double value = 0.0;
  bool valid = true;
};

LyapunovSample lyapunov_value(const LyapunovFunction& v, std::span<const double> x);

// Inclusive rectangular lattice; axis 0 varies slowest.
struct GridSpec {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<int> counts;

  GridSpec(Eigen::VectorXd lower, Eigen::VectorXd upper, std::vector<int> counts);
  static GridSpec square(double half_width, int count, int dimension = 2);

  int dimension() const { return static_cast<int>(counts.size()); }
  Eigen::Index size() const;
  Eigen::VectorXd point(Eigen::Index flat) const;
  std::vector<int> index(Eigen::Index flat) const;
  Eigen::Index flat(std::span<const int> index) const;
  double spacing(int axis) const;
  double cell_volume() const;
  // Nearest lattice point; nullopt outside the lattice bounds.
  std::optional<Eigen::Index> nearest(std::span<const double> x) const;
  // Flat indices of the 2N axis neighbours.
  std::vector<Eigen::Index> neighbours(Eigen::Index flat) const;
  bool on_boundary(Eigen::Index flat) const;
};

inline constexpr double kDecreaseStep = 1e-3;

struct DecreaseRegion {
  GridSpec grid;
  // V at each lattice point, +∞ where invalid.
  std::vector<double> value;
  // V after the flow step δ, +∞ on escape or invalid image.
  std::vector<double> advanced;
  std::vector<std::uint8_t> decreasing;
  double delta = kDecreaseStep;
};

// Marks V(φ^δ x) < V(x). Lattice points where V vanishes count as decreasing.
DecreaseRegion decrease_region(const LyapunovFunction& v, const DynamicalSystem& sys,
                               const GridSpec& grid, double delta = kDecreaseStep);

enum class CellFlag : std::uint8_t { outside = 0, inside = 1, boundary = 2 };

struct BasinEstimate {
  // The estimate is the component of {V < level} holding the seed.
  double level = 0.0;
  GridSpec grid;
  std::vector<CellFlag> flags;
  Eigen::Index seed = 0;
  bool certified = false;
  // Min of (V(x) − V(φ^δ x))/δ over the estimate, excluding V = 0.
  double decrease_margin = 0.0;

  double volume() const;
  // Lattice membership of a continuous point: nearest cell inside and V < level.
  bool contains(const LyapunovFunction& v, std::span<const double> x) const;
};

// Largest level whose seed component avoids non-decreasing points, their
// axis neighbours (one-cell margin) and the lattice boundary, by minimax
// flooding from the lattice minimum of V.
BasinEstimate basin_estimate(const DecreaseRegion& region);
BasinEstimate basin_estimate(const LyapunovFunction& v, const DynamicalSystem& sys,
                             const GridSpec& grid, double delta = kDecreaseStep);

struct SoundnessReport {
  int samples = 0;
  int failures = 0;
  double horizon = 0.0;
  std::vector<Eigen::VectorXd> failed_points;
};

// Uniform samples from the estimate must reach `target` (distance < 1e-4)
// by t = 50/|dominant rate|.
SoundnessReport check_basin_soundness(const LyapunovFunction& v, const DynamicalSystem& sys,
                                      const BasinEstimate& basin, const Eigen::VectorXd& target,
                                      int samples, std::uint64_t seed);

struct SemigroupReport {
  double max_error = 0.0;
  int checked = 0;
  int skipped = 0;
};

inline constexpr double kSemigroupFloor = 1e-9;

// max |φ(φᵗx) − e^{λt}φ(x)| / max(|φ(x)|, floor) over `checkpoints` uniform
// times in (0, horizon]. Points whose trajectory leaves the valid region are
// skipped.
SemigroupReport verify_semigroup(const EigenfunctionView& ef, const DynamicalSystem& sys,
                                 std::span<const Eigen::VectorXd> points, double horizon,
                                 int checkpoints = 10, double floor = kSemigroupFloor);

struct EnvelopeReport {
  bool passed = true;
  // Max of V(φᵗx) / (e^{rt} V(x)).
  double worst_ratio = 0.0;
  int checked = 0;
  int skipped = 0;
};

inline constexpr double kEnvelopeSlack = 1e-3;

// V(φᵗx) ≤ (1 + 1e-3) e^{rt} V(x) with r the dominant rate unless overridden.
EnvelopeReport verify_decay_envelope(const LyapunovFunction& v, const DynamicalSystem& sys,
                                     std::span<const Eigen::VectorXd> points, double horizon,
                                     std::optional<double> rate = std::nullopt,
                                     int checkpoints = 10);

}  // namespace koopman
