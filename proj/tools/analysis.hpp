#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "koopman/lc_solver.hpp"
#include "koopman/limit_cycle.hpp"
#include "koopman/stability.hpp"
#include "system_file.hpp"

namespace koopman::cli {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr double kSemigroupThreshold = 1e-3;
// Fresh-grid PDE residual may exceed the solver residual by this factor.
inline constexpr double kFreshResidualFactor = 10.0;

// A library failure tagged with the pipeline stage that raised it.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Either a builtin name or the text of a system-definition file.
struct SystemSource {
  std::string builtin;
  std::string text;

  DynamicalSystem system() const;
  // Parsed definition; nullopt for builtins.
  std::optional<SystemDefinition> definition() const;
  Json to_json() const;
  static SystemSource from_json(const Json& j);
};

struct FpConfig {
  std::string method = "taylor";
  int order = 20;
  int degree = 20;
  std::optional<std::vector<double>> box;  // lower/upper pairs per axis
  std::optional<std::vector<double>> guess;
  std::optional<int> p;
  // Lattice points per axis; 0 picks a dimension-dependent default.
  int resolution = 0;
  double step = kDecreaseStep;
  double horizon = 1.0;
  int samples = 100;
  int soundness_samples = 100;
  std::uint64_t seed = 1;

  // File parameters first, then anything already set explicitly wins.
  void apply(const SystemDefinition& def);
  Json to_json() const;
  static FpConfig from_json(const Json& j);
};

struct LcConfig {
  int n_bar = 40;
  int degree = 20;
  int s_prime = 3;
  int stride = 1;
  double delta = 0.0;
  std::optional<double> e_r_norm;
  double weight = 1.0;
  std::optional<std::vector<double>> guess;
  int resolution = 101;
  double step = kDecreaseStep;
  // Semigroup horizon; the period when unset.
  std::optional<double> horizon;
  int samples = 100;
  std::uint64_t seed = 1;

  void apply(const SystemDefinition& def);
  Json to_json() const;
  static LcConfig from_json(const Json& j);
};

// Everything needed to re-evaluate a completed analysis.
struct Analysis {
  Json report;
  std::shared_ptr<const DynamicalSystem> system;
  std::vector<EigenfunctionView> eigenfunctions;
  LyapunovFunction lyapunov;
  GridSpec region = GridSpec::square(1.0, 2);
  std::optional<BasinEstimate> basin;
  // Eigenfunction checks sample within this distance of the fixed point.
  double trusted_radius = INFINITY;
  std::optional<LimitCycleParam> cycle;
  std::shared_ptr<const FourierBernsteinEigenfunction> lc_eigenfunction;
  bool certified = false;
};

Analysis analyze_fixed_point(const SystemSource& source, const FpConfig& config);
Analysis analyze_limit_cycle(const SystemSource& source, const LcConfig& config);

// Re-runs the analysis recorded in a report's "input" section.
Analysis rerun(const Json& report);

// Header x1,x2,re_phi,im_phi,abs_phi,lyapunov,decreasing; x2 varies fastest.
// φ is the first eigenfunction. Points where it is invalid print nan.
void write_grid_csv(std::ostream& out, const Analysis& analysis, int resolution);

// theta,y,x1,x2,log_abs_phi over the annulus.
void write_annulus_csv(std::ostream& out, const Analysis& analysis, int resolution);

// Fresh verification pass with its own sample count and seed.
Json verify(const Analysis& analysis, int samples, std::uint64_t seed);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace koopman::cli
