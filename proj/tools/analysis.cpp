#include "analysis.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <random>
#include <set>

#include "koopman/bernstein_fp.hpp"
#include "koopman/builtin_systems.hpp"
#include "koopman/errors.hpp"
#include "koopman/taylor.hpp"

namespace koopman::cli {
namespace {

constexpr double kDefaultHalfWidth = 3.0;
constexpr int kResidualLatticeCap = 41;
constexpr int kFreshThetaNodes = 401;
constexpr int kFreshYNodes = 15;
constexpr double kFreshStep = 1e-5;
constexpr std::size_t kFailedPointCap = 20;
// Taylor checks use the ball where the estimated tail is this fraction of the
// certification threshold, leaving room for the derivative in the residual.
constexpr double kTaylorTailFraction = 0.1;
constexpr int kMinRadiusOrder = 4;

const std::set<std::string> kKnownKeys = {
    "method", "order", "degree", "p", "resolution", "step", "horizon", "samples", "soundness_samples",
    "seed", "nbar", "sprime", "stride", "delta", "er", "weight"};

class Clock {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }
  double total() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
  std::chrono::steady_clock::time_point last_ = start_;
};

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw StageError(name, e.what());
  }
}

Json complex_json(Complex z) { return Json{{"re", z.real()}, {"im", z.imag()}}; }

Json vector_json(const Eigen::VectorXd& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Json nullable(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

int parse_int(const std::map<std::string, std::string>& params, const std::string& key, int fallback) {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  int v = 0;
  const auto [end, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
  if (ec != std::errc() || end != it->second.data() + it->second.size()) {
    throw Error("parameter '" + key + "' must be an integer, got '" + it->second + "'");
  }
  return v;
}

double parse_real(const std::map<std::string, std::string>& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  double v = 0.0;
  const auto [end, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
  if (ec != std::errc() || end != it->second.data() + it->second.size() || !std::isfinite(v)) {
    throw Error("parameter '" + key + "' must be a finite number, got '" + it->second + "'");
  }
  return v;
}

void check_keys(const SystemDefinition& def) {
  for (const auto& [key, value] : def.parameters) {
    if (!kKnownKeys.count(key)) throw Error("unknown parameter '" + key + "'");
  }
}

std::vector<double> box_vector(const SystemDefinition& def) {
  std::vector<double> out;
  for (int k = 0; k < def.dimension; ++k) {
    out.push_back((*def.box_lower)(k));
    out.push_back((*def.box_upper)(k));
  }
  return out;
}

// Lattice points of the region in random order, jittered within their cell.
// Only points with ‖x − center‖ ≤ radius are drawn.
struct Ball {
  Eigen::VectorXd center;
  double radius = INFINITY;
  bool contains(const Eigen::VectorXd& x) const { return (x - center).norm() <= radius; }
};

std::vector<Eigen::VectorXd> sample_points(const GridSpec& grid, const std::optional<BasinEstimate>& basin,
                                           int count, std::uint64_t seed, const Ball& ball) {
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> pool;
  if (basin && basin->certified) {
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      if (basin->flags[i] == CellFlag::inside && ball.contains(grid.point(i))) pool.push_back(i);
    }
  }
  std::vector<Eigen::VectorXd> pts;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int max_draws = 1000 * std::max(count, 1);
  for (int draw = 0; static_cast<int>(pts.size()) < count && draw < max_draws; ++draw) {
    Eigen::VectorXd x(grid.dimension());
    if (pool.empty()) {
      for (int a = 0; a < grid.dimension(); ++a) x(a) = grid.lower(a) + unit(rng) * (grid.upper(a) - grid.lower(a));
      if (!ball.contains(x)) continue;
    } else {
      x = grid.point(pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)]);
      for (int a = 0; a < grid.dimension(); ++a) {
        x(a) = std::clamp(x(a) + (unit(rng) - 0.5) * grid.spacing(a), grid.lower(a), grid.upper(a));
      }
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

Json semigroup_json(const std::vector<EigenfunctionView>& efs, const DynamicalSystem& sys,
                    const std::vector<Eigen::VectorXd>& pts, double horizon) {
  double worst = 0.0;
  int checked = 0, skipped = 0;
  for (const auto& ef : efs) {
    const SemigroupReport rep = verify_semigroup(ef, sys, pts, horizon);
    worst = std::max(worst, rep.max_error);
    checked += rep.checked;
    skipped += rep.skipped;
  }
  return Json{{"max_error", worst},   {"checked", checked},
              {"skipped", skipped},   {"horizon", horizon},
              {"threshold", kSemigroupThreshold}, {"passed", checked > 0 && worst < kSemigroupThreshold}};
}

Json envelope_json(const LyapunovFunction& v, const DynamicalSystem& sys, const std::vector<Eigen::VectorXd>& pts,
                   double horizon) {
  const EnvelopeReport rep = verify_decay_envelope(v, sys, pts, horizon);
  return Json{{"passed", rep.passed && rep.checked > 0},
              {"worst_ratio", rep.worst_ratio},
              {"checked", rep.checked},
              {"skipped", rep.skipped},
              {"rate", v.dominant_rate}};
}

Eigen::VectorXd target_of(const Analysis& a) {
  const auto fp = a.report["fixed_point"].get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(fp.data(), static_cast<Eigen::Index>(fp.size()));
}

Json soundness_json(const Analysis& a, int samples, std::uint64_t seed) {
  if (!a.basin || !a.basin->certified || !(a.lyapunov.dominant_rate < 0) || samples <= 0) return nullptr;
  const SoundnessReport rep = check_basin_soundness(a.lyapunov, *a.system, *a.basin, target_of(a), samples, seed);
  Json failed = Json::array();
  for (std::size_t i = 0; i < rep.failed_points.size() && i < kFailedPointCap; ++i) {
    failed.push_back(vector_json(rep.failed_points[i]));
  }
  return Json{{"samples", rep.samples},
              {"failures", rep.failures},
              {"horizon", rep.horizon},
              {"passed", rep.failures == 0 && rep.samples > 0},
              {"failed_points", failed}};
}

// max |F·∇φ − λφ| by central differences on a grid that avoids the
// collocation nodes, with the largest |φ| seen.
std::pair<double, double> fresh_lc_residual(const DynamicalSystem& sys, const FourierBernsteinEigenfunction& ef) {
  const double h = kFreshStep;
  double worst = 0.0, scale = 0.0;
  for (int i = 0; i < kFreshThetaNodes; ++i) {
    for (int j = 1; j <= kFreshYNodes; ++j) {
      const double t = 2 * M_PI * (i + 0.37) / kFreshThetaNodes, y = j / (kFreshYNodes + 1.0);
      const PolarVelocity v = polar_dynamics(sys, ef.lc, t, y);
      const Complex phi = eval_lc_polar(ef, t, y);
      const Complex py = (eval_lc_polar(ef, t, y + h) - eval_lc_polar(ef, t, y - h)) / (2 * h);
      const Complex pt = (eval_lc_polar(ef, t + h, y) - eval_lc_polar(ef, t - h, y)) / (2 * h);
      worst = std::max(worst, std::abs(v.y * py + v.theta * pt - ef.eigenvalue * phi));
      scale = std::max(scale, std::abs(phi));
    }
  }
  return {worst, scale};
}

Json fresh_json(const DynamicalSystem& sys, const FourierBernsteinEigenfunction& ef) {
  const auto [worst, scale] = fresh_lc_residual(sys, ef);
  const double bound = kFreshResidualFactor * ef.lsq_residual * scale;
  return Json{{"max", worst}, {"scale", scale}, {"bound", bound}, {"passed", worst <= bound}};
}

std::vector<Eigen::VectorXd> annulus_points(const LimitCycleParam& lc, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ut(0.0, 2 * M_PI), uy(0.05, 1.0);
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < count; ++i) {
    const double t = ut(rng);
    pts.push_back(lc.point(t, uy(rng)));
  }
  return pts;
}

GridSpec annulus_region(const LimitCycleParam& lc, int resolution) {
  Eigen::Vector2d lo = Eigen::Vector2d::Constant(INFINITY), hi = -lo;
  const double y_min = std::min(0.0, -lc.delta());
  for (int i = 0; i < 512; ++i) {
    const double t = 2 * M_PI * i / 512;
    for (double y : {y_min, 1.0}) {
      const Eigen::Vector2d x = lc.point(t, y);
      lo = lo.cwiseMin(x);
      hi = hi.cwiseMax(x);
    }
  }
  const Eigen::Vector2d pad = 0.05 * (hi - lo);
  return GridSpec(lo - pad, hi + pad, {resolution, resolution});
}

int default_resolution(int dimension) { return dimension <= 2 ? 101 : dimension == 3 ? 21 : 11; }

}  // namespace

DynamicalSystem SystemSource::system() const {
  if (!builtin.empty()) return builtin::by_name(builtin);
  return parse_system(text).system("file");
}

std::optional<SystemDefinition> SystemSource::definition() const {
  if (!builtin.empty()) return std::nullopt;
  return parse_system(text);
}

Json SystemSource::to_json() const {
  return builtin.empty() ? Json{{"text", text}} : Json{{"builtin", builtin}};
}

SystemSource SystemSource::from_json(const Json& j) {
  SystemSource s;
  if (j.contains("builtin")) s.builtin = j.at("builtin").get<std::string>();
  if (j.contains("text")) s.text = j.at("text").get<std::string>();
  return s;
}

void FpConfig::apply(const SystemDefinition& def) {
  check_keys(def);
  const auto& p_ = def.parameters;
  if (p_.count("method")) method = p_.at("method");
  order = parse_int(p_, "order", order);
  degree = parse_int(p_, "degree", degree);
  if (p_.count("p")) p = parse_int(p_, "p", 2);
  resolution = parse_int(p_, "resolution", resolution);
  step = parse_real(p_, "step", step);
  horizon = parse_real(p_, "horizon", horizon);
  samples = parse_int(p_, "samples", samples);
  soundness_samples = parse_int(p_, "soundness_samples", soundness_samples);
  seed = static_cast<std::uint64_t>(parse_int(p_, "seed", static_cast<int>(seed)));
  if (def.box_lower) box = box_vector(def);
  if (def.guess) guess = std::vector<double>(def.guess->data(), def.guess->data() + def.guess->size());
}

Json FpConfig::to_json() const {
  return Json{{"method", method},
              {"order", order},
              {"degree", degree},
              {"box", box ? Json(*box) : Json(nullptr)},
              {"guess", guess ? Json(*guess) : Json(nullptr)},
              {"p", p ? Json(*p) : Json(nullptr)},
              {"resolution", resolution},
              {"step", step},
              {"horizon", horizon},
              {"samples", samples},
              {"soundness_samples", soundness_samples},
              {"seed", seed}};
}

FpConfig FpConfig::from_json(const Json& j) {
  FpConfig c;
  c.method = j.at("method").get<std::string>();
  c.order = j.at("order").get<int>();
  c.degree = j.at("degree").get<int>();
  if (!j.at("box").is_null()) c.box = j.at("box").get<std::vector<double>>();
  if (!j.at("guess").is_null()) c.guess = j.at("guess").get<std::vector<double>>();
  if (!j.at("p").is_null()) c.p = j.at("p").get<int>();
  c.resolution = j.at("resolution").get<int>();
  c.step = j.at("step").get<double>();
  c.horizon = j.at("horizon").get<double>();
  c.samples = j.at("samples").get<int>();
  c.soundness_samples = j.at("soundness_samples").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

void LcConfig::apply(const SystemDefinition& def) {
  check_keys(def);
  const auto& p_ = def.parameters;
  n_bar = parse_int(p_, "nbar", n_bar);
  degree = parse_int(p_, "degree", degree);
  s_prime = parse_int(p_, "sprime", s_prime);
  stride = parse_int(p_, "stride", stride);
  delta = parse_real(p_, "delta", delta);
  if (p_.count("er")) e_r_norm = parse_real(p_, "er", 0.0);
  weight = parse_real(p_, "weight", weight);
  resolution = parse_int(p_, "resolution", resolution);
  step = parse_real(p_, "step", step);
  if (p_.count("horizon")) horizon = parse_real(p_, "horizon", 0.0);
  samples = parse_int(p_, "samples", samples);
  seed = static_cast<std::uint64_t>(parse_int(p_, "seed", static_cast<int>(seed)));
  if (def.guess) guess = std::vector<double>(def.guess->data(), def.guess->data() + def.guess->size());
}

Json LcConfig::to_json() const {
  return Json{{"nbar", n_bar},
              {"degree", degree},
              {"sprime", s_prime},
              {"stride", stride},
              {"delta", delta},
              {"er", e_r_norm ? Json(*e_r_norm) : Json(nullptr)},
              {"weight", weight},
              {"guess", guess ? Json(*guess) : Json(nullptr)},
              {"resolution", resolution},
              {"step", step},
              {"horizon", horizon ? Json(*horizon) : Json(nullptr)},
              {"samples", samples},
              {"seed", seed}};
}

LcConfig LcConfig::from_json(const Json& j) {
  LcConfig c;
  c.n_bar = j.at("nbar").get<int>();
  c.degree = j.at("degree").get<int>();
  c.s_prime = j.at("sprime").get<int>();
  c.stride = j.at("stride").get<int>();
  c.delta = j.at("delta").get<double>();
  if (!j.at("er").is_null()) c.e_r_norm = j.at("er").get<double>();
  c.weight = j.at("weight").get<double>();
  if (!j.at("guess").is_null()) c.guess = j.at("guess").get<std::vector<double>>();
  c.resolution = j.at("resolution").get<int>();
  c.step = j.at("step").get<double>();
  if (!j.at("horizon").is_null()) c.horizon = j.at("horizon").get<double>();
  c.samples = j.at("samples").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

Analysis analyze_fixed_point(const SystemSource& source, const FpConfig& config) {
  Clock clock;
  Json timing;
  Analysis a;
  a.system = std::make_shared<const DynamicalSystem>(stage("parse", [&] { return source.system(); }));
  const DynamicalSystem& sys = *a.system;
  const int n = sys.dimension();
  if (config.method != "taylor" && config.method != "bernstein") {
    throw StageError("config", "unknown method '" + config.method + "'");
  }
  const bool taylor = config.method == "taylor";
  if (config.guess && static_cast<int>(config.guess->size()) != n) {
    throw StageError("config", "guess needs " + std::to_string(n) + " entries");
  }
  if (config.box && static_cast<int>(config.box->size()) != 2 * n) {
    throw StageError("config", "box needs " + std::to_string(2 * n) + " entries");
  }
  const Eigen::VectorXd guess =
      config.guess ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(config.guess->data(), n)) : Eigen::VectorXd::Zero(n);

  const Eigen::VectorXd x_star = stage("fixed_point", [&] { return find_fixed_point(sys, guess); });
  const SpectrumReport spec = stage("spectrum", [&] { return jacobian_spectrum(sys, x_star, taylor ? config.order + 1 : 10); });
  timing["spectrum"] = clock.lap();

  Eigen::VectorXd lower(n), upper(n);
  for (int k = 0; k < n; ++k) {
    lower(k) = config.box ? (*config.box)[2 * k] : x_star(k) - kDefaultHalfWidth;
    upper(k) = config.box ? (*config.box)[2 * k + 1] : x_star(k) + kDefaultHalfWidth;
  }
  const BoxMap box = stage("config", [&] { return BoxMap(lower, upper); });
  const int resolution = config.resolution > 0 ? config.resolution : default_resolution(n);
  a.region = stage("config", [&] { return GridSpec(lower, upper, std::vector<int>(n, resolution)); });

  Json efs = Json::array();
  std::vector<TaylorEigenfunction> taylor_efs;
  std::vector<BernsteinEigenfunction> bern_efs;
  bool all_certified = true;
  Ball trusted_ball{x_star};
  const auto eig = spec.eigenvalues;
  for (int i = 0; i < eig.size(); ++i) {
    // The conjugate partner of an earlier eigenvalue reuses its solution.
    int partner = -1;
    for (int j = 0; j < i; ++j) {
      if (eig(i).imag() != 0.0 && std::abs(eig(i) - std::conj(eig(j))) <= 1e-12 * std::abs(eig(i))) partner = j;
    }
    Json meta{{"index", i}, {"method", config.method}, {"eigenvalue", complex_json(eig(i))}};
    if (taylor) {
      TaylorEigenfunction ef = partner >= 0 ? conjugate(taylor_efs[partner])
                                            : stage("taylor", [&] { return solve_taylor(sys, spec, i, config.order); });
      // The estimate needs a few orders to fit; below that the whole region is used.
      const double radius = config.order >= kMinRadiusOrder ? estimate_radius(ef) : NAN;
      // Geometric tail bound: order-n truncation error ~ (ρ/r)^{n+1}.
      const double trusted = std::isnan(radius)
                                 ? INFINITY
                                 : radius * std::pow(kTaylorTailFraction * kCertifyThreshold, 1.0 / (config.order + 1));
      trusted_ball.radius = std::min(trusted_ball.radius, trusted);
      const GridSpec probe(lower, upper, std::vector<int>(n, std::min(resolution, kResidualLatticeCap)));
      std::vector<Eigen::VectorXd> pts;
      for (Eigen::Index k = 0; k < probe.size(); ++k) {
        const Eigen::VectorXd x = probe.point(k);
        if ((x - x_star).norm() <= trusted) pts.push_back(x);
      }
      double scale = 0.0;
      for (const auto& x : pts) scale = std::max(scale, std::abs(eval_taylor(ef, std::span<const double>(x.data(), n))));
      const double residual =
          pts.empty() ? INFINITY : taylor_pde_residual(sys, ef, pts) / std::max(scale, 1e-300);
      const bool ok = residual < kCertifyThreshold;
      meta.update(Json{{"order", config.order},
                       {"degree", nullptr},
                       {"residual", nullable(residual)},
                       {"residual_points", pts.size()},
                       {"radius", nullable(radius)},
                       {"trusted_radius", nullable(trusted)},
                       {"certified", ok},
                       {"warnings", ef.warnings}});
      all_certified = all_certified && ok;
      a.eigenfunctions.push_back(make_view(ef));
      taylor_efs.push_back(std::move(ef));
    } else {
      BernsteinEigenfunction ef;
      if (partner >= 0) {
        ef = bern_efs[partner];
        ef.eigenvalue = std::conj(ef.eigenvalue);
        ef.coeffs.coeffs() = ef.coeffs.coeffs().conjugate();
      } else {
        ef = stage("bernstein", [&] { return compute_bernstein_eigenfunction(sys, spec, i, box, config.degree); });
      }
      meta.update(Json{{"order", nullptr},
                       {"degree", config.degree},
                       {"residual", ef.lsq_residual},
                       {"rank", ef.rank},
                       {"radius", nullptr},
                       {"box", Json{{"lower", vector_json(lower)}, {"upper", vector_json(upper)}}},
                       {"certified", ef.certified}});
      all_certified = all_certified && ef.certified;
      a.eigenfunctions.push_back(make_view(ef));
      bern_efs.push_back(std::move(ef));
    }
    efs.push_back(std::move(meta));
  }
  timing["eigenfunctions"] = clock.lap();

  a.lyapunov = stage("lyapunov", [&] { return make_lyapunov(a.eigenfunctions, config.p); });
  a.basin = stage("basin", [&] { return basin_estimate(a.lyapunov, sys, a.region, config.step); });
  timing["basin"] = clock.lap();

  Json& r = a.report;
  r["schema"] = kSchemaVersion;
  r["command"] = "analyze-fp";
  r["input"] = Json{{"source", source.to_json()}, {"config", config.to_json()}};
  Json components = nullptr;
  if (sys.is_polynomial()) {
    components = Json::array();
    for (const auto& c : sys.components()) components.push_back(to_string(c));
  }
  r["system"] = Json{{"name", sys.name()}, {"dimension", n}, {"components", components}};
  r["fixed_point"] = vector_json(x_star);
  Json eigs = Json::array(), left = Json::array();
  for (int i = 0; i < eig.size(); ++i) {
    eigs.push_back(complex_json(eig(i)));
    Json col = Json::array();
    for (int k = 0; k < n; ++k) col.push_back(complex_json(spec.left_eigenvectors(k, i)));
    left.push_back(std::move(col));
  }
  r["spectrum"] = Json{{"eigenvalues", eigs},
                       {"left_eigenvectors", left},
                       {"nonresonant", spec.nonresonant},
                       {"nonresonance_order", spec.nonresonance_order}};
  r["eigenfunctions"] = efs;
  r["lyapunov"] = Json{{"p", a.lyapunov.p},
                       {"members", a.lyapunov.members.size()},
                       {"dominant_rate", a.lyapunov.dominant_rate},
                       {"level", nullable(a.basin->level)},
                       {"decrease_margin", a.basin->decrease_margin},
                       {"certified", a.basin->certified},
                       {"volume", a.basin->volume()},
                       {"resolution", resolution},
                       {"step", config.step}};

  const auto pts = sample_points(a.region, a.basin, config.samples, config.seed, trusted_ball);
  a.trusted_radius = trusted_ball.radius;
  Json ver;
  ver["semigroup"] = stage("verify", [&] { return semigroup_json(a.eigenfunctions, sys, pts, config.horizon); });
  ver["envelope"] = stage("verify", [&] { return envelope_json(a.lyapunov, sys, pts, config.horizon); });
  ver["soundness"] = stage("verify", [&] { return soundness_json(a, config.soundness_samples, config.seed); });
  ver["fresh_residual"] = nullptr;
  r["verification"] = ver;
  timing["verification"] = clock.lap();

  a.certified = all_certified && a.basin->certified && ver["semigroup"]["passed"].get<bool>() &&
                ver["envelope"]["passed"].get<bool>() && !ver["soundness"].is_null() &&
                ver["soundness"]["passed"].get<bool>();
  r["certified"] = a.certified;
  timing["total"] = clock.total();
  r["timing"] = timing;
  return a;
}

Analysis analyze_limit_cycle(const SystemSource& source, const LcConfig& config) {
  Clock clock;
  Json timing;
  Analysis a;
  a.system = std::make_shared<const DynamicalSystem>(stage("parse", [&] { return source.system(); }));
  const DynamicalSystem& sys = *a.system;
  if (sys.dimension() != 2) throw StageError("config", "limit-cycle analysis needs a planar system");
  Eigen::Vector2d guess(1.5, 0.2);
  if (config.guess) {
    if (config.guess->size() != 2) throw StageError("config", "guess needs 2 entries");
    guess = Eigen::Vector2d((*config.guess)[0], (*config.guess)[1]);
  }
  LimitCycleOptions lco;
  lco.delta = config.delta;
  lco.e_r_norm = config.e_r_norm;
  LimitCycleParam lc = stage("limit_cycle", [&] { return find_limit_cycle(sys, guess, lco); });
  const FloquetAnalysis floq = stage("floquet", [&] { return floquet_analysis(sys, lc); });
  const std::vector<Complex> exps = stage("floquet", [&] { return floquet_exponents(sys, lc); });
  timing["limit_cycle"] = clock.lap();

  LcOptions opts;
  opts.n_bar = config.n_bar;
  opts.degree = config.degree;
  opts.s_prime = config.s_prime;
  opts.harmonic_stride = config.stride;
  opts.constraint_weight = config.weight;
  auto ef = std::make_shared<const FourierBernsteinEigenfunction>(
      stage("fourier_bernstein", [&] { return compute_lc_eigenfunction(sys, lc, opts); }));
  timing["eigenfunction"] = clock.lap();
  a.cycle = lc;
  a.lc_eigenfunction = ef;
  a.eigenfunctions.push_back(make_view(*ef));
  a.lyapunov = make_lyapunov(a.eigenfunctions);
  a.region = annulus_region(lc, config.resolution);

  Json& r = a.report;
  r["schema"] = kSchemaVersion;
  r["command"] = "analyze-lc";
  r["input"] = Json{{"source", source.to_json()}, {"config", config.to_json()}};
  Json components = nullptr;
  if (sys.is_polynomial()) {
    components = Json::array();
    for (const auto& c : sys.components()) components.push_back(to_string(c));
  }
  r["system"] = Json{{"name", sys.name()}, {"dimension", 2}, {"components", components}};
  Json ex = Json::array();
  for (Complex z : exps) ex.push_back(complex_json(z));
  r["limit_cycle"] = Json{{"period", lc.period()},
                          {"orientation", lc.orientation()},
                          {"max_radius", lc.max_radius()},
                          {"delta", lc.delta()},
                          {"e_r_norm", lc.e_r_norm()},
                          {"trivial_multiplier", floq.trivial_multiplier},
                          {"exponents", ex}};
  r["eigenfunctions"] = Json::array({Json{{"index", 0},
                                          {"method", "fourier-bernstein"},
                                          {"eigenvalue", complex_json(ef->eigenvalue)},
                                          {"nbar", config.n_bar},
                                          {"degree", config.degree},
                                          {"sprime", config.s_prime},
                                          {"stride", config.stride},
                                          {"residual", ef->lsq_residual},
                                          {"rank", ef->rank},
                                          {"radius", nullptr},
                                          {"certified", ef->certified}}});
  r["lyapunov"] = nullptr;

  const double horizon = config.horizon.value_or(lc.period());
  const auto pts = annulus_points(lc, config.samples, config.seed);
  Json ver;
  ver["semigroup"] = stage("verify", [&] { return semigroup_json(a.eigenfunctions, sys, pts, horizon); });
  ver["envelope"] = nullptr;
  ver["soundness"] = nullptr;
  ver["fresh_residual"] = stage("verify", [&] { return fresh_json(sys, *ef); });
  r["verification"] = ver;
  timing["verification"] = clock.lap();

  a.certified = ef->certified && ver["semigroup"]["passed"].get<bool>() && ver["fresh_residual"]["passed"].get<bool>();
  r["certified"] = a.certified;
  timing["total"] = clock.total();
  r["timing"] = timing;
  return a;
}

Analysis rerun(const Json& report) {
  if (!report.contains("schema") || report.at("schema").get<int>() != kSchemaVersion) {
    throw StageError("report", "unsupported report schema");
  }
  const SystemSource source = SystemSource::from_json(report.at("input").at("source"));
  const std::string cmd = report.at("command").get<std::string>();
  if (cmd == "analyze-fp") return analyze_fixed_point(source, FpConfig::from_json(report.at("input").at("config")));
  if (cmd == "analyze-lc") return analyze_limit_cycle(source, LcConfig::from_json(report.at("input").at("config")));
  throw StageError("report", "unknown command '" + cmd + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void write_grid_csv(std::ostream& out, const Analysis& a, int resolution) {
  if (a.system->dimension() != 2) throw StageError("emit_grid", "grid output needs a planar system");
  const GridSpec grid(a.region.lower, a.region.upper, {resolution, resolution});
  const double step = a.report["lyapunov"].is_object() ? a.report["lyapunov"]["step"].get<double>()
                                                       : a.report["input"]["config"]["step"].get<double>();
  const DecreaseRegion region = stage("emit_grid", [&] { return decrease_region(a.lyapunov, *a.system, grid, step); });
  const EigenfunctionView& phi = a.eigenfunctions.front();
  const std::string nan = format_double(NAN);
  out << "x1,x2,re_phi,im_phi,abs_phi,lyapunov,decreasing\n";
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const Eigen::VectorXd x = grid.point(i);
    const std::span<const double> xs(x.data(), 2);
    out << format_double(x(0)) << ',' << format_double(x(1)) << ',';
    if (phi.is_valid(xs)) {
      const Complex z = phi.value(xs);
      out << format_double(z.real()) << ',' << format_double(z.imag()) << ',' << format_double(std::abs(z));
    } else {
      out << nan << ',' << nan << ',' << nan;
    }
    const LyapunovSample v = lyapunov_value(a.lyapunov, xs);
    out << ',' << (v.valid ? format_double(v.value) : nan) << ',' << (region.decreasing[i] ? 1 : 0) << '\n';
  }
}

void write_annulus_csv(std::ostream& out, const Analysis& a, int resolution) {
  if (!a.lc_eigenfunction) throw StageError("emit_grid", "annulus output needs a limit-cycle analysis");
  const auto& ef = *a.lc_eigenfunction;
  const double y_min = std::min(0.0, -ef.lc.delta());
  out << "theta,y,x1,x2,log_abs_phi\n";
  for (int i = 0; i < resolution; ++i) {
    const double t = 2 * M_PI * i / resolution;
    for (int j = 0; j < resolution; ++j) {
      const double y = y_min + (1.0 - y_min) * j / (resolution - 1);
      const Eigen::Vector2d x = ef.lc.point(t, y);
      out << format_double(t) << ',' << format_double(y) << ',' << format_double(x(0)) << ',' << format_double(x(1))
          << ',' << format_double(std::log(std::abs(eval_lc_polar(ef, t, y)))) << '\n';
    }
  }
}

Json verify(const Analysis& a, int samples, std::uint64_t seed) {
  Json out{{"schema", kSchemaVersion}, {"command", "verify"}, {"samples", samples}, {"seed", seed}};
  const Json& cfg = a.report["input"]["config"];
  if (a.cycle) {
    const double horizon = cfg["horizon"].is_null() ? a.cycle->period() : cfg["horizon"].get<double>();
    out["semigroup"] = semigroup_json(a.eigenfunctions, *a.system, annulus_points(*a.cycle, samples, seed), horizon);
    out["fresh_residual"] = fresh_json(*a.system, *a.lc_eigenfunction);
    out["passed"] = out["semigroup"]["passed"].get<bool>() && out["fresh_residual"]["passed"].get<bool>();
  } else {
    const double horizon = cfg["horizon"].get<double>();
    const auto pts = sample_points(a.region, a.basin, samples, seed, Ball{target_of(a), a.trusted_radius});
    out["semigroup"] = semigroup_json(a.eigenfunctions, *a.system, pts, horizon);
    out["envelope"] = envelope_json(a.lyapunov, *a.system, pts, horizon);
    out["soundness"] = soundness_json(a, samples, seed);
    out["passed"] = out["semigroup"]["passed"].get<bool>() && out["envelope"]["passed"].get<bool>() &&
                    !out["soundness"].is_null() && out["soundness"]["passed"].get<bool>();
  }
  return out;
}

}  // namespace koopman::cli
