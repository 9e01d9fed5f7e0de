#include "koopman/limit_cycle.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <cmath>
#include <numbers>

#include "koopman/errors.hpp"
#include "koopman/integrator.hpp"

namespace koopman {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0) t += kTwoPi;
  return t;
}

// Periodic padding width of the spline; end effects decay geometrically.
constexpr int kPad = 32;

}  // namespace

struct LimitCycleParam::Spline {
  boost::math::interpolators::cardinal_cubic_b_spline<double> rho;
};

LimitCycleParam::LimitCycleParam(double period, int orientation,
                                 std::vector<Eigen::Vector2d> points,
                                 double delta, double e_r_norm)
    : period_(period),
      orientation_(orientation),
      points_(std::move(points)),
      delta_(delta),
      e_r_norm_(e_r_norm) {
  if (!(period_ > 0)) throw LimitCycleError("period must be positive");
  if (orientation_ != 1 && orientation_ != -1) {
    throw LimitCycleError("orientation must be +1 or -1");
  }
  if (points_.size() < 8) throw LimitCycleError("too few cycle samples");
  if (!(e_r_norm_ > 0)) throw LimitCycleError("‖e_r‖ must be positive");
  const int k = sample_count();
  std::vector<double> padded;
  padded.reserve(k + 2 * kPad + 1);
  for (int j = -kPad; j <= k + kPad; ++j) {
    padded.push_back(points_[((j % k) + k) % k].norm());
  }
  const double h = kTwoPi / k;
  spline_ = std::make_shared<Spline>(Spline{
      boost::math::interpolators::cardinal_cubic_b_spline<double>(
          padded.begin(), padded.end(), -kPad * h, h)});
}

double LimitCycleParam::sample_theta(int j) const {
  return kTwoPi * j / sample_count();
}

double LimitCycleParam::max_radius() const {
  double r = 0.0;
  for (const auto& p : points_) r = std::max(r, p.norm());
  return r;
}

double LimitCycleParam::radius(double theta) const {
  return spline_->rho(wrap_angle(theta));
}

double LimitCycleParam::radius_derivative(double theta) const {
  return spline_->rho.prime(wrap_angle(theta));
}

Eigen::Vector2d LimitCycleParam::cycle_point(double theta) const {
  return radius(theta) * Eigen::Vector2d(std::cos(theta), std::sin(theta));
}

Eigen::Vector2d LimitCycleParam::point(double theta, double y) const {
  const double r = radius(theta) + (y + delta_) * e_r_norm_;
  return r * Eigen::Vector2d(std::cos(theta), std::sin(theta));
}

Eigen::Vector2d LimitCycleParam::to_annulus(const Eigen::Vector2d& x) const {
  const double theta = wrap_angle(std::atan2(x(1), x(0)));
  return {theta, (x.norm() - radius(theta)) / e_r_norm_ - delta_};
}

LimitCycleParam LimitCycleParam::with_annulus(double delta, double e_r_norm) const {
  LimitCycleParam out(period_, orientation_, points_, delta, e_r_norm);
  out.floquet_ = floquet_;
  return out;
}

namespace {

Eigen::Vector2d to_vec2(const std::vector<double>& y) { return {y[0], y[1]}; }

// Root of g on [a, b] with g(a), g(b) of opposite sign, by bisection.
template <typename G>
double bisect(G&& g, double a, double b) {
  double ga = g(a);
  for (int it = 0; it < 200 && std::abs(b - a) > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
    const double m = 0.5 * (a + b);
    const double gm = g(m);
    if ((gm < 0) == (ga < 0)) {
      a = m;
      ga = gm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

struct Crossing {
  double time;
  double x1;
};

}  // namespace

LimitCycleParam find_limit_cycle(const DynamicalSystem& sys,
                                 const Eigen::VectorXd& guess,
                                 const LimitCycleOptions& options) {
  if (sys.dimension() != 2) throw DimensionMismatch("limit cycles require N = 2");
  if (guess.size() != 2) throw DimensionMismatch("guess must be planar");

  // Phase 1: converge onto the orbit through successive section returns.
  DenseFlow flow(sys, guess);
  int direction = 0;
  std::vector<Crossing> crossings;
  Eigen::Vector2d start;
  double period = 0.0;
  bool converged = false;
  while (!converged) {
    const double t0 = flow.time();
    const double y0 = flow.state()[1];
    flow.step();
    if (flow.time() > options.max_time) {
      throw LimitCycleError("no converged return to the section within t = " +
                            std::to_string(options.max_time));
    }
    const double y1 = flow.state()[1];
    if ((y0 < 0) == (y1 < 0) || y0 == 0.0) continue;
    const int d = y1 > y0 ? 1 : -1;
    const double tc = bisect([&](double t) { return flow.interpolate(t)[1]; }, t0, flow.time());
    const double x1 = flow.interpolate(tc)[0];
    if (x1 <= 0) continue;
    if (direction == 0) direction = d;
    if (d != direction) continue;
    crossings.push_back({tc, x1});
    const std::size_t n = crossings.size();
    if (n < 3) continue;
    const double dx = std::abs(crossings[n - 1].x1 - crossings[n - 2].x1);
    const double dx_prev = std::abs(crossings[n - 2].x1 - crossings[n - 3].x1);
    const double scale = std::max(1.0, std::abs(x1));
    // Stop at round-off level or when returns stop improving near it.
    if (dx < 1e-12 * scale || (dx < 1e-10 * scale && dx >= 0.5 * dx_prev)) {
      converged = true;
      start = {x1, 0.0};
      period = crossings[n - 1].time - crossings[n - 2].time;
    }
  }

  // Phase 2: one revolution from the section, sampled at uniform polar angle.
  // The section point has angle 0 and the unwrapped angle moves monotonically
  // by 2π·direction over one period.
  const int k = options.samples;
  std::vector<Eigen::Vector2d> points(k);
  points[0] = start;
  DenseFlow orbit(sys, start);
  double prev_angle = 0.0;
  int next = 1;  // next target index along the flow
  auto unwrapped = [&](const std::vector<double>& y, double reference) {
    double a = std::atan2(y[1], y[0]);
    while (a - reference > std::numbers::pi) a -= kTwoPi;
    while (a - reference < -std::numbers::pi) a += kTwoPi;
    return a;
  };
  while (orbit.time() < period) {
    const double ta = orbit.time();
    orbit.step();
    const double tb = std::min(orbit.time(), period);
    // Check monotonicity at interior points of the step as well.
    double a_prev = prev_angle;
    for (int q = 1; q <= 4; ++q) {
      const double t = ta + (tb - ta) * q / 4.0;
      const double a = unwrapped(orbit.interpolate(t), a_prev);
      if ((a - a_prev) * direction <= 0) {
        throw LimitCycleError("orbit is not star-shaped about the origin "
                              "(polar angle is not monotone)");
      }
      a_prev = a;
    }
    const double angle_b = a_prev;
    while (next < k && (direction * angle_b >= kTwoPi * next / k)) {
      const double target = direction * kTwoPi * next / k;
      const double tn = bisect(
          [&](double t) { return unwrapped(orbit.interpolate(t), prev_angle) - target; }, ta,
          tb);
      const Eigen::Vector2d p = to_vec2(orbit.interpolate(tn));
      // Sample index by polar angle in [0, 2π).
      const int idx = direction > 0 ? next : k - next;
      points[idx] = p;
      ++next;
    }
    prev_angle = angle_b;
  }
  if (next != k || std::abs(prev_angle - direction * kTwoPi) > 1e-6) {
    throw LimitCycleError("orbit does not wind once around the origin");
  }
  const Eigen::Vector2d end = to_vec2(orbit.interpolate(period));
  if ((end - start).norm() > options.closure_tolerance * std::max(1.0, start.norm())) {
    throw LimitCycleError("orbit does not close after one period (gap " +
                          std::to_string((end - start).norm()) + ")");
  }
  double max_r = 0.0;
  for (const auto& p : points) max_r = std::max(max_r, p.norm());
  const double e_r = options.e_r_norm.value_or(2.0 * max_r);
  return LimitCycleParam(period, direction, std::move(points), options.delta, e_r);
}

PolarVelocity polar_dynamics(const DynamicalSystem& sys,
                             const LimitCycleParam& lc, double theta, double y) {
  if (sys.dimension() != 2) throw DimensionMismatch("polar dynamics require N = 2");
  const double rho = lc.radius(theta);
  const double e = lc.e_r_norm();
  const double r = rho + (y + lc.delta()) * e;
  if (!(r > 0)) {
    throw AnnulusError("annulus reaches the origin at y = " + std::to_string(y), y);
  }
  const Eigen::Vector2d u(std::cos(theta), std::sin(theta));
  const Eigen::Vector2d u_perp(-u(1), u(0));
  const Eigen::Vector2d x = r * u;
  Eigen::Vector2d f;
  sys.eval(x.data(), f.data());
  PolarVelocity v;
  v.theta = f.dot(u_perp) / r;
  v.y = (f.dot(u) - lc.radius_derivative(theta) * v.theta) / e;
  return v;
}

FloquetAnalysis floquet_analysis(const DynamicalSystem& sys,
                                 const LimitCycleParam& lc) {
  // State: x (2), Ψ column-major (4), ∫ tr J (1).
  OdeRhs rhs = [&sys](const std::vector<double>& s, std::vector<double>& ds, double) {
    sys.eval(s.data(), ds.data());
    const Eigen::Matrix2d j = sys.jacobian(Eigen::Vector2d(s[0], s[1]));
    const Eigen::Map<const Eigen::Matrix2d> psi(s.data() + 2);
    Eigen::Map<Eigen::Matrix2d> dpsi(ds.data() + 2);
    dpsi = j * psi;
    ds[6] = j.trace();
  };
  std::vector<double> s0 = {lc.samples()[0](0), lc.samples()[0](1), 1, 0, 0, 1, 0};
  DenseFlow flow(rhs, s0, 2);
  while (flow.time() < lc.period()) flow.step();
  const std::vector<double> s = flow.interpolate(lc.period());

  FloquetAnalysis out;
  out.monodromy = Eigen::Map<const Eigen::Matrix2d>(s.data() + 2);
  const Eigen::VectorXcd mu = out.monodromy.eigenvalues();
  int triv = std::abs(mu(0) - 1.0) <= std::abs(mu(1) - 1.0) ? 0 : 1;
  if (std::abs(mu(triv) - 1.0) > kTrivialMultiplierTolerance) {
    throw LimitCycleError("trivial Floquet multiplier deviates from 1 by " +
                          std::to_string(std::abs(mu(triv) - 1.0)));
  }
  out.trivial_multiplier = mu(triv).real();
  out.trivial_exponent = std::log(out.trivial_multiplier) / lc.period();
  out.exponents = {Complex((s[6] - std::log(out.trivial_multiplier)) / lc.period())};
  return out;
}

std::vector<Complex> floquet_exponents(const DynamicalSystem& sys,
                                       LimitCycleParam& lc) {
  FloquetAnalysis a = floquet_analysis(sys, lc);
  lc.set_floquet_exponent(a.exponents.front());
  return a.exponents;
}

}  // namespace koopman
