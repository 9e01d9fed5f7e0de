#include "koopman/stability.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <queue>
#include <random>

#include "koopman/errors.hpp"
#include "koopman/integrator.hpp"

namespace koopman {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> x) {
  return {x.data(), static_cast<Eigen::Index>(x.size())};
}

std::vector<double> uniform_times(double horizon, int checkpoints) {
  if (!(horizon > 0) || checkpoints < 1) throw Error("horizon and checkpoint count must be positive");
  std::vector<double> t(checkpoints);
  for (int i = 0; i < checkpoints; ++i) t[i] = horizon * (i + 1) / checkpoints;
  return t;
}

}  // namespace

EigenfunctionView make_view(TaylorEigenfunction ef) {
  auto shared = std::make_shared<const TaylorEigenfunction>(std::move(ef));
  return {"taylor", shared->eigenvalue,
          [shared](std::span<const double> x) { return eval_taylor(*shared, x); }, {}};
}

EigenfunctionView make_view(BernsteinEigenfunction ef) {
  auto shared = std::make_shared<const BernsteinEigenfunction>(std::move(ef));
  return {"bernstein", shared->eigenvalue,
          [shared](std::span<const double> x) { return eval_bernstein(*shared, x).value; },
          [shared](std::span<const double> x) { return shared->box.contains(as_vector(x)); }};
}

EigenfunctionView make_view(FourierBernsteinEigenfunction ef) {
  auto shared = std::make_shared<const FourierBernsteinEigenfunction>(std::move(ef));
  return {"limit-cycle", shared->eigenvalue,
          [shared](std::span<const double> x) { return eval_lc(*shared, Eigen::Vector2d(x[0], x[1])); },
          [shared](std::span<const double> x) {
            if (x.size() != 2) return false;
            try {
              const double y = shared->lc.to_annulus(Eigen::Vector2d(x[0], x[1]))(1);
              return y >= std::min(0.0, -shared->lc.delta()) && y <= 1.0;
            } catch (const Error&) {
              return false;
            }
          }};
}

LyapunovFunction make_lyapunov(std::vector<EigenfunctionView> members, std::optional<int> p) {
  if (members.empty()) throw Error("a Lyapunov function needs at least one eigenfunction");
  LyapunovFunction v;
  const bool lone_pair = members.size() == 2 && members[0].eigenvalue.imag() != 0.0 &&
                         std::abs(members[0].eigenvalue - std::conj(members[1].eigenvalue)) <=
                             1e-12 * std::abs(members[0].eigenvalue);
  if (!p && lone_pair) {
    members.resize(1);
    v.p = 1;
  } else {
    v.p = p.value_or(2);
  }
  if (v.p < 1) throw Error("Lyapunov exponent p must be at least 1");
  v.dominant_rate = -kInf;
  for (const auto& m : members) v.dominant_rate = std::max(v.dominant_rate, m.eigenvalue.real());
  v.members = std::move(members);
  return v;
}

LyapunovSample lyapunov_value(const LyapunovFunction& v, std::span<const double> x) {
  LyapunovSample out;
  double sum = 0.0;
  for (const auto& m : v.members) {
    if (!m.is_valid(x)) return {std::numeric_limits<double>::quiet_NaN(), false};
    const double a = std::abs(m.value(x));
    sum += v.p == 1 ? a : std::pow(a, v.p);
  }
  out.value = v.p == 1 ? sum : std::pow(sum, 1.0 / v.p);
  return out;
}

GridSpec::GridSpec(Eigen::VectorXd lo, Eigen::VectorXd hi, std::vector<int> n)
    : lower(std::move(lo)), upper(std::move(hi)), counts(std::move(n)) {
  if (lower.size() != upper.size() || lower.size() != static_cast<Eigen::Index>(counts.size())) {
    throw DimensionMismatch("grid bounds and counts disagree in dimension");
  }
  for (int i = 0; i < dimension(); ++i) {
    if (counts[i] < 2 || !(upper(i) > lower(i))) throw Error("each grid axis needs two or more points and positive extent");
  }
}

GridSpec GridSpec::square(double half_width, int count, int dimension) {
  return GridSpec(Eigen::VectorXd::Constant(dimension, -half_width),
                  Eigen::VectorXd::Constant(dimension, half_width), std::vector<int>(dimension, count));
}

Eigen::Index GridSpec::size() const {
  Eigen::Index n = 1;
  for (int c : counts) n *= c;
  return n;
}

std::vector<int> GridSpec::index(Eigen::Index flat) const {
  std::vector<int> idx(counts.size());
  for (int i = dimension() - 1; i >= 0; --i) {
    idx[i] = static_cast<int>(flat % counts[i]);
    flat /= counts[i];
  }
  return idx;
}

Eigen::Index GridSpec::flat(std::span<const int> idx) const {
  Eigen::Index f = 0;
  for (int i = 0; i < dimension(); ++i) f = f * counts[i] + idx[i];
  return f;
}

double GridSpec::spacing(int axis) const { return (upper(axis) - lower(axis)) / (counts[axis] - 1); }

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (int i = 0; i < dimension(); ++i) v *= spacing(i);
  return v;
}

Eigen::VectorXd GridSpec::point(Eigen::Index flat_index) const {
  const std::vector<int> idx = index(flat_index);
  Eigen::VectorXd x(dimension());
  // Symmetric interpolation keeps the midpoint of a symmetric box exactly zero.
  for (int i = 0; i < dimension(); ++i) {
    const int last = counts[i] - 1;
    x(i) = (lower(i) * (last - idx[i]) + upper(i) * idx[i]) / last;
  }
  return x;
}

std::optional<Eigen::Index> GridSpec::nearest(std::span<const double> x) const {
  std::vector<int> idx(counts.size());
  for (int i = 0; i < dimension(); ++i) {
    const long k = std::lround((x[i] - lower(i)) / spacing(i));
    if (k < 0 || k >= counts[i]) return std::nullopt;
    idx[i] = static_cast<int>(k);
  }
  return flat(idx);
}

std::vector<Eigen::Index> GridSpec::neighbours(Eigen::Index flat_index) const {
  std::vector<int> idx = index(flat_index);
  std::vector<Eigen::Index> out;
  for (int i = 0; i < dimension(); ++i) {
    for (int step : {-1, 1}) {
      idx[i] += step;
      if (idx[i] >= 0 && idx[i] < counts[i]) out.push_back(flat(idx));
      idx[i] -= step;
    }
  }
  return out;
}

bool GridSpec::on_boundary(Eigen::Index flat_index) const {
  const std::vector<int> idx = index(flat_index);
  for (int i = 0; i < dimension(); ++i) {
    if (idx[i] == 0 || idx[i] == counts[i] - 1) return true;
  }
  return false;
}

DecreaseRegion decrease_region(const LyapunovFunction& v, const DynamicalSystem& sys,
                               const GridSpec& grid, double delta) {
  if (grid.dimension() != sys.dimension()) throw DimensionMismatch("grid dimension mismatch");
  if (!(delta > 0)) throw Error("flow step must be positive");
  DecreaseRegion r{grid, {}, {}, {}};
  r.delta = delta;
  const Eigen::Index n = grid.size();
  r.value.assign(n, kInf);
  r.advanced.assign(n, kInf);
  r.decreasing.assign(n, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = grid.point(i);
    const LyapunovSample v0 = lyapunov_value(v, std::span<const double>(x.data(), x.size()));
    if (!v0.valid || !std::isfinite(v0.value)) continue;
    r.value[i] = v0.value;
    if (v0.value == 0.0) {
      r.advanced[i] = 0.0;
      r.decreasing[i] = 1;
      continue;
    }
    try {
      const Eigen::VectorXd xd = integrate_flow(sys, x, delta);
      const LyapunovSample v1 = lyapunov_value(v, std::span<const double>(xd.data(), xd.size()));
      if (v1.valid && std::isfinite(v1.value)) r.advanced[i] = v1.value;
    } catch (const EscapeError&) {
    }
    r.decreasing[i] = r.advanced[i] < r.value[i];
  }
  return r;
}

double BasinEstimate::volume() const {
  Eigen::Index n = 0;
  for (CellFlag f : flags) n += f != CellFlag::outside;
  return n * grid.cell_volume();
}

bool BasinEstimate::contains(const LyapunovFunction& v, std::span<const double> x) const {
  const auto idx = grid.nearest(x);
  if (!idx || flags[*idx] == CellFlag::outside) return false;
  const LyapunovSample s = lyapunov_value(v, x);
  return s.valid && s.value < level;
}

BasinEstimate basin_estimate(const LyapunovFunction& v, const DynamicalSystem& sys,
                             const GridSpec& grid, double delta) {
  return basin_estimate(decrease_region(v, sys, grid, delta));
}

BasinEstimate basin_estimate(const DecreaseRegion& region) {
  const GridSpec& grid = region.grid;
  const Eigen::Index n = grid.size();
  BasinEstimate est{0.0, grid, {}};
  est.flags.assign(n, CellFlag::outside);

  std::vector<std::uint8_t> bad(n, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    bool b = !region.decreasing[i] || !std::isfinite(region.value[i]) || grid.on_boundary(i);
    for (Eigen::Index j : grid.neighbours(i)) b = b || !region.decreasing[j];
    bad[i] = b;
  }
  est.seed = 0;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (region.value[i] < region.value[est.seed]) est.seed = i;
  }
  if (bad[est.seed]) return est;

  // Minimax flood: pops arrive in increasing order of the smallest possible
  // path maximum of V from the seed, so the first bad pop fixes the level.
  using Entry = std::pair<double, Eigen::Index>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  std::vector<double> best(n, kInf);
  std::vector<std::uint8_t> done(n, 0);
  std::vector<Eigen::Index> order;
  best[est.seed] = region.value[est.seed];
  queue.emplace(best[est.seed], est.seed);
  double level = kInf;
  while (!queue.empty()) {
    const auto [key, i] = queue.top();
    queue.pop();
    if (done[i]) continue;
    done[i] = 1;
    if (bad[i]) {
      level = key;
      break;
    }
    order.push_back(i);
    for (Eigen::Index j : grid.neighbours(i)) {
      const double k = std::max(key, region.value[j]);
      if (!done[j] && k < best[j]) {
        best[j] = k;
        queue.emplace(k, j);
      }
    }
  }
  est.level = level;
  est.decrease_margin = kInf;
  for (Eigen::Index i : order) {
    if (best[i] >= level) continue;
    est.flags[i] = CellFlag::inside;
    if (region.value[i] > 0.0) {
      est.decrease_margin = std::min(est.decrease_margin, (region.value[i] - region.advanced[i]) / region.delta);
    }
  }
  for (Eigen::Index i : order) {
    if (est.flags[i] != CellFlag::inside) continue;
    for (Eigen::Index j : grid.neighbours(i)) {
      if (est.flags[j] == CellFlag::outside) {
        est.flags[i] = CellFlag::boundary;
        break;
      }
    }
  }
  if (!std::isfinite(est.decrease_margin)) est.decrease_margin = 0.0;
  est.certified = level > 0.0 && std::isfinite(level) && est.decrease_margin > 0.0;
  return est;
}

SoundnessReport check_basin_soundness(const LyapunovFunction& v, const DynamicalSystem& sys,
                                      const BasinEstimate& basin, const Eigen::VectorXd& target,
                                      int samples, std::uint64_t seed) {
  SoundnessReport rep;
  if (!(v.dominant_rate < 0)) throw Error("soundness check needs a negative dominant rate");
  rep.horizon = 50.0 / std::abs(v.dominant_rate);
  const GridSpec& grid = basin.grid;
  const int n = grid.dimension();
  Eigen::VectorXd lo = grid.upper, hi = grid.lower;
  bool any = false;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (basin.flags[i] == CellFlag::outside) continue;
    const Eigen::VectorXd x = grid.point(i);
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
    any = true;
  }
  if (!any) return rep;
  for (int a = 0; a < n; ++a) {
    lo(a) = std::max(grid.lower(a), lo(a) - grid.spacing(a));
    hi(a) = std::min(grid.upper(a), hi(a) + grid.spacing(a));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const long max_attempts = 1000L * samples;
  for (long attempt = 0; rep.samples < samples && attempt < max_attempts; ++attempt) {
    Eigen::VectorXd x(n);
    for (int a = 0; a < n; ++a) x(a) = lo(a) + (hi(a) - lo(a)) * unit(rng);
    if (!basin.contains(v, std::span<const double>(x.data(), n))) continue;
    ++rep.samples;
    bool ok = false;
    try {
      ok = (integrate_flow(sys, x, rep.horizon) - target).norm() < 1e-4;
    } catch (const EscapeError&) {
    }
    if (!ok) {
      ++rep.failures;
      rep.failed_points.push_back(x);
    }
  }
  return rep;
}

SemigroupReport verify_semigroup(const EigenfunctionView& ef, const DynamicalSystem& sys,
                                 std::span<const Eigen::VectorXd> points, double horizon,
                                 int checkpoints, double floor) {
  const std::vector<double> times = uniform_times(horizon, checkpoints);
  SemigroupReport rep;
  for (const Eigen::VectorXd& x0 : points) {
    const std::span<const double> s0(x0.data(), x0.size());
    if (!ef.is_valid(s0)) {
      ++rep.skipped;
      continue;
    }
    std::vector<Eigen::VectorXd> xs;
    try {
      xs = integrate_to_times(sys, x0, times);
    } catch (const EscapeError&) {
      ++rep.skipped;
      continue;
    }
    bool inside = true;
    for (const auto& x : xs) inside = inside && ef.is_valid(std::span<const double>(x.data(), x.size()));
    if (!inside) {
      ++rep.skipped;
      continue;
    }
    const Complex phi0 = ef.value(s0);
    const double denom = std::max(std::abs(phi0), floor);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const Complex phit = ef.value(std::span<const double>(xs[k].data(), xs[k].size()));
      rep.max_error = std::max(rep.max_error, std::abs(phit - std::exp(ef.eigenvalue * times[k]) * phi0) / denom);
    }
    ++rep.checked;
  }
  return rep;
}

EnvelopeReport verify_decay_envelope(const LyapunovFunction& v, const DynamicalSystem& sys,
                                     std::span<const Eigen::VectorXd> points, double horizon,
                                     std::optional<double> rate, int checkpoints) {
  const std::vector<double> times = uniform_times(horizon, checkpoints);
  const double r = rate.value_or(v.dominant_rate);
  EnvelopeReport rep;
  for (const Eigen::VectorXd& x0 : points) {
    const LyapunovSample v0 = lyapunov_value(v, std::span<const double>(x0.data(), x0.size()));
    if (!v0.valid || v0.value == 0.0) {
      ++rep.skipped;
      continue;
    }
    std::vector<Eigen::VectorXd> xs;
    try {
      xs = integrate_to_times(sys, x0, times);
    } catch (const EscapeError&) {
      ++rep.skipped;
      continue;
    }
    std::vector<LyapunovSample> vt;
    bool inside = true;
    for (const auto& x : xs) {
      vt.push_back(lyapunov_value(v, std::span<const double>(x.data(), x.size())));
      inside = inside && vt.back().valid;
    }
    if (!inside) {
      ++rep.skipped;
      continue;
    }
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double ratio = vt[k].value / (std::exp(r * times[k]) * v0.value);
      rep.worst_ratio = std::max(rep.worst_ratio, ratio);
      if (ratio > 1.0 + kEnvelopeSlack) rep.passed = false;
    }
    ++rep.checked;
  }
  return rep;
}

}  // namespace koopman
