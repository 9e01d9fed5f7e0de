#include "koopman/lc_solver.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "koopman/bernstein.hpp"
#include "koopman/errors.hpp"
#include "koopman/least_squares.hpp"

namespace koopman {

namespace {

// Relative size below which projected coefficients are roundoff.
constexpr double kCoefficientFloor = 1e-14;

int sample_count(int n_bar) { return 4 * (2 * n_bar + 1); }

double grid_theta(int j, int k) { return 2.0 * M_PI * j / k; }

// (1/K) Σ_j v_j e^{−i n θ_j} for n = −n̄ … n̄, columns of `values` separately.
Eigen::MatrixXcd dft(const Eigen::MatrixXd& values, int n_bar) {
  const int k = static_cast<int>(values.rows());
  Eigen::VectorXcd twiddle(k);
  for (int j = 0; j < k; ++j) twiddle(j) = std::polar(1.0, -grid_theta(j, k));
  Eigen::MatrixXcd out(2 * n_bar + 1, values.cols());
  for (int n = -n_bar; n <= n_bar; ++n) {
    Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(values.cols());
    for (int j = 0; j < k; ++j) {
      const int idx = static_cast<int>(((static_cast<long>(n) * j) % k + k) % k);
      row += twiddle(idx) * values.row(j).cast<Complex>();
    }
    out.row(n + n_bar) = row / double(k);
  }
  return out;
}

// Chebyshev points of the first kind mapped to [0, 1].
Eigen::VectorXd chebyshev_nodes(int count) {
  Eigen::VectorXd y(count);
  for (int i = 0; i < count; ++i) y(i) = 0.5 - 0.5 * std::cos(M_PI * (i + 0.5) / count);
  return y;
}

Eigen::MatrixXcd clean(Eigen::MatrixXcd c, double scale) {
  const double floor = kCoefficientFloor * std::max(scale, 1e-300);
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (std::abs(c(i)) <= floor) c(i) = 0.0;
  }
  return c;
}

}  // namespace

FieldProjection project_field(const DynamicalSystem& sys, const LimitCycleParam& lc,
                              int n_bar, int s_prime) {
  if (n_bar < 0 || s_prime < 0) throw Error("n_bar and s_prime must be nonnegative");
  const int k = sample_count(n_bar);
  const Eigen::VectorXd ys = chebyshev_nodes(2 * (s_prime + 1));
  const int ny = static_cast<int>(ys.size());
  Eigen::MatrixXd ft(k, ny), fy(k, ny);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < ny; ++i) {
      const PolarVelocity v = polar_dynamics(sys, lc, grid_theta(j, k), ys(i));
      ft(j, i) = v.theta;
      fy(j, i) = v.y;
    }
  }
  Eigen::MatrixXd basis(ny, s_prime + 1);
  for (int i = 0; i < ny; ++i) basis.row(i) = eval_basis_1d(s_prime, ys(i)).transpose();
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);

  FieldProjection p;
  p.n_bar = n_bar;
  p.s_prime = s_prime;
  p.scale = std::max(ft.cwiseAbs().maxCoeff(), fy.cwiseAbs().maxCoeff());
  // Per harmonic, least squares in y: basis · C_nᵀ = F̂_n(y).
  auto fit = [&](const Eigen::MatrixXd& f) {
    const Eigen::MatrixXcd hat = dft(f, n_bar);
    Eigen::MatrixXcd c(2 * n_bar + 1, s_prime + 1);
    for (int n = 0; n < 2 * n_bar + 1; ++n) {
      const Eigen::VectorXd re = qr.solve(Eigen::VectorXd(hat.row(n).real().transpose()));
      const Eigen::VectorXd im = qr.solve(Eigen::VectorXd(hat.row(n).imag().transpose()));
      c.row(n) = (re.cast<Complex>() + Complex(0, 1) * im.cast<Complex>()).transpose();
    }
    return clean(c, p.scale);
  };
  p.theta = fit(ft);
  p.y = fit(fy);

  // Reconstruct on the sampling grid.
  const Eigen::MatrixXcd yb = basis.cast<Complex>();  // ny × (s'+1)
  for (int j = 0; j < k; ++j) {
    Eigen::RowVectorXcd e(2 * n_bar + 1);
    for (int n = -n_bar; n <= n_bar; ++n) e(n + n_bar) = std::polar(1.0, n * grid_theta(j, k));
    const Eigen::RowVectorXcd rt = (e * p.theta) * yb.transpose();
    const Eigen::RowVectorXcd ry = (e * p.y) * yb.transpose();
    for (int i = 0; i < ny; ++i) {
      p.projection_error = std::max({p.projection_error, std::abs(rt(i) - ft(j, i)),
                                     std::abs(ry(i) - fy(j, i))});
    }
  }
  if (p.projection_error > kProjectionTolerance * std::max(p.scale, 1.0)) {
    throw ProjectionError("field projection error " + std::to_string(p.projection_error) +
                              " is too large; increase n_bar or s_prime",
                          p.projection_error);
  }
  return p;
}

BoundaryData boundary_c2(const DynamicalSystem& sys, const LimitCycleParam& lc,
                         Complex lambda, int n_bar) {
  if (std::abs(lambda.imag()) > 1e-12 * std::max(1.0, std::abs(lambda))) {
    throw Error("boundary data requires a real Floquet exponent");
  }
  const double lam = lambda.real();
  const double y0 = -lc.delta();
  const int k = sample_count(n_bar);

  // F_θ keeps one sign on the cycle, checked on a grid 4× finer than the nodes.
  int sign = 0;
  for (int j = 0; j < 4 * k; ++j) {
    const double ft = polar_dynamics(sys, lc, grid_theta(j, 4 * k), y0).theta;
    const int sj = ft > 0 ? 1 : (ft < 0 ? -1 : 0);
    if (sj == 0 || (sign != 0 && sj != sign)) {
      throw LimitCycleError("angular velocity changes sign on the cycle; θ does not parametrize it");
    }
    sign = sj;
  }

  auto integrand = [&](double sigma) {
    const PolarVelocity v = polar_dynamics(sys, lc, sigma, y0);
    const double dfy = (polar_dynamics(sys, lc, sigma, y0 + kFdStep).y -
                        polar_dynamics(sys, lc, sigma, y0 - kFdStep).y) /
                       (2 * kFdStep);
    return (lam - dfy) / v.theta;
  };
  using Quadrature = boost::math::quadrature::gauss_kronrod<double, 15>;
  BoundaryData out;
  out.g.resize(k);
  double acc = 0.0;
  out.g(0) = 1.0;
  for (int j = 1; j <= k; ++j) {
    acc += Quadrature::integrate(integrand, grid_theta(j - 1, k), grid_theta(j, k), 3, 1e-12);
    if (j < k) out.g(j) = std::exp(acc);
  }
  if (std::abs(std::exp(acc) - 1.0) > kPeriodicityTolerance) {
    throw LimitCycleError("boundary slope g is not 2π-periodic (g(2π) = " +
                          std::to_string(std::exp(acc)) + "); check the Floquet exponent");
  }
  out.c2 = dft(out.g, n_bar).col(0);
  return out;
}

LcSystem assemble_lc_system(const FieldProjection& field, const Eigen::VectorXcd& c2,
                            Complex lambda, double delta, const LcOptions& options) {
  const int n_bar = options.n_bar;
  const int s = options.degree;
  const int sp = field.s_prime;
  const int m = options.harmonic_stride;
  if (field.n_bar != n_bar) throw DimensionMismatch("projection and options disagree on n_bar");
  if (c2.size() != 2 * n_bar + 1) throw DimensionMismatch("c2 must hold 2n̄+1 coefficients");
  if (m < 1) throw Error("harmonic stride must be positive");
  if (s < 1) throw Error("Bernstein degree must be at least 1");

  LcSystem sys;
  sys.n_bar = n_bar;
  sys.degree = s;
  sys.s_prime = sp;
  sys.harmonic_stride = m;
  sys.eigenvalue = lambda;
  sys.delta = delta;
  sys.constraint_weight = options.constraint_weight;
  for (int n = -n_bar; n <= n_bar; ++n) {
    if (n % m == 0) sys.harmonics.push_back(n);
  }
  const int h = static_cast<int>(sys.harmonics.size());
  std::vector<int> slot(2 * n_bar + 1, -1);
  for (int i = 0; i < h; ++i) slot[sys.harmonics[i] + n_bar] = i;

  const int rb = s + sp + 1;  // rows per harmonic block
  const int cb = s + 1;
  sys.pde_rows = h * rb;
  sys.a = Eigen::MatrixXcd::Zero(sys.pde_rows + 2 * h, h * cb);
  sys.b = Eigen::VectorXcd::Zero(sys.a.rows());

  std::vector<Eigen::MatrixXd> mk;
  for (int k = 0; k <= sp; ++k) mk.emplace_back(mult_basis_matrix_1d(k, s, sp));
  const Eigen::MatrixXd d(diff_matrix_1d(s));
  const Eigen::MatrixXd t(raise_matrix_1d(s, sp));

  // Field harmonic p shifts φ's harmonic n to n + p; both must be retained.
  for (int p = -n_bar; p <= n_bar; ++p) {
    const auto ct = field.theta.row(p + n_bar);
    const auto cy = field.y.row(p + n_bar);
    if (ct.isZero(0.0) && cy.isZero(0.0)) continue;
    Eigen::MatrixXcd mt = Eigen::MatrixXcd::Zero(rb, cb), my = Eigen::MatrixXcd::Zero(rb, cb);
    for (int k = 0; k <= sp; ++k) {
      if (ct(k) != 0.0) mt += ct(k) * mk[k];
      if (cy(k) != 0.0) my += cy(k) * mk[k];
    }
    const Eigen::MatrixXcd myd = my * d;
    for (int col = 0; col < h; ++col) {
      const int n = sys.harmonics[col];
      const int target = n + p;
      if (target < -n_bar || target > n_bar || slot[target + n_bar] < 0) continue;
      const int row = slot[target + n_bar];
      sys.a.block(row * rb, col * cb, rb, cb) += myd + Complex(0, n) * mt;
    }
  }
  for (int i = 0; i < h; ++i) sys.a.block(i * rb, i * cb, rb, cb) -= lambda * t;

  const double y0 = -delta;
  const Eigen::RowVectorXd bv = eval_basis_1d(s, y0).transpose();
  const Eigen::RowVectorXd bd = eval_basis_derivative_1d(s, y0).transpose();
  const double w = options.constraint_weight;
  for (int i = 0; i < h; ++i) {
    sys.a.block(sys.pde_rows + i, i * cb, 1, cb) = (w * bv).cast<Complex>();
    sys.a.block(sys.pde_rows + h + i, i * cb, 1, cb) = (w * bd).cast<Complex>();
    sys.b(sys.pde_rows + h + i) = w * c2(sys.harmonics[i] + n_bar);
  }
  return sys;
}

FourierBernsteinEigenfunction solve_lc(const LcSystem& system, const LimitCycleParam& lc,
                                       const Eigen::VectorXcd& c2, const LcOptions& options) {
  const LeastSquaresSolution sol = solve_least_squares(system.a, system.b, options.rcond);
  FourierBernsteinEigenfunction ef{lc};
  ef.n_bar = system.n_bar;
  ef.degree = system.degree;
  ef.eigenvalue = system.eigenvalue;
  ef.harmonic_stride = system.harmonic_stride;
  ef.c2 = c2;
  ef.lsq_residual = sol.relative_residual;
  ef.rank = sol.rank;
  ef.certified = sol.relative_residual <= options.certify_threshold;
  const int cb = system.degree + 1;
  ef.coeffs = Eigen::MatrixXcd::Zero(2 * system.n_bar + 1, cb);
  for (std::size_t i = 0; i < system.harmonics.size(); ++i) {
    ef.coeffs.row(system.harmonics[i] + system.n_bar) = sol.x.segment(i * cb, cb).transpose();
  }
  return ef;
}

FourierBernsteinEigenfunction compute_lc_eigenfunction(const DynamicalSystem& sys,
                                                       LimitCycleParam lc,
                                                       const LcOptions& options) {
  if (!lc.floquet_exponent()) floquet_exponents(sys, lc);
  const Complex lambda = *lc.floquet_exponent();
  const FieldProjection field = project_field(sys, lc, options.n_bar, options.s_prime);
  const BoundaryData bd = boundary_c2(sys, lc, lambda, options.n_bar);
  const LcSystem system = assemble_lc_system(field, bd.c2, lambda, lc.delta(), options);
  return solve_lc(system, lc, bd.c2, options);
}

Complex eval_lc_polar(const FourierBernsteinEigenfunction& ef, double theta, double y) {
  const Eigen::VectorXcd by = (ef.coeffs * eval_basis_1d(ef.degree, y).cast<Complex>());
  Complex sum = 0.0;
  for (int n = -ef.n_bar; n <= ef.n_bar; ++n) {
    if (by(n + ef.n_bar) != 0.0) sum += std::polar(1.0, n * theta) * by(n + ef.n_bar);
  }
  return sum;
}

Complex eval_lc(const FourierBernsteinEigenfunction& ef, const Eigen::Vector2d& x) {
  const Eigen::Vector2d ty = ef.lc.to_annulus(x);
  const double lo = std::min(0.0, -ef.lc.delta());
  constexpr double slack = 1e-12;
  if (ty(1) < lo - slack || ty(1) > 1.0 + slack) {
    throw AnnulusError("point lies outside the annulus (y = " + std::to_string(ty(1)) + ")", ty(1));
  }
  return eval_lc_polar(ef, ty(0), ty(1));
}

}  // namespace koopman
