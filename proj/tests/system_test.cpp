#include "koopman/system.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "koopman/builtin_systems.hpp"
#include "koopman/errors.hpp"
#include "koopman/integrator.hpp"
#include "koopman/limit_cycle.hpp"

namespace koopman {
namespace {

using std::numbers::pi;

DynamicalSystem linear(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<MonomialPoly> comps;
  for (int i = 0; i < n; ++i) {
    MonomialPoly p(n);
    for (int j = 0; j < n; ++j) p.add_term(MultiIndex::unit(n, j), a(i, j));
    comps.push_back(p);
  }
  return DynamicalSystem(comps, "linear");
}

TEST(FixedPointTest, Examples) {
  const Eigen::VectorXd x3 = find_fixed_point(builtin::example3(), Eigen::Vector2d(0.1, 0.1));
  EXPECT_LT(x3.norm(), 1e-12);
  const Eigen::VectorXd x4 = find_fixed_point(builtin::example4(), Eigen::Vector2d(2.4, 0.1));
  EXPECT_NEAR(x4(0), std::sqrt(6.0), 1e-10);
  EXPECT_NEAR(x4(1), 0.0, 1e-10);
  const Eigen::VectorXd x1 = find_fixed_point(linear(Eigen::MatrixXd::Constant(1, 1, -1.0)),
                                              Eigen::VectorXd::Constant(1, 7.0));
  EXPECT_LT(std::abs(x1(0)), 1e-12);
}

TEST(FixedPointTest, Failures) {
  // ẋ = x² has a singular Jacobian at its double root and converges only
  // linearly, so Newton from 0 hits the singular point immediately.
  const DynamicalSystem sq({MonomialPoly::monomial(MultiIndex({2}), 1.0) +
                            MonomialPoly::constant(1, 1.0)},
                           "no root");
  EXPECT_THROW(find_fixed_point(sq, Eigen::VectorXd::Constant(1, 0.0)), SingularJacobian);
  EXPECT_THROW(find_fixed_point(sq, Eigen::VectorXd::Constant(1, 0.3)), ConvergenceError);
  EXPECT_THROW(find_fixed_point(sq, Eigen::Vector2d(0, 0)), DimensionMismatch);
}

TEST(SpectrumTest, Example5) {
  const DynamicalSystem sys = builtin::example5();
  const SpectrumReport r = jacobian_spectrum(sys, Eigen::Vector2d::Zero());
  EXPECT_NEAR(r.eigenvalues(0).real(), -0.698, 5e-4);
  EXPECT_NEAR(r.eigenvalues(1).real(), -1.052, 5e-4);
  EXPECT_NEAR(r.eigenvalues(0).real(), -0.875 + std::sqrt(2.0) / 8, 1e-12);
  EXPECT_TRUE(r.nonresonant);
  for (int i = 0; i < 2; ++i) {
    const Eigen::VectorXcd w = r.left_eigenvectors.col(i);
    EXPECT_LT((r.jacobian.transpose().cast<Complex>() * w - r.eigenvalues(i) * w).norm(), 1e-10);
    EXPECT_NEAR(w.norm(), 1.0, 1e-14);
  }
}

TEST(SpectrumTest, Example3ComplexPair) {
  const SpectrumReport r = jacobian_spectrum(builtin::example3(), Eigen::Vector2d::Zero());
  EXPECT_EQ(r.jacobian, (Eigen::Matrix2d() << 0, -1, 1, -1).finished());
  EXPECT_LT(std::abs(r.eigenvalues(0) - Complex(-0.5, -std::sqrt(3.0) / 2)), 1e-12);
  EXPECT_LT(std::abs(r.eigenvalues(1) - Complex(-0.5, std::sqrt(3.0) / 2)), 1e-12);
  for (int i = 0; i < 2; ++i) {
    const Eigen::VectorXcd w = r.left_eigenvectors.col(i);
    EXPECT_LT((r.jacobian.transpose().cast<Complex>() * w - r.eigenvalues(i) * w).norm(), 1e-10);
    // First nonzero entry real positive.
    EXPECT_GT(w(0).real(), 0.0);
    EXPECT_EQ(w(0).imag(), 0.0);
  }
}

TEST(SpectrumTest, DiagonalSystem) {
  const SpectrumReport r =
      jacobian_spectrum(linear(Eigen::Vector2d(-1, -2).asDiagonal()), Eigen::Vector2d::Zero());
  EXPECT_EQ(r.eigenvalues(0), Complex(-1.0));
  EXPECT_EQ(r.eigenvalues(1), Complex(-2.0));
  EXPECT_LT((r.left_eigenvectors - Eigen::Matrix2cd::Identity()).norm(), 1e-14);
  EXPECT_FALSE(r.nonresonant);
}

TEST(SpectrumTest, DefectiveJacobian) {
  Eigen::Matrix2d a;
  a << -1, 1, 0, -1;
  EXPECT_THROW(jacobian_spectrum(linear(a), Eigen::Vector2d::Zero()), DefectiveJacobian);
}

TEST(NonresonanceTest, Examples) {
  EXPECT_FALSE(check_nonresonance(Eigen::Vector2cd(-1, -2), 10));
  EXPECT_TRUE(check_nonresonance(Eigen::Vector2cd(-0.698, -1.052), 10));
  const double s3 = std::sqrt(3.0) / 2;
  EXPECT_TRUE(check_nonresonance(Eigen::Vector2cd(Complex(-0.5, s3), Complex(-0.5, -s3)), 10));
  // λ₁ = 3λ₂ is a third-order resonance.
  EXPECT_TRUE(check_nonresonance(Eigen::Vector2cd(-3, -1), 2));
  EXPECT_FALSE(check_nonresonance(Eigen::Vector2cd(-3, -1), 3));
}

TEST(PullBackTest, IdentityAndScalar) {
  const DynamicalSystem ex5 = builtin::example5();
  const DynamicalSystem same = pull_back_field(ex5, BoxMap::unit(2));
  for (int l = 0; l < 2; ++l) {
    for (const auto& [k, v] : ex5.components()[l].terms()) {
      EXPECT_LT(std::abs(same.components()[l].coefficient(k) - v), 1e-15);
    }
  }
  const DynamicalSystem decay = linear(Eigen::MatrixXd::Constant(1, 1, -1.0));
  const DynamicalSystem u = pull_back_field(
      decay, BoxMap(Eigen::VectorXd::Constant(1, -2.0), Eigen::VectorXd::Constant(1, 2.0)));
  EXPECT_NEAR(std::abs(u.components()[0].coefficient(MultiIndex({0})) - 0.5), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(u.components()[0].coefficient(MultiIndex({1})) + 1.0), 0.0, 1e-15);
  const Eigen::VectorXd ustar = find_fixed_point(u, Eigen::VectorXd::Constant(1, 0.3));
  EXPECT_NEAR(ustar(0), 0.5, 1e-14);
}

TEST(PullBackTest, SpectrumInvariance) {
  const DynamicalSystem ex5 = builtin::example5();
  const BoxMap box(Eigen::Vector2d(-2, -2), Eigen::Vector2d(2, 2));
  const DynamicalSystem u = pull_back_field(ex5, box);
  const SpectrumReport orig = jacobian_spectrum(ex5, Eigen::Vector2d::Zero());
  const SpectrumReport mapped = jacobian_spectrum(u, Eigen::Vector2d(0.5, 0.5));
  EXPECT_LT((orig.eigenvalues - mapped.eigenvalues).norm(), 1e-10);
  const SpectrumReport boxed = spectrum_in_box(orig, box);
  EXPECT_LT((boxed.jacobian - mapped.jacobian).norm(), 1e-14);
  for (int i = 0; i < 2; ++i) {
    const Eigen::VectorXcd w = boxed.left_eigenvectors.col(i);
    EXPECT_LT((mapped.jacobian.transpose().cast<Complex>() * w - boxed.eigenvalues(i) * w).norm(),
              1e-12);
  }
  // General (non-polynomial) systems go through the callback path.
  const DynamicalSystem c = pull_back_field(builtin::circle(), box);
  const Eigen::Vector2d pt(0.7, 0.4);
  EXPECT_LT((c.eval(pt) - builtin::circle().eval(box.from_unit(pt)) / 4.0).norm(), 1e-15);
}

TEST(IntegratorTest, ExponentialDecay) {
  const DynamicalSystem decay = linear(Eigen::MatrixXd::Constant(1, 1, -1.0));
  const Eigen::VectorXd x = integrate_flow(decay, Eigen::VectorXd::Constant(1, 1.0), 1.0);
  EXPECT_NEAR(x(0), std::exp(-1.0), 1e-9);
  const Eigen::VectorXd back = integrate_flow(decay, x, -1.0);
  EXPECT_NEAR(back(0), 1.0, 1e-9);
  const double times[] = {0.0, 0.5, 2.0};
  const auto xs = integrate_to_times(decay, Eigen::VectorXd::Constant(1, 2.0), times);
  EXPECT_NEAR(xs[1](0), 2 * std::exp(-0.5), 1e-9);
  EXPECT_NEAR(xs[2](0), 2 * std::exp(-2.0), 1e-9);
}

TEST(IntegratorTest, Example6ConvergesRadially) {
  const Eigen::VectorXd x = integrate_flow(builtin::example6(), Eigen::Vector2d(2, 0), 10.0);
  EXPECT_LT(std::abs(x.norm() - 1.0), 1e-6);
}

TEST(IntegratorTest, Example4EscapesBeyondSaddle) {
  try {
    integrate_flow(builtin::example4(), Eigen::Vector2d(2.6, 0), 100.0);
    FAIL() << "expected escape";
  } catch (const EscapeError& e) {
    EXPECT_GT(e.escape_time(), 0.0);
    EXPECT_LT(e.escape_time(), 100.0);
  }
}

TEST(PolarSystemTest, JacobianMatchesFiniteDifferences) {
  for (const auto& sys : {builtin::example6(), builtin::circle()}) {
    const Eigen::Vector2d x(0.8, -1.3);
    const Eigen::Matrix2d j = sys.jacobian(x);
    const double h = 1e-6;
    for (int c = 0; c < 2; ++c) {
      Eigen::Vector2d e = Eigen::Vector2d::Zero();
      e(c) = h;
      const Eigen::Vector2d fd = (sys.eval(Eigen::VectorXd(x + e)) - sys.eval(Eigen::VectorXd(x - e))) / (2 * h);
      EXPECT_LT((j.col(c) - fd).norm(), 1e-7);
    }
  }
}

class CycleTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    LimitCycleOptions opts;
    opts.e_r_norm = 2.0;
    ex6_ = new LimitCycleParam(
        find_limit_cycle(builtin::example6(), Eigen::Vector2d(1.5, 0.2), opts));
    circle_ = new LimitCycleParam(
        find_limit_cycle(builtin::circle(), Eigen::Vector2d(0.3, 0.0)));
  }
  static void TearDownTestSuite() {
    delete ex6_;
    delete circle_;
  }
  static LimitCycleParam* ex6_;
  static LimitCycleParam* circle_;
};

LimitCycleParam* CycleTest::ex6_ = nullptr;
LimitCycleParam* CycleTest::circle_ = nullptr;

TEST_F(CycleTest, Example6IsUnitCircle) {
  EXPECT_NEAR(ex6_->period(), 2 * pi, 1e-8);
  EXPECT_EQ(ex6_->orientation(), 1);
  for (const auto& p : ex6_->samples()) EXPECT_NEAR(p.norm(), 1.0, 1e-8);
  for (int j = 0; j < ex6_->sample_count(); j += 37) {
    const Eigen::Vector2d p = ex6_->samples()[j];
    EXPECT_NEAR(std::atan2(p(1), p(0)), std::remainder(ex6_->sample_theta(j), 2 * pi), 1e-9);
  }
  EXPECT_EQ(ex6_->e_r_norm(), 2.0);
}

TEST_F(CycleTest, CircleSystemDefaults) {
  EXPECT_NEAR(circle_->period(), 2 * pi, 1e-8);
  EXPECT_NEAR(circle_->max_radius(), 1.0, 1e-8);
  EXPECT_NEAR(circle_->e_r_norm(), 2.0, 1e-8);
  EXPECT_EQ(circle_->delta(), 0.0);
}

TEST_F(CycleTest, VanDerPolPeriod) {
  const LimitCycleParam vdp = find_limit_cycle(builtin::example7(), Eigen::Vector2d(1.0, 0.0));
  // Reference period of the μ = 1 oscillator.
  EXPECT_NEAR(vdp.period(), 6.663286859323130, 1e-6);
  EXPECT_EQ(vdp.orientation(), -1);
  const Eigen::VectorXd x0 = vdp.samples()[0];
  const Eigen::VectorXd back = integrate_flow(builtin::example7(), x0, vdp.period());
  EXPECT_LT((back - x0).norm(), 1e-8);
  // Samples are on the orbit at their nominal angle.
  for (int j = 0; j < vdp.sample_count(); j += 101) {
    const Eigen::Vector2d p = vdp.samples()[j];
    EXPECT_NEAR(std::remainder(std::atan2(p(1), p(0)) - vdp.sample_theta(j), 2 * pi), 0.0, 1e-9);
  }
}

TEST_F(CycleTest, PolarDynamicsOfExample6) {
  const DynamicalSystem sys = builtin::example6();
  for (int i = 0; i < 16; ++i) {
    const double theta = 0.39 * i;
    const PolarVelocity on = polar_dynamics(sys, *ex6_, theta, 0.0);
    EXPECT_NEAR(on.theta, 1.0, 1e-8);
    EXPECT_NEAR(on.y, 0.0, 1e-8);
    const double y = 0.37;
    const double r = 1 + 2 * y;
    const double a = 2 + std::cos(6 * theta) - std::cos(10 * theta);
    const PolarVelocity off = polar_dynamics(sys, *ex6_, theta, y);
    EXPECT_NEAR(off.theta, 1.0, 1e-8);
    EXPECT_LT(off.y, 0.0);
    EXPECT_NEAR(off.y, a * r * (1 - r * r) / 2, 1e-7);
  }
  EXPECT_THROW(polar_dynamics(sys, *ex6_, 0.0, -0.6), AnnulusError);
}

TEST_F(CycleTest, PolarReconstructionConsistency) {
  const DynamicalSystem sys = builtin::example7();
  const LimitCycleParam vdp =
      find_limit_cycle(sys, Eigen::Vector2d(1.0, 0.0)).with_annulus(0.0, 4.0);
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> ut(0, 2 * pi), uy(0, 1);
  for (int i = 0; i < 100; ++i) {
    const double theta = ut(rng);
    const double y = uy(rng);
    const PolarVelocity v = polar_dynamics(sys, vdp, theta, y);
    const Eigen::Vector2d u(std::cos(theta), std::sin(theta));
    const Eigen::Vector2d up(-u(1), u(0));
    const double rho = vdp.radius(theta);
    const Eigen::Vector2d dxg = vdp.radius_derivative(theta) * u + rho * up;
    const double e = vdp.e_r_norm();
    const Eigen::Vector2d rebuilt = dxg * v.theta + e * u * v.y + (y + vdp.delta()) * e * up * v.theta;
    const Eigen::Vector2d x = vdp.point(theta, y);
    EXPECT_LT((rebuilt - sys.eval(Eigen::VectorXd(x))).norm(), 1e-8);
    const Eigen::Vector2d back = vdp.to_annulus(x);
    EXPECT_NEAR(back(0), theta, 1e-12);
    EXPECT_NEAR(back(1), y, 1e-12);
  }
  // The cycle is invariant: F_y vanishes on it.
  for (int i = 0; i < 50; ++i) {
    EXPECT_NEAR(polar_dynamics(sys, vdp, 0.1257 * i, 0.0).y, 0.0, 1e-6);
  }
}

TEST_F(CycleTest, FloquetExponents) {
  LimitCycleParam lc = *ex6_;
  const FloquetAnalysis a = floquet_analysis(builtin::example6(), lc);
  EXPECT_NEAR(a.trivial_exponent, 0.0, 1e-6);
  const auto ex = floquet_exponents(builtin::example6(), lc);
  ASSERT_EQ(ex.size(), 1u);
  EXPECT_NEAR(ex[0].real(), -4.0, 1e-6);
  ASSERT_TRUE(lc.floquet_exponent().has_value());

  LimitCycleParam c = *circle_;
  EXPECT_NEAR(floquet_exponents(builtin::circle(), c)[0].real(), -1.0, 1e-6);
}

TEST(LimitCycleErrorsTest, NoCycle) {
  LimitCycleOptions opts;
  opts.max_time = 50;
  // A stable focus never settles on a periodic orbit.
  EXPECT_THROW(find_limit_cycle(builtin::example3(), Eigen::Vector2d(0.5, 0.0), opts),
               LimitCycleError);
}

}  // namespace
}  // namespace koopman
