#include "koopman/polynomial.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "koopman/errors.hpp"

namespace koopman {
namespace {

MonomialPoly x(int n, int axis) { return MonomialPoly::variable(n, axis); }
MonomialPoly c(int n, double v) { return MonomialPoly::constant(n, v); }

MonomialPoly random_poly(std::mt19937& rng, int dim, int degree) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  MonomialPoly p(dim);
  for (int d = 0; d <= degree; ++d) {
    for (const auto& k : multi_indices_of_degree(dim, d)) {
      p.add_term(k, Complex(coef(rng), coef(rng)));
    }
  }
  return p;
}

TEST(MultiIndexTest, GradedLexOrder) {
  const auto deg2 = multi_indices_of_degree(2, 2);
  ASSERT_EQ(deg2.size(), 3u);
  EXPECT_EQ(deg2[0], MultiIndex({2, 0}));
  EXPECT_EQ(deg2[1], MultiIndex({1, 1}));
  EXPECT_EQ(deg2[2], MultiIndex({0, 2}));
  EXPECT_TRUE(GradedLexLess{}(MultiIndex({0, 1}), MultiIndex({2, 0})));
  EXPECT_EQ(multi_indices_of_degree(3, 4).size(), 15u);
  EXPECT_THROW(MultiIndex::unit(2, 2), AxisOutOfRange);
}

TEST(MonomialPolyTest, EvalExamples) {
  const MonomialPoly p = MonomialPoly::monomial(MultiIndex({2, 1}), 1.0);
  const double pt[] = {2.0, 3.0};
  EXPECT_EQ(p.eval(pt), Complex(12.0));
  EXPECT_EQ(c(2, 5.0).eval(pt), Complex(5.0));

  const MonomialPoly f1 = Complex(-1.0) * x(2, 1);
  const double q[] = {0.5, -1.0};
  EXPECT_EQ(f1.eval(q), Complex(1.0));

  const double bad[] = {1.0};
  EXPECT_THROW(p.eval(bad), DimensionMismatch);
}

TEST(MonomialPolyTest, EvalAtCenterIsConstantTerm) {
  MonomialPoly p(2, {0.3, -0.7});
  p.add_term(MultiIndex({0, 0}), 4.0);
  p.add_term(MultiIndex({1, 2}), 2.5);
  const double pt[] = {0.3, -0.7};
  EXPECT_EQ(p.eval(pt), Complex(4.0));
}

TEST(MonomialPolyTest, ZeroCoefficientsArePruned) {
  MonomialPoly p = x(2, 0);
  p.add_term(MultiIndex({1, 0}), -1.0);
  EXPECT_TRUE(p.is_zero());
  EXPECT_EQ(p.total_degree(), 0);
}

TEST(RecenterTest, BinomialIdentity) {
  const MonomialPoly p = x(1, 0) * x(1, 0);
  const double c1[] = {1.0};
  const MonomialPoly q = recenter(p, c1);
  EXPECT_EQ(q.center()[0], 1.0);
  EXPECT_EQ(q.coefficient(MultiIndex({0})), Complex(1.0));
  EXPECT_EQ(q.coefficient(MultiIndex({1})), Complex(2.0));
  EXPECT_EQ(q.coefficient(MultiIndex({2})), Complex(1.0));
  EXPECT_EQ(q.terms().size(), 3u);
}

TEST(RecenterTest, SaddleOfExample4) {
  // F2 = -2 x1 + x1^3/3 - x2 vanishes at (sqrt 6, 0).
  const MonomialPoly f2 = Complex(-2.0) * x(2, 0) +
                          Complex(1.0 / 3.0) * (x(2, 0) * x(2, 0) * x(2, 0)) -
                          x(2, 1);
  const double c[] = {std::sqrt(6.0), 0.0};
  const MonomialPoly q = recenter(f2, c);
  EXPECT_NEAR(std::abs(q.coefficient(MultiIndex::zero(2))), 0.0, 1e-14);
  EXPECT_EQ(q.total_degree(), 3);
}

TEST(RecenterTest, PointwiseEqualityOnRandomPolys) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const MonomialPoly p = random_poly(rng, 2, 3);
    const double c[] = {u(rng), u(rng)};
    const MonomialPoly q = recenter(p, c);
    EXPECT_EQ(q.total_degree(), p.total_degree());
    for (int i = 0; i < 20; ++i) {
      const double pt[] = {u(rng), u(rng)};
      const Complex a = p.eval(pt);
      EXPECT_LT(std::abs(q.eval(pt) - a), 1e-12 * std::max(1.0, std::abs(a)));
    }
  }
  const double bad[] = {1.0};
  EXPECT_THROW(recenter(x(2, 0), bad), DimensionMismatch);
}

TEST(PartialDerivativeTest, PowerRule) {
  const MonomialPoly p = MonomialPoly::monomial(MultiIndex({2, 1}), 1.0);
  const MonomialPoly d = partial_derivative(p, 0);
  EXPECT_EQ(d, MonomialPoly::monomial(MultiIndex({1, 1}), 2.0));
  EXPECT_TRUE(partial_derivative(c(2, 3.0), 1).is_zero());

  // d/dx2 of x1 - x2 + x1^2 x2 is -1 + x1^2.
  const MonomialPoly f2 = x(2, 0) - x(2, 1) + x(2, 0) * x(2, 0) * x(2, 1);
  const MonomialPoly expected = c(2, -1.0) + x(2, 0) * x(2, 0);
  EXPECT_EQ(partial_derivative(f2, 1), expected);
  EXPECT_THROW(partial_derivative(f2, 2), AxisOutOfRange);
  EXPECT_THROW(partial_derivative(f2, -1), AxisOutOfRange);
}

TEST(PartialDerivativeTest, MixedPartialsCommute) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const MonomialPoly p = random_poly(rng, 3, 4);
    EXPECT_EQ(partial_derivative(partial_derivative(p, 0), 2),
              partial_derivative(partial_derivative(p, 2), 0));
  }
}

TEST(MultiplyTest, Examples) {
  const MonomialPoly p = x(1, 0) * (c(1, 1.0) - x(1, 0));
  EXPECT_EQ(p, x(1, 0) - x(1, 0) * x(1, 0));
  EXPECT_TRUE((p * MonomialPoly(1)).is_zero());

  const double c1[] = {1.0};
  EXPECT_THROW(multiply(recenter(x(1, 0), c1), x(1, 0)), CenterMismatch);
}

TEST(MultiplyTest, PointwiseAndAlgebraicLaws) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 10; ++trial) {
    const MonomialPoly p = random_poly(rng, 2, 3);
    const MonomialPoly q = random_poly(rng, 2, 3);
    const MonomialPoly r = random_poly(rng, 2, 2);
    const MonomialPoly pq = p * q;
    EXPECT_EQ(pq.total_degree(), p.total_degree() + q.total_degree());
    for (int i = 0; i < 20; ++i) {
      const double pt[] = {u(rng), u(rng)};
      const Complex expected = p.eval(pt) * q.eval(pt);
      EXPECT_LT(std::abs(pq.eval(pt) - expected),
                1e-12 * std::max(1.0, std::abs(expected)));
    }
    const MonomialPoly qp = q * p;
    EXPECT_EQ(pq.terms().size(), qp.terms().size());
    for (const auto& [k, v] : pq.terms()) {
      EXPECT_LT(std::abs(v - qp.coefficient(k)), 1e-14);
    }
    const MonomialPoly lhs = p * (q + r);
    const MonomialPoly rhs = p * q + p * r;
    for (const auto& [k, v] : lhs.terms()) {
      EXPECT_LT(std::abs(v - rhs.coefficient(k)), 1e-13);
    }
    EXPECT_EQ(lhs.terms().size(), rhs.terms().size());
  }
}

TEST(AffineSubstituteTest, MatchesComposition) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const MonomialPoly p = random_poly(rng, 2, 3);
  const double offset[] = {-2.0, -1.0};
  const double scale[] = {4.0, 3.0};
  const MonomialPoly q = affine_substitute(p, offset, scale);
  EXPECT_EQ(q.center()[0], 0.0);
  for (int i = 0; i < 20; ++i) {
    const double uu[] = {u(rng), u(rng)};
    const double xx[] = {offset[0] + scale[0] * uu[0], offset[1] + scale[1] * uu[1]};
    EXPECT_LT(std::abs(q.eval(uu) - p.eval(xx)), 1e-12 * std::max(1.0, std::abs(p.eval(xx))));
  }
}

TEST(MonomialPolyTest, ComplexEvalAndConjugate) {
  MonomialPoly p(1);
  p.add_term(MultiIndex({1}), Complex(0.0, 2.0));
  const Complex z[] = {Complex(1.0, 1.0)};
  EXPECT_EQ(p.eval(std::span<const Complex>(z)), Complex(-2.0, 2.0));
  EXPECT_EQ(conj(p).coefficient(MultiIndex({1})), Complex(0.0, -2.0));
  EXPECT_FALSE(p.is_real());
  EXPECT_TRUE((p + conj(p)).is_real());
}

}  // namespace
}  // namespace koopman
