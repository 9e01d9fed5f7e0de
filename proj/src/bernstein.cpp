#include "koopman/bernstein.hpp"

#include <algorithm>
#include <unsupported/Eigen/KroneckerProduct>
#include <vector>

#include "koopman/binomial.hpp"
#include "koopman/errors.hpp"

namespace koopman {

namespace {

void check_degree(int degree) {
  if (degree < 0) throw Error("Bernstein degree must be nonnegative");
  if (degree > kMaxBinomialDegree) {
    throw DegreeOverflow("Bernstein degree " + std::to_string(degree) +
                             " exceeds the cap " +
                             std::to_string(kMaxBinomialDegree),
                         -1);
  }
}

SparseMatrixR identity(Eigen::Index n) {
  SparseMatrixR id(n, n);
  id.setIdentity();
  return id;
}

// Left fold of Kronecker products over the given factors.
template <typename Scalar>
Eigen::SparseMatrix<Scalar> kron_all(
    const std::vector<Eigen::SparseMatrix<Scalar>>& factors) {
  Eigen::SparseMatrix<Scalar> out = factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) {
    Eigen::SparseMatrix<Scalar> next = Eigen::kroneckerProduct(out, factors[i]);
    out = std::move(next);
  }
  return out;
}

}  // namespace

BernsteinVector1D::BernsteinVector1D(int degree, Eigen::VectorXcd coeffs)
    : degree(degree), coeffs(std::move(coeffs)) {
  if (this->coeffs.size() != degree + 1) {
    throw DimensionMismatch("Bernstein vector of degree " +
                            std::to_string(degree) + " needs " +
                            std::to_string(degree + 1) + " coefficients");
  }
}

Complex BernsteinVector1D::eval(double x) const {
  return eval_basis_1d(degree, x).cast<Complex>().dot(coeffs);
}

Eigen::Index tensor_size(int degree, int dimension) {
  Eigen::Index n = 1;
  for (int i = 0; i < dimension; ++i) n *= degree + 1;
  return n;
}

TensorBernsteinVector::TensorBernsteinVector(int dimension, int degree)
    : dimension_(dimension),
      degree_(degree),
      coeffs_(Eigen::VectorXcd::Zero(tensor_size(degree, dimension))) {}

TensorBernsteinVector::TensorBernsteinVector(int dimension, int degree,
                                             Eigen::VectorXcd coeffs)
    : dimension_(dimension), degree_(degree), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != tensor_size(degree, dimension)) {
    throw DimensionMismatch("tensor Bernstein vector needs (s+1)^N = " +
                            std::to_string(tensor_size(degree, dimension)) +
                            " coefficients, got " +
                            std::to_string(coeffs_.size()));
  }
}

Complex TensorBernsteinVector::eval(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dimension_) {
    throw DimensionMismatch("evaluation point dimension mismatch");
  }
  // Contract the last axis first: coefficients viewed as a
  // (s+1)^{N-1} x (s+1) row-major array.
  const Eigen::Index m = degree_ + 1;
  Eigen::VectorXcd current = coeffs_;
  for (int axis = dimension_ - 1; axis >= 0; --axis) {
    const Eigen::VectorXcd b = eval_basis_1d(degree_, x[axis]).cast<Complex>();
    const Eigen::Index rows = current.size() / m;
    Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        view(current.data(), rows, m);
    Eigen::VectorXcd next = view * b;
    current = std::move(next);
  }
  return current(0);
}

Eigen::VectorXcd TensorBernsteinVector::gradient(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dimension_) {
    throw DimensionMismatch("evaluation point dimension mismatch");
  }
  const Eigen::MatrixXd g = eval_tensor_basis_gradient(degree_, x);
  return g.cast<Complex>().transpose() * coeffs_;
}

Eigen::VectorXd eval_basis_1d(int degree, double x) {
  check_degree(degree);
  Eigen::VectorXd b(degree + 1);
  double p = 1.0;
  for (int j = 0; j <= degree; ++j) {
    b(j) = binomial(degree, j) * p;
    p *= x;
  }
  p = 1.0;
  for (int j = degree; j >= 0; --j) {
    b(j) *= p;
    p *= 1.0 - x;
  }
  return b;
}

Eigen::VectorXd eval_basis_derivative_1d(int degree, double x) {
  return diff_matrix_1d(degree).transpose() * eval_basis_1d(degree, x);
}

Eigen::VectorXd eval_tensor_basis(int degree, std::span<const double> x) {
  Eigen::VectorXd out = Eigen::VectorXd::Ones(1);
  for (double xi : x) {
    const Eigen::VectorXd b = eval_basis_1d(degree, xi);
    Eigen::VectorXd next = Eigen::kroneckerProduct(out, b);
    out = std::move(next);
  }
  return out;
}

Eigen::MatrixXd eval_tensor_basis_gradient(int degree, std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  std::vector<Eigen::VectorXd> values(n);
  std::vector<Eigen::VectorXd> slopes(n);
  for (int i = 0; i < n; ++i) {
    values[i] = eval_basis_1d(degree, x[i]);
    slopes[i] = eval_basis_derivative_1d(degree, x[i]);
  }
  Eigen::MatrixXd grad(tensor_size(degree, n), n);
  for (int l = 0; l < n; ++l) {
    Eigen::VectorXd col = Eigen::VectorXd::Ones(1);
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd next =
          Eigen::kroneckerProduct(col, i == l ? slopes[i] : values[i]);
      col = std::move(next);
    }
    grad.col(l) = col;
  }
  return grad;
}

SparseMatrixR diff_matrix_1d(int degree) {
  check_degree(degree);
  const int s = degree;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(3 * (s + 1));
  // 1-based (i, j) as in the three-band rule.
  for (int i = 1; i <= s + 1; ++i) {
    if (i + 1 <= s + 1 && s - i + 1 != 0) t.emplace_back(i - 1, i, s - i + 1);
    if (-s + 2 * (i - 1) != 0) t.emplace_back(i - 1, i - 1, -s + 2 * (i - 1));
    if (i - 1 >= 1) t.emplace_back(i - 1, i - 2, -i + 1);
  }
  SparseMatrixR d(s + 1, s + 1);
  d.setFromTriplets(t.begin(), t.end());
  return d;
}

SparseMatrixR mult_basis_matrix_1d(int k, int degree, int q_degree) {
  check_degree(degree + q_degree);
  if (k < 0 || k > q_degree) throw IndexOutOfRange("basis index out of range");
  const int s = degree;
  const int sq = q_degree;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(s + 1);
  for (int j = 0; j <= s; ++j) {
    const int i = j + k;
    t.emplace_back(i, j, binomial(s, j) * binomial(sq, k) / binomial(s + sq, i));
  }
  SparseMatrixR m(s + sq + 1, s + 1);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseMatrixC mult_matrix_1d(const BernsteinVector1D& q, int degree) {
  const int s = degree;
  const int sq = q.degree;
  check_degree(s + sq);
  std::vector<Eigen::Triplet<Complex>> t;
  // 1-based: M_ij = Q_{i-j+1} C(s,j-1) C(s',i-j) / C(s+s',i-1) on the band
  // j ∈ [max(1, i-s'), min(s+1, i)].
  for (int i = 1; i <= s + sq + 1; ++i) {
    for (int j = std::max(1, i - sq); j <= std::min(s + 1, i); ++j) {
      const Complex qv = q.coeffs(i - j);
      if (qv == Complex{}) continue;
      t.emplace_back(i - 1, j - 1,
                     qv * binomial(s, j - 1) * binomial(sq, i - j) /
                         binomial(s + sq, i - 1));
    }
  }
  SparseMatrixC m(s + sq + 1, s + 1);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseMatrixR raise_matrix_1d(int degree, int r) {
  if (r < 0) throw Error("degree raising amount must be nonnegative");
  const int s = degree;
  check_degree(s + r);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve((s + 1) * (r + 1));
  for (int j = 0; j <= s; ++j) {
    for (int m = 0; m <= r; ++m) {
      const int i = j + m;
      t.emplace_back(i, j, binomial(s, j) * binomial(r, m) / binomial(s + r, i));
    }
  }
  SparseMatrixR out(s + r + 1, s + 1);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

SparseMatrixR tensor_diff_matrix(int axis, int degree, int dimension) {
  if (axis < 0 || axis >= dimension) {
    throw AxisOutOfRange("axis " + std::to_string(axis) +
                         " out of range for dimension " +
                         std::to_string(dimension));
  }
  std::vector<SparseMatrixR> factors;
  for (int i = 0; i < dimension; ++i) {
    factors.push_back(i == axis ? diff_matrix_1d(degree) : identity(degree + 1));
  }
  return kron_all(factors);
}

SparseMatrixC tensor_mult_matrix(const TensorBernsteinVector& q, int degree) {
  const int n = q.dimension();
  const int sq = q.degree();
  std::vector<SparseMatrixR> basis;
  for (int k = 0; k <= sq; ++k) basis.push_back(mult_basis_matrix_1d(k, degree, sq));

  const Eigen::Index rows = tensor_size(degree + sq, n);
  const Eigen::Index cols = tensor_size(degree, n);
  SparseMatrixC out(rows, cols);
  std::vector<int> k(n, 0);
  for (Eigen::Index idx = 0; idx < q.size(); ++idx) {
    // Decode the Kronecker index: axis 0 slowest.
    Eigen::Index rem = idx;
    for (int axis = n - 1; axis >= 0; --axis) {
      k[axis] = static_cast<int>(rem % (sq + 1));
      rem /= sq + 1;
    }
    const Complex qv = q.coeffs()(idx);
    if (qv == Complex{}) continue;
    std::vector<SparseMatrixR> factors;
    for (int axis = 0; axis < n; ++axis) factors.push_back(basis[k[axis]]);
    out += qv * kron_all(factors).cast<Complex>();
  }
  return out;
}

SparseMatrixR tensor_raise_matrix(int degree, int r, int dimension) {
  std::vector<SparseMatrixR> factors(dimension, raise_matrix_1d(degree, r));
  return kron_all(factors);
}

TensorBernsteinVector monomial_to_bernstein(const MonomialPoly& p, int degree) {
  const int n = p.dimension();
  const bool centered =
      std::all_of(p.center().begin(), p.center().end(),
                  [](double c) { return c == 0.0; });
  const MonomialPoly q =
      centered ? p : recenter(p, std::vector<double>(n, 0.0));
  for (int axis = 0; axis < n; ++axis) {
    if (q.degree_in(axis) > degree) {
      throw DegreeOverflow("degree " + std::to_string(q.degree_in(axis)) +
                               " on axis " + std::to_string(axis + 1) +
                               " exceeds Bernstein degree " +
                               std::to_string(degree),
                           axis);
    }
  }
  // x^k = Σ_j [C(j,k)/C(s,k)] b_{j+1}^s(x).
  std::vector<Eigen::VectorXd> power_coeffs(degree + 1);
  for (int k = 0; k <= degree; ++k) {
    power_coeffs[k] = Eigen::VectorXd::Zero(degree + 1);
    for (int j = k; j <= degree; ++j) {
      power_coeffs[k](j) = binomial(j, k) / binomial(degree, k);
    }
  }
  TensorBernsteinVector out(n, degree);
  for (const auto& [k, c] : q.terms()) {
    Eigen::VectorXd term = Eigen::VectorXd::Ones(1);
    for (int axis = 0; axis < n; ++axis) {
      Eigen::VectorXd next = Eigen::kroneckerProduct(term, power_coeffs[k[axis]]);
      term = std::move(next);
    }
    out.coeffs() += c * term.cast<Complex>();
  }
  return out;
}

}  // namespace koopman
