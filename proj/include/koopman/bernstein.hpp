#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <span>

#include "koopman/polynomial.hpp"

namespace koopman {

using SparseMatrixR = Eigen::SparseMatrix<double>;
using SparseMatrixC = Eigen::SparseMatrix<Complex>;

// Σ_j coeffs[j] b_{j+1}^s(x) with b_{j+1}^s(x) = C(s,j) x^j (1-x)^{s-j}.
struct BernsteinVector1D {
  int degree = 0;
  Eigen::VectorXcd coeffs;

  BernsteinVector1D() = default;
  BernsteinVector1D(int degree, Eigen::VectorXcd coeffs);

  Complex eval(double x) const;
};

// Coefficients in the Kronecker basis b^s(x_1) ⊗ ... ⊗ b^s(x_N); axis 1 is the
// slowest-varying index.
class TensorBernsteinVector {
 public:
  TensorBernsteinVector(int dimension, int degree);
  TensorBernsteinVector(int dimension, int degree, Eigen::VectorXcd coeffs);

  int dimension() const { return dimension_; }
  int degree() const { return degree_; }
  const Eigen::VectorXcd& coeffs() const { return coeffs_; }
  Eigen::VectorXcd& coeffs() { return coeffs_; }
  Eigen::Index size() const { return coeffs_.size(); }

  Complex eval(std::span<const double> x) const;
  Eigen::VectorXcd gradient(std::span<const double> x) const;

 private:
  int dimension_;
  int degree_;
  Eigen::VectorXcd coeffs_;
};

// Number of coefficients (s+1)^N.
Eigen::Index tensor_size(int degree, int dimension);

Eigen::VectorXd eval_basis_1d(int degree, double x);
// d/dx of the basis vector, i.e. (D^s)^T b^s(x).
Eigen::VectorXd eval_basis_derivative_1d(int degree, double x);
Eigen::VectorXd eval_tensor_basis(int degree, std::span<const double> x);
// (s+1)^N x N matrix whose column l is ∂B^s/∂x_l.
Eigen::MatrixXd eval_tensor_basis_gradient(int degree, std::span<const double> x);

// Differentiation D^s: coefficients of dp/dx in the same degree-s basis.
SparseMatrixR diff_matrix_1d(int degree);

// Multiplication by the single basis polynomial b_{k+1}^{s'}: the
// (s+s'+1) x (s+1) matrix with the one band j = i - k.
SparseMatrixR mult_basis_matrix_1d(int k, int degree, int q_degree);

// Multiplication by q = Q^T b^{s'}: (s+s'+1) x (s+1).
SparseMatrixC mult_matrix_1d(const BernsteinVector1D& q, int degree);

// Degree raising T^{s,r}: (s+r+1) x (s+1). r = 0 gives the identity.
SparseMatrixR raise_matrix_1d(int degree, int r);

// I ⊗ ... ⊗ D^s (slot `axis`, 0-based) ⊗ ... ⊗ I.
SparseMatrixR tensor_diff_matrix(int axis, int degree, int dimension);

// Σ_k q_k M^{k_1} ⊗ ... ⊗ M^{k_N}, accumulated in Kronecker order of q.
SparseMatrixC tensor_mult_matrix(const TensorBernsteinVector& q, int degree);

// N-fold Kronecker power of T^{s,r}.
SparseMatrixR tensor_raise_matrix(int degree, int r, int dimension);

// Exact conversion of a monomial polynomial on [0,1]^N to tensor Bernstein
// form of degree s per axis. Throws DegreeOverflow naming the offending axis.
TensorBernsteinVector monomial_to_bernstein(const MonomialPoly& p, int degree);

}  // namespace koopman
