#include "koopman/bernstein_fp.hpp"

#include <cmath>

#include "koopman/errors.hpp"
#include "koopman/least_squares.hpp"

namespace koopman {

int field_bernstein_degree(const DynamicalSystem& sys_box) {
  int sp = 0;
  for (const MonomialPoly& f : sys_box.components()) {
    for (int axis = 0; axis < sys_box.dimension(); ++axis) sp = std::max(sp, f.degree_in(axis));
  }
  return sp;
}

FpSystem assemble_fp_system(const DynamicalSystem& sys_box,
                            const SpectrumReport& spec_box, int eig_index,
                            int degree, const FpOptions& options) {
  const int n = sys_box.dimension();
  if (eig_index < 0 || eig_index >= spec_box.eigenvalues.size()) {
    throw IndexOutOfRange("eigenvalue index " + std::to_string(eig_index) + " out of range");
  }
  if (degree < 1) throw Error("Bernstein degree must be at least 1");
  if (spec_box.fixed_point.size() != n) throw DimensionMismatch("spectrum dimension mismatch");
  if ((spec_box.fixed_point.array() < 0.0).any() || (spec_box.fixed_point.array() > 1.0).any()) {
    throw Error("fixed point lies outside the box");
  }

  FpSystem sys;
  sys.dimension = n;
  sys.degree = degree;
  sys.field_degree = field_bernstein_degree(sys_box);
  sys.eigenvalue = spec_box.eigenvalues(eig_index);
  sys.fixed_point_box = spec_box.fixed_point;

  // Σ_l M̄(F_l) D̄^l − λ T̄^{s,s'}, all in the degree s+s' basis.
  SparseMatrixC pde =
      -sys.eigenvalue * SparseMatrixC(tensor_raise_matrix(degree, sys.field_degree, n).cast<Complex>());
  for (int l = 0; l < n; ++l) {
    const TensorBernsteinVector q = monomial_to_bernstein(sys_box.components()[l], sys.field_degree);
    if (q.coeffs().isZero(0.0)) continue;
    const SparseMatrixC d = tensor_diff_matrix(l, degree, n).cast<Complex>();
    pde += SparseMatrixC(tensor_mult_matrix(q, degree) * d);
  }
  pde.prune(Complex(0.0));
  sys.pde_rows = static_cast<int>(pde.rows());
  sys.constraint_weight = options.constraint_weight.value_or(std::sqrt(double(sys.pde_rows)));

  const std::span<const double> u(sys.fixed_point_box.data(), n);
  const Eigen::VectorXd basis = eval_tensor_basis(degree, u);
  const Eigen::MatrixXd grad = eval_tensor_basis_gradient(degree, u);
  const double wt = sys.constraint_weight;

  std::vector<Eigen::Triplet<Complex>> trip;
  trip.reserve(pde.nonZeros() + basis.size() * (n + 1));
  for (int k = 0; k < pde.outerSize(); ++k) {
    for (SparseMatrixC::InnerIterator it(pde, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  }
  for (Eigen::Index j = 0; j < basis.size(); ++j) {
    if (basis(j) != 0.0) trip.emplace_back(sys.pde_rows, j, wt * basis(j));
    for (int l = 0; l < n; ++l) {
      if (grad(j, l) != 0.0) trip.emplace_back(sys.pde_rows + 1 + l, j, wt * grad(j, l));
    }
  }
  sys.a.resize(sys.pde_rows + 1 + n, pde.cols());
  sys.a.setFromTriplets(trip.begin(), trip.end());

  sys.b = Eigen::VectorXcd::Zero(sys.a.rows());
  sys.b.tail(n) = wt * spec_box.left_eigenvectors.col(eig_index);
  return sys;
}

BernsteinEigenfunction solve_fp(const FpSystem& system, const BoxMap& box,
                                const FpOptions& options) {
  if (box.dimension() != system.dimension) throw DimensionMismatch("box dimension mismatch");
  bool real = system.b.imag().isZero(0.0);
  for (int k = 0; real && k < system.a.outerSize(); ++k) {
    for (SparseMatrixC::InnerIterator it(system.a, k); it; ++it) {
      if (it.value().imag() != 0.0) {
        real = false;
        break;
      }
    }
  }
  LeastSquaresSolution sol;
  if (real) {
    const SparseMatrixR a = system.a.real();
    sol = solve_least_squares(Eigen::MatrixXd(a), Eigen::VectorXd(system.b.real()), options.rcond);
  } else {
    sol = solve_least_squares(Eigen::MatrixXcd(system.a), system.b, options.rcond);
  }

  BernsteinEigenfunction ef;
  ef.box = box;
  ef.degree = system.degree;
  ef.eigenvalue = system.eigenvalue;
  ef.coeffs = TensorBernsteinVector(system.dimension, system.degree, sol.x);
  ef.lsq_residual = sol.relative_residual;
  ef.fixed_point_box = system.fixed_point_box;
  ef.rank = sol.rank;
  ef.certified = sol.relative_residual <= options.certify_threshold;
  return ef;
}

BernsteinEigenfunction compute_bernstein_eigenfunction(
    const DynamicalSystem& sys, const SpectrumReport& spec, int eig_index,
    const BoxMap& box, int degree, const FpOptions& options) {
  const DynamicalSystem sys_box = pull_back_field(sys, box);
  const SpectrumReport spec_box = spectrum_in_box(spec, box);
  return solve_fp(assemble_fp_system(sys_box, spec_box, eig_index, degree, options), box, options);
}

BernsteinValue eval_bernstein(const BernsteinEigenfunction& ef, std::span<const double> x) {
  const int n = ef.box.dimension();
  if (static_cast<int>(x.size()) != n) throw DimensionMismatch("point dimension mismatch");
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
  const Eigen::VectorXd u = ef.box.to_unit(xv);
  return {ef.coeffs.eval(std::span<const double>(u.data(), n)), !ef.box.contains(xv)};
}

Eigen::VectorXcd eval_bernstein_gradient(const BernsteinEigenfunction& ef,
                                         std::span<const double> x) {
  const int n = ef.box.dimension();
  if (static_cast<int>(x.size()) != n) throw DimensionMismatch("point dimension mismatch");
  const Eigen::VectorXd u = ef.box.to_unit(Eigen::Map<const Eigen::VectorXd>(x.data(), n));
  const Eigen::VectorXcd g = ef.coeffs.gradient(std::span<const double>(u.data(), n));
  return g.cwiseQuotient(ef.box.widths().cast<Complex>());
}

}  // namespace koopman
