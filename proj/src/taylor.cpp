#include "koopman/taylor.hpp"

#include <cmath>
#include <map>

#include "koopman/errors.hpp"

namespace koopman {

namespace {

struct GradedIndex {
  std::vector<MultiIndex> indices;
  std::map<MultiIndex, int, GradedLexLess> position;

  GradedIndex(int dimension, int degree)
      : indices(multi_indices_of_degree(dimension, degree)) {
    for (int i = 0; i < static_cast<int>(indices.size()); ++i) position[indices[i]] = i;
  }
};

MultiIndex shift(const MultiIndex& k, int from, int to) {
  std::vector<int> e(k.exponents().begin(), k.exponents().end());
  --e[from];
  ++e[to];
  return MultiIndex(std::move(e));
}

}  // namespace

TaylorEigenfunction solve_taylor(const DynamicalSystem& sys,
                                 const SpectrumReport& spec, int eig_index,
                                 int max_order) {
  const int n = sys.dimension();
  if (eig_index < 0 || eig_index >= spec.eigenvalues.size()) {
    throw IndexOutOfRange("eigenvalue index " + std::to_string(eig_index) +
                          " out of range");
  }
  if (max_order < 1) throw Error("Taylor order must be at least 1");
  const std::span<const double> center(spec.fixed_point.data(), n);

  // Field about x* split into its linear part J and homogeneous nonlinear
  // parts of degree 2 … deg F. The constant part vanishes at a fixed point.
  const std::vector<double> center_vec(center.begin(), center.end());
  std::vector<std::vector<MonomialPoly>> nonlinear(n);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int l = 0; l < n; ++l) {
    const MonomialPoly f = recenter(sys.components()[l], center);
    for (int j = 0; j < n; ++j) jac(l, j) = f.coefficient(MultiIndex::unit(n, j)).real();
    nonlinear[l].assign(f.total_degree() + 1, MonomialPoly(n, center_vec));
    for (int d = 2; d <= f.total_degree(); ++d) nonlinear[l][d] = f.homogeneous_part(d);
  }

  const Complex lambda = spec.eigenvalues(eig_index);
  TaylorEigenfunction ef;
  ef.center = spec.fixed_point;
  ef.eigenvalue = lambda;
  ef.max_order = max_order;
  ef.gradient_seed = spec.left_eigenvectors.col(eig_index);
  ef.coeffs = MonomialPoly(n, center_vec);

  // Homogeneous parts φ_t and their gradients, t ≥ 1.
  std::vector<std::vector<MonomialPoly>> grad(max_order + 1);
  {
    MonomialPoly phi1 = ef.coeffs;
    for (int j = 0; j < n; ++j) phi1.add_term(MultiIndex::unit(n, j), ef.gradient_seed(j));
    ef.coeffs += phi1;
    for (int l = 0; l < n; ++l) grad[1].push_back(partial_derivative(phi1, l));
  }

  for (int s = 2; s <= max_order; ++s) {
    const GradedIndex idx(n, s);
    const int m = static_cast<int>(idx.indices.size());

    // V⁽ˢ⁾: degree-s part of Σ_l N_l ∂_l φ_{<s}.
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(m);
    for (int l = 0; l < n; ++l) {
      for (int d = 2; d < static_cast<int>(nonlinear[l].size()); ++d) {
        const int t = s - d + 1;
        if (t < 1 || nonlinear[l][d].is_zero()) continue;
        const MonomialPoly prod = multiply(nonlinear[l][d], grad[t][l]);
        for (const auto& [k, c] : prod.terms()) v(idx.position.at(k)) += c;
      }
    }

    // H⁽ˢ⁾: action of the linear part Σ_l (J x)_l ∂_l on degree-s monomials.
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(m, m);
    for (int col = 0; col < m; ++col) {
      const MultiIndex& k = idx.indices[col];
      for (int l = 0; l < n; ++l) {
        if (k[l] == 0) continue;
        for (int j = 0; j < n; ++j) {
          if (jac(l, j) == 0.0) continue;
          h(idx.position.at(shift(k, l, j)), col) += static_cast<double>(k[l]) * jac(l, j);
        }
      }
    }
    h.diagonal().array() -= lambda;

    const double gap = resonance_gap(spec.eigenvalues, eig_index, s);
    if (gap < kNearResonanceGap) {
      ef.warnings.push_back("near resonance at order " + std::to_string(s) +
                            " (gap " + std::to_string(gap) + ")");
    }
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(h);
    const double rcond = lu.rcond();
    if (!(rcond * kResonanceConditionLimit > 1.0)) {
      throw ResonanceError("resonant Taylor system at order " + std::to_string(s), s);
    }
    const Eigen::VectorXcd phi = lu.solve(-v);
    if (!phi.allFinite()) throw NonFiniteError("non-finite Taylor coefficients at order " + std::to_string(s));

    MonomialPoly part(n, center_vec);
    for (int i = 0; i < m; ++i) part.add_term(idx.indices[i], phi(i));
    ef.coeffs += part;
    for (int l = 0; l < n; ++l) grad[s].push_back(partial_derivative(part, l));
  }
  return ef;
}

Complex eval_taylor(const TaylorEigenfunction& ef, std::span<const double> x,
                    std::optional<int> order) {
  const int n = static_cast<int>(ef.center.size());
  if (static_cast<int>(x.size()) != n) throw DimensionMismatch("point dimension mismatch");
  const int top = order.value_or(ef.max_order);
  std::vector<std::vector<double>> powers(n, std::vector<double>(top + 1, 1.0));
  for (int i = 0; i < n; ++i) {
    const double d = x[i] - ef.center(i);
    for (int k = 1; k <= top; ++k) powers[i][k] = powers[i][k - 1] * d;
  }
  Complex sum = 0.0;
  for (const auto& [k, c] : ef.coeffs.terms()) {
    if (k.total_degree() > top) break;  // graded order
    double mono = 1.0;
    for (int i = 0; i < n; ++i) mono *= powers[i][k[i]];
    sum += c * mono;
  }
  return sum;
}

double estimate_radius(const TaylorEigenfunction& ef) {
  if (ef.max_order < 4) throw Error("radius estimate needs max_order ≥ 4");
  const int n = static_cast<int>(ef.center.size());
  std::vector<double> norm2(ef.max_order + 1, 0.0);
  for (const auto& [k, c] : ef.coeffs.terms()) {
    const int s = k.total_degree();
    // k!/s! = 1 / multinomial(s; k).
    double log_w = -std::lgamma(s + 1.0);
    for (int i = 0; i < n; ++i) log_w += std::lgamma(k[i] + 1.0);
    norm2[s] += std::norm(c) * std::exp(log_w);
  }
  // Least-squares line through (s, log ‖P_s‖) over the top half of orders.
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int s = ef.max_order / 2; s <= ef.max_order; ++s) {
    const double nrm = std::sqrt(norm2[s]);
    if (s < 1 || !(nrm > 1e-300)) continue;
    const double y = std::log(nrm);
    sw += 1;
    sx += s;
    sy += y;
    sxx += double(s) * s;
    sxy += s * y;
  }
  if (sw < 2) return INFINITY;
  const double slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
  return std::exp(-slope);
}

TaylorEigenfunction product_eigenfunction(std::span<const TaylorEigenfunction> efs,
                                          std::span<const int> powers) {
  if (efs.empty() || efs.size() != powers.size()) {
    throw DimensionMismatch("one power per eigenfunction is required");
  }
  int total = 0;
  for (int p : powers) {
    if (p < 0) throw Error("powers must be nonnegative");
    total += p;
  }
  if (total < 1) throw Error("powers must sum to at least 1");
  const TaylorEigenfunction& first = efs.front();
  const int n = static_cast<int>(first.center.size());
  TaylorEigenfunction out;
  out.center = first.center;
  out.max_order = first.max_order;
  out.eigenvalue = 0.0;
  for (std::size_t i = 0; i < efs.size(); ++i) {
    if (efs[i].center != first.center) throw CenterMismatch("eigenfunctions have different centers");
    out.max_order = std::min(out.max_order, efs[i].max_order);
    out.eigenvalue += static_cast<double>(powers[i]) * efs[i].eigenvalue;
  }
  const std::vector<double> c(first.center.data(), first.center.data() + n);
  MonomialPoly prod(n, c);
  prod.add_term(MultiIndex::zero(n), 1.0);
  for (std::size_t i = 0; i < efs.size(); ++i) {
    for (int p = 0; p < powers[i]; ++p) {
      prod = multiply(prod, efs[i].coeffs).truncated(out.max_order);
    }
  }
  out.coeffs = std::move(prod);
  out.gradient_seed = Eigen::VectorXcd::Zero(n);
  if (total == 1) {
    for (std::size_t i = 0; i < efs.size(); ++i) {
      if (powers[i] == 1) out.gradient_seed = efs[i].gradient_seed;
    }
  }
  return out;
}

TaylorEigenfunction conjugate(const TaylorEigenfunction& ef) {
  TaylorEigenfunction out = ef;
  out.eigenvalue = std::conj(ef.eigenvalue);
  out.coeffs = conj(ef.coeffs);
  out.gradient_seed = ef.gradient_seed.conjugate();
  return out;
}

double taylor_pde_residual(const DynamicalSystem& sys, const TaylorEigenfunction& ef,
                           std::span<const Eigen::VectorXd> points) {
  const int n = sys.dimension();
  std::vector<MonomialPoly> grad;
  for (int l = 0; l < n; ++l) grad.push_back(partial_derivative(ef.coeffs, l));
  double worst = 0.0;
  for (const auto& x : points) {
    const std::span<const double> pt(x.data(), n);
    const Eigen::VectorXd f = sys.eval(x);
    Complex lhs = 0.0;
    for (int l = 0; l < n; ++l) lhs += f(l) * grad[l].eval(pt);
    worst = std::max(worst, std::abs(lhs - ef.eigenvalue * ef.coeffs.eval(pt)));
  }
  return worst;
}

}  // namespace koopman
