#include "koopman/system.hpp"

#include <algorithm>
#include <cmath>

#include "koopman/errors.hpp"

namespace koopman {

namespace detail {

// Flat term list of one polynomial for fast real evaluation.
struct CompiledComponent {
  std::vector<int> exponents;  // term-major, dimension entries per term
  std::vector<double> coeffs;
  int max_degree = 0;
};

}  // namespace detail

struct DynamicalSystem::Compiled {
  using Component = detail::CompiledComponent;
  std::vector<Component> values;
  std::vector<std::vector<Component>> derivatives;  // [l][j] = ∂F_l/∂x_j
  int stride = 1;  // highest per-axis exponent + 1

  // Power table x_i^k at index i * stride + k, reused across calls.
  const std::vector<double>& powers(const double* x, int n) const {
    thread_local std::vector<double> table;
    table.resize(static_cast<std::size_t>(n) * stride);
    for (int i = 0; i < n; ++i) {
      table[i * stride] = 1.0;
      for (int k = 1; k < stride; ++k) table[i * stride + k] = table[i * stride + k - 1] * x[i];
    }
    return table;
  }
};

namespace {

detail::CompiledComponent compile(const MonomialPoly& p) {
  detail::CompiledComponent c;
  for (const auto& [k, v] : p.terms()) {
    for (int e : k.exponents()) {
      c.exponents.push_back(e);
      c.max_degree = std::max(c.max_degree, e);
    }
    c.coeffs.push_back(v.real());
  }
  return c;
}

double eval_compiled(const detail::CompiledComponent& c, int n,
                     const std::vector<double>& powers, int stride) {
  double sum = 0.0;
  for (std::size_t t = 0; t < c.coeffs.size(); ++t) {
    double term = c.coeffs[t];
    const int* e = &c.exponents[t * n];
    for (int i = 0; i < n; ++i) term *= powers[i * stride + e[i]];
    sum += term;
  }
  return sum;
}

}  // namespace

DynamicalSystem::DynamicalSystem(std::vector<MonomialPoly> components,
                                 std::string name)
    : dimension_(static_cast<int>(components.size())), name_(std::move(name)) {
  if (components.empty()) throw DimensionMismatch("system has no components");
  auto compiled = std::make_shared<Compiled>();
  const std::vector<double> origin(dimension_, 0.0);
  for (auto& p : components) {
    if (p.dimension() != dimension_) {
      throw DimensionMismatch("component of dimension " +
                              std::to_string(p.dimension()) +
                              " in a system of dimension " +
                              std::to_string(dimension_));
    }
    if (!p.is_real()) throw Error("vector field coefficients must be real");
    if (std::any_of(p.center().begin(), p.center().end(),
                    [](double c) { return c != 0.0; })) {
      p = recenter(p, origin);
    }
    compiled->values.push_back(compile(p));
    compiled->stride = std::max(compiled->stride, compiled->values.back().max_degree + 1);
    std::vector<Compiled::Component> row;
    for (int j = 0; j < dimension_; ++j) row.push_back(compile(partial_derivative(p, j)));
    compiled->derivatives.push_back(std::move(row));
  }
  components_ = std::move(components);
  compiled_ = std::move(compiled);
}

DynamicalSystem::DynamicalSystem(int dimension, EvalFn eval, JacobianFn jacobian,
                                 std::string name)
    : dimension_(dimension),
      name_(std::move(name)),
      eval_fn_(std::move(eval)),
      jacobian_fn_(std::move(jacobian)) {
  if (dimension <= 0) throw DimensionMismatch("dimension must be positive");
}

const std::vector<MonomialPoly>& DynamicalSystem::components() const {
  if (!is_polynomial()) {
    throw Error("system '" + name_ + "' has no polynomial form");
  }
  return components_;
}

void DynamicalSystem::eval(const double* x, double* out) const {
  if (!compiled_) {
    eval_fn_(x, out);
    return;
  }
  const int n = dimension_;
  const int stride = compiled_->stride;
  const std::vector<double>& powers = compiled_->powers(x, n);
  for (int l = 0; l < n; ++l) out[l] = eval_compiled(compiled_->values[l], n, powers, stride);
}

Eigen::VectorXd DynamicalSystem::eval(const Eigen::VectorXd& x) const {
  if (x.size() != dimension_) throw DimensionMismatch("state dimension mismatch");
  Eigen::VectorXd out(dimension_);
  eval(x.data(), out.data());
  return out;
}

Eigen::MatrixXd DynamicalSystem::jacobian(const Eigen::VectorXd& x) const {
  if (x.size() != dimension_) throw DimensionMismatch("state dimension mismatch");
  if (!compiled_) return jacobian_fn_(x);
  const int n = dimension_;
  const int stride = compiled_->stride;
  const std::vector<double>& powers = compiled_->powers(x.data(), n);
  Eigen::MatrixXd j(n, n);
  for (int l = 0; l < n; ++l) {
    for (int m = 0; m < n; ++m) {
      j(l, m) = eval_compiled(compiled_->derivatives[l][m], n, powers, stride);
    }
  }
  return j;
}

DynamicalSystem DynamicalSystem::reversed() const {
  if (is_polynomial()) {
    std::vector<MonomialPoly> neg;
    for (const auto& p : components_) neg.push_back(Complex(-1.0) * p);
    return DynamicalSystem(std::move(neg), name_ + " (reversed)");
  }
  const int n = dimension_;
  auto f = eval_fn_;
  auto jf = jacobian_fn_;
  return DynamicalSystem(
      n,
      [f, n](const double* x, double* out) {
        f(x, out);
        for (int i = 0; i < n; ++i) out[i] = -out[i];
      },
      [jf](const Eigen::VectorXd& x) -> Eigen::MatrixXd { return -jf(x); },
      name_ + " (reversed)");
}

BoxMap::BoxMap(Eigen::VectorXd lower, Eigen::VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || lower_.size() == 0) {
    throw DimensionMismatch("box bounds must have equal positive dimension");
  }
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!std::isfinite(lower_(i)) || !std::isfinite(upper_(i)) ||
        !(upper_(i) > lower_(i))) {
      throw Error("box needs finite bounds with upper > lower on every axis");
    }
  }
}

BoxMap BoxMap::unit(int dimension) {
  return BoxMap(Eigen::VectorXd::Zero(dimension), Eigen::VectorXd::Ones(dimension));
}

Eigen::VectorXd BoxMap::to_unit(const Eigen::VectorXd& x) const {
  return (x - lower_).cwiseQuotient(widths());
}

Eigen::VectorXd BoxMap::from_unit(const Eigen::VectorXd& u) const {
  return lower_ + widths().cwiseProduct(u);
}

bool BoxMap::contains(const Eigen::VectorXd& x, double slack) const {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) < lower_(i) - slack || x(i) > upper_(i) + slack) return false;
  }
  return true;
}

Eigen::VectorXd find_fixed_point(const DynamicalSystem& sys,
                                 const Eigen::VectorXd& guess) {
  if (guess.size() != sys.dimension()) {
    throw DimensionMismatch("guess dimension mismatch");
  }
  Eigen::VectorXd x = guess;
  for (int it = 0; it <= kNewtonMaxIterations; ++it) {
    const Eigen::VectorXd f = sys.eval(x);
    if (!f.allFinite()) throw NonFiniteError("non-finite field value during Newton iteration");
    if (f.lpNorm<Eigen::Infinity>() < kFixedPointTolerance) return x;
    if (it == kNewtonMaxIterations) break;
    const Eigen::MatrixXd j = sys.jacobian(x);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(j);
    if (!lu.isInvertible() || lu.rcond() < 1e-14) {
      throw SingularJacobian("singular Jacobian during Newton iteration");
    }
    x -= lu.solve(f);
  }
  throw ConvergenceError("Newton iteration did not converge in " +
                         std::to_string(kNewtonMaxIterations) + " iterations");
}

namespace {

Eigen::VectorXcd normalize_eigenvector(Eigen::VectorXcd v) {
  v /= v.norm();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12) {
      v *= std::conj(v(i)) / std::abs(v(i));
      v(i) = std::abs(v(i));
      break;
    }
  }
  return v;
}

}  // namespace

SpectrumReport jacobian_spectrum(const DynamicalSystem& sys,
                                 const Eigen::VectorXd& x_star,
                                 int nonresonance_order) {
  SpectrumReport r;
  r.fixed_point = x_star;
  r.jacobian = sys.jacobian(x_star);
  const int n = sys.dimension();
  Eigen::EigenSolver<Eigen::MatrixXd> es(r.jacobian.transpose());
  if (es.info() != Eigen::Success) throw Error("eigenvalue computation failed");
  const Eigen::MatrixXcd vecs = es.eigenvectors();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(vecs);
  const auto& sv = svd.singularValues();
  if (sv(n - 1) <= 0.0 || sv(0) / sv(n - 1) > 1e10) {
    throw DefectiveJacobian("Jacobian is defective (eigenvector condition number " +
                            std::to_string(sv(n - 1) > 0 ? sv(0) / sv(n - 1) : INFINITY) +
                            ")");
  }
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  const Eigen::VectorXcd ev = es.eigenvalues();
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ra = ev(a).real(), rb = ev(b).real();
    if (std::abs(ra - rb) > 1e-12 * std::max(1.0, std::abs(ra))) return ra > rb;
    return ev(a).imag() < ev(b).imag();
  });
  r.eigenvalues.resize(n);
  r.left_eigenvectors.resize(n, n);
  for (int i = 0; i < n; ++i) {
    r.eigenvalues(i) = ev(order[i]);
    r.left_eigenvectors.col(i) = normalize_eigenvector(vecs.col(order[i]));
  }
  r.nonresonance_order = nonresonance_order;
  r.nonresonant = check_nonresonance(r.eigenvalues, nonresonance_order);
  return r;
}

namespace {

// Visits every c ∈ ℕᴺ with Σc = total.
template <typename Fn>
void for_each_composition(int n, int total, Fn&& fn) {
  std::vector<int> c(n, 0);
  auto recurse = [&](auto&& self, int axis, int remaining) -> void {
    if (axis == n - 1) {
      c[axis] = remaining;
      fn(c);
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      c[axis] = k;
      self(self, axis + 1, remaining - k);
    }
  };
  recurse(recurse, 0, total);
}

}  // namespace

double resonance_gap(const Eigen::VectorXcd& eigenvalues, int index, int order) {
  const int n = static_cast<int>(eigenvalues.size());
  double best = INFINITY;
  for_each_composition(n, order, [&](const std::vector<int>& c) {
    Complex sum = 0.0;
    for (int k = 0; k < n; ++k) sum += static_cast<double>(c[k]) * eigenvalues(k);
    best = std::min(best, std::abs(eigenvalues(index) - sum));
  });
  return best;
}

bool check_nonresonance(const Eigen::VectorXcd& eigenvalues, int max_order,
                        double tolerance) {
  for (int i = 0; i < eigenvalues.size(); ++i) {
    for (int order = 2; order <= max_order; ++order) {
      if (resonance_gap(eigenvalues, i, order) < tolerance) return false;
    }
  }
  return true;
}

DynamicalSystem pull_back_field(const DynamicalSystem& sys, const BoxMap& box) {
  if (box.dimension() != sys.dimension()) {
    throw DimensionMismatch("box dimension differs from system dimension");
  }
  const Eigen::VectorXd lo = box.lower();
  const Eigen::VectorXd w = box.widths();
  if (sys.is_polynomial()) {
    std::vector<MonomialPoly> out;
    const std::span<const double> offset(lo.data(), lo.size());
    const std::span<const double> scale(w.data(), w.size());
    for (int l = 0; l < sys.dimension(); ++l) {
      out.push_back(Complex(1.0 / w(l)) *
                    affine_substitute(sys.components()[l], offset, scale));
    }
    return DynamicalSystem(std::move(out), sys.name());
  }
  const int n = sys.dimension();
  return DynamicalSystem(
      n,
      [sys, lo, w, n](const double* u, double* out) {
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) x(i) = lo(i) + w(i) * u[i];
        sys.eval(x.data(), out);
        for (int i = 0; i < n; ++i) out[i] /= w(i);
      },
      [sys, lo, w](const Eigen::VectorXd& u) -> Eigen::MatrixXd {
        const Eigen::VectorXd x = lo + w.cwiseProduct(u);
        return w.cwiseInverse().asDiagonal() * sys.jacobian(x) * w.asDiagonal();
      },
      sys.name());
}

SpectrumReport spectrum_in_box(const SpectrumReport& spec, const BoxMap& box) {
  SpectrumReport r = spec;
  const Eigen::VectorXd w = box.widths();
  r.fixed_point = box.to_unit(spec.fixed_point);
  r.jacobian = w.cwiseInverse().asDiagonal() * spec.jacobian * w.asDiagonal();
  r.left_eigenvectors = w.cast<Complex>().asDiagonal() * spec.left_eigenvectors;
  return r;
}

}  // namespace koopman
