#include "koopman/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "koopman/binomial.hpp"
#include "koopman/errors.hpp"

namespace koopman {

MultiIndex::MultiIndex(std::vector<int> exponents)
    : exponents_(std::move(exponents)) {
  for (int e : exponents_) {
    if (e < 0) throw Error("multi-index exponents must be nonnegative");
    degree_ += e;
  }
}

MultiIndex MultiIndex::zero(int dimension) {
  return MultiIndex(std::vector<int>(dimension, 0));
}

MultiIndex MultiIndex::unit(int dimension, int axis) {
  if (axis < 0 || axis >= dimension) {
    throw AxisOutOfRange("axis " + std::to_string(axis) +
                         " out of range for dimension " +
                         std::to_string(dimension));
  }
  std::vector<int> e(dimension, 0);
  e[axis] = 1;
  return MultiIndex(std::move(e));
}

MultiIndex MultiIndex::operator+(const MultiIndex& other) const {
  if (other.dimension() != dimension()) {
    throw DimensionMismatch("multi-index dimensions differ");
  }
  std::vector<int> e(exponents_);
  for (int i = 0; i < dimension(); ++i) e[i] += other.exponents_[i];
  return MultiIndex(std::move(e));
}

bool GradedLexLess::operator()(const MultiIndex& a, const MultiIndex& b) const {
  if (a.total_degree() != b.total_degree()) {
    return a.total_degree() < b.total_degree();
  }
  const auto ea = a.exponents();
  const auto eb = b.exponents();
  const auto n = std::min(ea.size(), eb.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (ea[i] != eb[i]) return ea[i] > eb[i];
  }
  return ea.size() < eb.size();
}

std::vector<MultiIndex> multi_indices_of_degree(int dimension, int degree) {
  std::vector<MultiIndex> out;
  std::vector<int> e(dimension, 0);
  // Enumerate compositions of `degree` into `dimension` parts, first axis
  // descending, which is exactly graded-lex order within one degree.
  auto recurse = [&](auto&& self, int axis, int remaining) -> void {
    if (axis == dimension - 1) {
      e[axis] = remaining;
      out.emplace_back(e);
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      e[axis] = k;
      self(self, axis + 1, remaining - k);
    }
  };
  if (dimension == 0) return out;
  recurse(recurse, 0, degree);
  return out;
}

MonomialPoly::MonomialPoly(int dimension)
    : dimension_(dimension), center_(dimension, 0.0) {}

MonomialPoly::MonomialPoly(int dimension, std::vector<double> center)
    : dimension_(dimension), center_(std::move(center)) {
  if (static_cast<int>(center_.size()) != dimension_) {
    throw DimensionMismatch("center has " + std::to_string(center_.size()) +
                            " entries, expected " + std::to_string(dimension_));
  }
}

MonomialPoly MonomialPoly::constant(int dimension, Complex value) {
  MonomialPoly p(dimension);
  p.add_term(MultiIndex::zero(dimension), value);
  return p;
}

MonomialPoly MonomialPoly::variable(int dimension, int axis) {
  MonomialPoly p(dimension);
  p.add_term(MultiIndex::unit(dimension, axis), 1.0);
  return p;
}

MonomialPoly MonomialPoly::monomial(const MultiIndex& index, Complex coefficient) {
  MonomialPoly p(index.dimension());
  p.add_term(index, coefficient);
  return p;
}

int MonomialPoly::total_degree() const {
  return terms_.empty() ? 0 : terms_.rbegin()->first.total_degree();
}

int MonomialPoly::degree_in(int axis) const {
  if (axis < 0 || axis >= dimension_) {
    throw AxisOutOfRange("axis " + std::to_string(axis) + " out of range");
  }
  int d = 0;
  for (const auto& [k, c] : terms_) d = std::max(d, k[axis]);
  return d;
}

Complex MonomialPoly::coefficient(const MultiIndex& index) const {
  const auto it = terms_.find(index);
  return it == terms_.end() ? Complex{} : it->second;
}

void MonomialPoly::add_term(const MultiIndex& index, Complex c) {
  if (index.dimension() != dimension_) {
    throw DimensionMismatch("monomial dimension " +
                            std::to_string(index.dimension()) +
                            " differs from polynomial dimension " +
                            std::to_string(dimension_));
  }
  auto [it, inserted] = terms_.try_emplace(index, c);
  if (!inserted) it->second += c;
  if (std::abs(it->second) < kPruneThreshold) terms_.erase(it);
}

namespace {

template <typename T>
Complex eval_impl(const MonomialPoly& p, std::span<const T> x) {
  const int n = p.dimension();
  if (static_cast<int>(x.size()) != n) {
    throw DimensionMismatch("point has " + std::to_string(x.size()) +
                            " coordinates, polynomial has dimension " +
                            std::to_string(n));
  }
  // Power tables per axis avoid repeated std::pow calls.
  std::vector<std::vector<T>> powers(n);
  for (int i = 0; i < n; ++i) {
    const int d = p.degree_in(i);
    powers[i].resize(d + 1);
    powers[i][0] = T(1);
    const T shifted = x[i] - T(p.center()[i]);
    for (int k = 1; k <= d; ++k) powers[i][k] = powers[i][k - 1] * shifted;
  }
  Complex sum{};
  for (const auto& [k, c] : p.terms()) {
    Complex term = c;
    for (int i = 0; i < n; ++i) term *= powers[i][k[i]];
    sum += term;
  }
  return sum;
}

}  // namespace

Complex MonomialPoly::eval(std::span<const double> x) const {
  return eval_impl(*this, x);
}

Complex MonomialPoly::eval(std::span<const Complex> x) const {
  return eval_impl(*this, x);
}

MonomialPoly MonomialPoly::homogeneous_part(int degree) const {
  MonomialPoly out(dimension_, center_);
  for (const auto& [k, c] : terms_) {
    if (k.total_degree() == degree) out.terms_.emplace_hint(out.terms_.end(), k, c);
  }
  return out;
}

MonomialPoly MonomialPoly::truncated(int max_degree) const {
  MonomialPoly out(dimension_, center_);
  for (const auto& [k, c] : terms_) {
    if (k.total_degree() <= max_degree) out.terms_.emplace_hint(out.terms_.end(), k, c);
  }
  return out;
}

bool MonomialPoly::is_real() const {
  return std::all_of(terms_.begin(), terms_.end(),
                     [](const auto& t) { return t.second.imag() == 0.0; });
}

void MonomialPoly::check_compatible(const MonomialPoly& other) const {
  if (other.dimension_ != dimension_) {
    throw DimensionMismatch("polynomial dimensions differ (" +
                            std::to_string(dimension_) + " vs " +
                            std::to_string(other.dimension_) + ")");
  }
  if (other.center_ != center_) {
    throw CenterMismatch("polynomials are expanded about different centers");
  }
}

MonomialPoly& MonomialPoly::operator+=(const MonomialPoly& other) {
  check_compatible(other);
  for (const auto& [k, c] : other.terms_) add_term(k, c);
  return *this;
}

MonomialPoly& MonomialPoly::operator-=(const MonomialPoly& other) {
  check_compatible(other);
  for (const auto& [k, c] : other.terms_) add_term(k, -c);
  return *this;
}

MonomialPoly& MonomialPoly::operator*=(Complex factor) {
  if (factor == Complex{}) {
    terms_.clear();
    return *this;
  }
  for (auto it = terms_.begin(); it != terms_.end();) {
    it->second *= factor;
    if (std::abs(it->second) < kPruneThreshold) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
  return *this;
}

MonomialPoly recenter(const MonomialPoly& p, std::span<const double> new_center) {
  const int n = p.dimension();
  if (static_cast<int>(new_center.size()) != n) {
    throw DimensionMismatch("new center has " +
                            std::to_string(new_center.size()) +
                            " coordinates, expected " + std::to_string(n));
  }
  std::vector<double> shift(n);
  for (int i = 0; i < n; ++i) shift[i] = new_center[i] - p.center()[i];

  MonomialPoly out(n, std::vector<double>(new_center.begin(), new_center.end()));
  std::vector<int> e(n);
  for (const auto& [k, c] : p.terms()) {
    // (y_i + d_i)^{k_i} = Σ_j C(k_i, j) d_i^{k_i-j} y_i^j, tensorized over axes.
    std::vector<std::vector<double>> factors(n);
    for (int i = 0; i < n; ++i) {
      factors[i].resize(k[i] + 1);
      for (int j = 0; j <= k[i]; ++j) {
        factors[i][j] = binomial(k[i], j) * std::pow(shift[i], k[i] - j);
      }
    }
    auto recurse = [&](auto&& self, int axis, Complex acc) -> void {
      if (axis == n) {
        out.add_term(MultiIndex(e), acc);
        return;
      }
      for (int j = 0; j <= k[axis]; ++j) {
        if (factors[axis][j] == 0.0) continue;
        e[axis] = j;
        self(self, axis + 1, acc * factors[axis][j]);
      }
    };
    recurse(recurse, 0, c);
  }
  return out;
}

MonomialPoly partial_derivative(const MonomialPoly& p, int axis) {
  if (axis < 0 || axis >= p.dimension()) {
    throw AxisOutOfRange("axis " + std::to_string(axis) +
                         " out of range for dimension " +
                         std::to_string(p.dimension()));
  }
  MonomialPoly out(p.dimension(), p.center());
  for (const auto& [k, c] : p.terms()) {
    if (k[axis] == 0) continue;
    std::vector<int> e(k.exponents().begin(), k.exponents().end());
    e[axis] -= 1;
    out.add_term(MultiIndex(std::move(e)), c * static_cast<double>(k[axis]));
  }
  return out;
}

MonomialPoly multiply(const MonomialPoly& p, const MonomialPoly& q) {
  if (p.dimension() != q.dimension()) {
    throw DimensionMismatch("polynomial dimensions differ");
  }
  if (p.center() != q.center()) {
    throw CenterMismatch("multiply requires a common center; recenter first");
  }
  MonomialPoly out(p.dimension(), p.center());
  for (const auto& [kp, cp] : p.terms()) {
    for (const auto& [kq, cq] : q.terms()) out.add_term(kp + kq, cp * cq);
  }
  return out;
}

MonomialPoly affine_substitute(const MonomialPoly& p,
                               std::span<const double> offset,
                               std::span<const double> scale) {
  const int n = p.dimension();
  if (static_cast<int>(offset.size()) != n ||
      static_cast<int>(scale.size()) != n) {
    throw DimensionMismatch("affine map dimension differs from polynomial");
  }
  // p(x) = Σ c_k Π (x_i - o_i)^{k_i} after recentering at the offset, and
  // x_i - o_i = s_i u_i.
  const MonomialPoly at_offset = recenter(p, offset);
  MonomialPoly out(n);
  for (const auto& [k, c] : at_offset.terms()) {
    double factor = 1.0;
    for (int i = 0; i < n; ++i) factor *= std::pow(scale[i], k[i]);
    out.add_term(k, c * factor);
  }
  return out;
}

MonomialPoly conj(const MonomialPoly& p) {
  MonomialPoly out(p.dimension(), p.center());
  for (const auto& [k, c] : p.terms()) out.add_term(k, std::conj(c));
  return out;
}

MonomialPoly operator+(MonomialPoly p, const MonomialPoly& q) {
  p += q;
  return p;
}

MonomialPoly operator-(MonomialPoly p, const MonomialPoly& q) {
  p -= q;
  return p;
}

MonomialPoly operator*(const MonomialPoly& p, const MonomialPoly& q) {
  return multiply(p, q);
}

MonomialPoly operator*(Complex factor, MonomialPoly p) {
  p *= factor;
  return p;
}

std::string to_string(const MonomialPoly& p) {
  if (p.is_zero()) return "0";
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& [k, c] : p.terms()) {
    if (!first) os << " + ";
    first = false;
    if (c.imag() == 0.0) {
      os << c.real();
    } else {
      os << "(" << c.real() << (c.imag() < 0 ? "-" : "+") << std::abs(c.imag())
         << "i)";
    }
    for (int i = 0; i < p.dimension(); ++i) {
      if (k[i] == 0) continue;
      os << "*x" << (i + 1);
      if (p.center()[i] != 0.0) os << "'";
      if (k[i] > 1) os << "^" << k[i];
    }
  }
  return os.str();
}

}  // namespace koopman
