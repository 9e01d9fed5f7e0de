#pragma once

#include <complex>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace koopman {

using Complex = std::complex<double>;

// Exponent tuple (k_1, ..., k_N) of a monomial.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> exponents);

  static MultiIndex zero(int dimension);
  static MultiIndex unit(int dimension, int axis);

  int dimension() const { return static_cast<int>(exponents_.size()); }
  int total_degree() const { return degree_; }
  int operator[](int axis) const { return exponents_[axis]; }
  std::span<const int> exponents() const { return exponents_; }

  MultiIndex operator+(const MultiIndex& other) const;

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

 private:
  std::vector<int> exponents_;
  int degree_ = 0;
};

// Graded lexicographic order: total degree first, then the larger exponent on
// the earliest axis comes first (x1^2 < x1 x2 < x2^2 within degree two).
// This is the ordering of the monomial vector used by every solver.
struct GradedLexLess {
  bool operator()(const MultiIndex& a, const MultiIndex& b) const;
};

// All multi-indices of the given dimension and total degree, graded-lex order.
std::vector<MultiIndex> multi_indices_of_degree(int dimension, int degree);

// Sparse polynomial Σ c_k Π (x_i - center_i)^{k_i} with complex coefficients.
class MonomialPoly {
 public:
  using TermMap = std::map<MultiIndex, Complex, GradedLexLess>;

  // Zero polynomial centered at the origin.
  explicit MonomialPoly(int dimension);
  MonomialPoly(int dimension, std::vector<double> center);

  static MonomialPoly constant(int dimension, Complex value);
  // The coordinate function x_axis (centered at the origin).
  static MonomialPoly variable(int dimension, int axis);
  static MonomialPoly monomial(const MultiIndex& index, Complex coefficient);

  int dimension() const { return dimension_; }
  const std::vector<double>& center() const { return center_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  // Zero for the zero polynomial.
  int total_degree() const;
  int degree_in(int axis) const;

  Complex coefficient(const MultiIndex& index) const;

  // Adds c to the coefficient of the monomial; exact zeros are pruned.
  void add_term(const MultiIndex& index, Complex c);

  Complex eval(std::span<const double> x) const;
  Complex eval(std::span<const Complex> x) const;

  MonomialPoly homogeneous_part(int degree) const;
  MonomialPoly truncated(int max_degree) const;
  bool is_real() const;

  MonomialPoly& operator+=(const MonomialPoly& other);
  MonomialPoly& operator-=(const MonomialPoly& other);
  MonomialPoly& operator*=(Complex factor);

  friend bool operator==(const MonomialPoly&, const MonomialPoly&) = default;

 private:
  void check_compatible(const MonomialPoly& other) const;

  int dimension_;
  std::vector<double> center_;
  TermMap terms_;
};

// Coefficients below this magnitude are treated as exact zeros.
inline constexpr double kPruneThreshold = 1e-300;

// Exact re-expansion about a new center (binomial expansion per axis).
MonomialPoly recenter(const MonomialPoly& p, std::span<const double> new_center);

// Formal derivative with respect to a 0-based axis.
MonomialPoly partial_derivative(const MonomialPoly& p, int axis);

// Exact product; both factors must share dimension and center.
MonomialPoly multiply(const MonomialPoly& p, const MonomialPoly& q);

// q(u) = p(offset + scale ∘ u), returned centered at the origin.
MonomialPoly affine_substitute(const MonomialPoly& p,
                               std::span<const double> offset,
                               std::span<const double> scale);

MonomialPoly conj(const MonomialPoly& p);

MonomialPoly operator+(MonomialPoly p, const MonomialPoly& q);
MonomialPoly operator-(MonomialPoly p, const MonomialPoly& q);
MonomialPoly operator*(const MonomialPoly& p, const MonomialPoly& q);
MonomialPoly operator*(Complex factor, MonomialPoly p);

std::string to_string(const MonomialPoly& p);

}  // namespace koopman
