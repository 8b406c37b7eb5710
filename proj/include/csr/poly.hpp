#pragma once

// Sparse multivariate polynomials over double coefficients.
//
// Variables are positional (index 0 .. nvars-1). Terms are kept in a map
// ordered by graded lexicographic order, so iteration, printing and
// evaluation are deterministic.

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace csr::poly {

/// Terms with |coefficient| below this are dropped on canonicalization.
inline constexpr double kDropTolerance = 1e-12;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(int nvars) : exps_(static_cast<std::size_t>(nvars), 0) {}
  explicit Monomial(std::vector<int> exps);

  static Monomial variable(int nvars, int index, int power = 1);

  int nvars() const { return static_cast<int>(exps_.size()); }
  int degree() const { return degree_; }
  int operator[](int i) const { return exps_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& exponents() const { return exps_; }

  Monomial operator*(const Monomial& other) const;

  /// Graded lexicographic: lower total degree first; within a degree,
  /// larger exponent on an earlier variable first (x0 before x1).
  std::strong_ordering operator<=>(const Monomial& other) const;
  bool operator==(const Monomial& other) const = default;

  double evaluate(std::span<const double> point) const;

 private:
  std::vector<int> exps_;
  int degree_ = 0;
};

class Polynomial {
 public:
  using TermMap = std::map<Monomial, double>;

  Polynomial() = default;
  explicit Polynomial(int nvars) : nvars_(nvars) {}

  static Polynomial constant(int nvars, double value);
  static Polynomial variable(int nvars, int index);
  static Polynomial monomial(const Monomial& m, double coef = 1.0);

  int nvars() const { return nvars_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  /// Max total degree over terms; 0 for the zero polynomial.
  int degree() const;
  /// Min total degree over terms; 0 for the zero polynomial.
  int min_degree() const;

  double coefficient(const Monomial& m) const;
  /// Adds `coef` to the term `m` and re-canonicalizes that term.
  void add_term(const Monomial& m, double coef);

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator-() const;
  Polynomial operator*(double s) const;
  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);

  double evaluate(std::span<const double> point) const;

  /// Largest absolute coefficient difference over the union of supports.
  double max_coefficient_distance(const Polynomial& o) const;
  double max_abs_coefficient() const;

  /// Drop terms whose magnitude is at most `tol`.
  Polynomial pruned(double tol) const;

  bool operator==(const Polynomial& o) const = default;

 private:
  int nvars_ = 0;
  TermMap terms_;
};

inline Polynomial operator*(double s, const Polynomial& p) { return p * s; }

Polynomial add(const Polynomial& a, const Polynomial& b);
Polynomial sub(const Polynomial& a, const Polynomial& b);
Polynomial mul(const Polynomial& a, const Polynomial& b);

Polynomial differentiate(const Polynomial& p, int var);

/// Sum_i dV/dz_i * f_i.
Polynomial lie_derivative(const Polynomial& v, std::span<const Polynomial> f);

/// Sum of squares of all variables, z^T z.
Polynomial sum_of_squares_of_variables(int nvars);

/// Evaluate every component of a vector field.
std::vector<double> evaluate(std::span<const Polynomial> f,
                             std::span<const double> point);

/// Renders e.g. "0.019*z1^2 - 0.0037*z1*z2 + 0.21*z4". Labels default to
/// z1..zn (1-based); pass an explicit table to override.
std::string to_string(const Polynomial& p,
                      std::span<const std::string> labels = {},
                      int precision = 6);

std::vector<std::string> default_labels(int nvars);

}  // namespace csr::poly
