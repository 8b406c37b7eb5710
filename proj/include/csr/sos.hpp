#pragma once

// Sum-of-squares programs compiled to semidefinite programs via Gram
// matrices. Unknown polynomials are represented by scalar decision
// variables, each attached to a fixed "direction" polynomial; every
// expression handed to a program is affine in those variables.

#include "csr/poly.hpp"
#include "csr/sdp.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace csr::sos {

using poly::Monomial;
using poly::Polynomial;

class SosError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Monomial vector z(x), in graded-lex order.
struct MonomialBasis {
  int nvars = 0;
  int min_degree = 0;
  int max_degree = 0;
  std::vector<Monomial> entries;

  int size() const { return static_cast<int>(entries.size()); }
};

/// All monomials of total degree exactly `degree`, graded-lex order.
std::vector<Monomial> monomials_of_degree(int nvars, int degree);

MonomialBasis make_basis(int nvars, int half_degree, bool include_constant = true);
MonomialBasis make_basis_range(int nvars, int min_degree, int max_degree);

/// z^T Q z.
Polynomial gram_polynomial(const Eigen::MatrixXd& q, const MonomialBasis& basis);

struct GramParam {
  Eigen::MatrixXd q0;
  std::vector<Eigen::MatrixXd> basis_matrices;
  MonomialBasis basis;
};

/// Particular Gram matrix plus a spanning set of the homogeneous solutions.
/// Throws SosError when a monomial of `f` is not a product of two basis
/// entries or the coefficient equations are inconsistent.
GramParam gram_decompose(const Polynomial& f, const MonomialBasis& basis);

enum class Verdict { Sos, NotSos, SolverFailure };
const char* to_string(Verdict v);

struct SosCheck {
  Verdict verdict = Verdict::SolverFailure;
  MonomialBasis basis;
  Eigen::MatrixXd gram;         // witness when verdict == Sos
  double gram_mismatch = 0.0;   // max coefficient error of z^T Q z - f
  double min_eigenvalue = 0.0;
  sdp::Status sdp_status = sdp::Status::NumericalFailure;
  std::string message;
};

/// Gram witness tolerances used by check_sos and verify().
inline constexpr double kGramTolerance = 1e-7;
inline constexpr double kEigenTolerance = 1e-8;

SosCheck check_sos(const Polynomial& f, const sdp::Settings& settings = {});

/// A polynomial affine in the program's scalar decision variables:
/// constant + sum_v x_v * direction_v.
class AffinePoly {
 public:
  AffinePoly() = default;
  explicit AffinePoly(int nvars) : constant_(nvars) {}
  AffinePoly(Polynomial constant) : constant_(std::move(constant)) {}  // NOLINT

  int nvars() const { return constant_.nvars(); }
  const Polynomial& constant() const { return constant_; }
  const std::map<int, Polynomial>& terms() const { return terms_; }
  bool is_known() const { return terms_.empty(); }

  void add_variable(int var, const Polynomial& direction);

  /// Smallest and largest total degree over the constant and all directions.
  int min_degree() const;
  int degree() const;

  AffinePoly operator+(const AffinePoly& o) const;
  AffinePoly operator-(const AffinePoly& o) const;
  AffinePoly operator-() const;
  AffinePoly operator*(double s) const;
  AffinePoly operator*(const Polynomial& p) const;
  /// Product of two expressions; throws SosError unless at least one is known.
  AffinePoly operator*(const AffinePoly& o) const;
  AffinePoly& operator+=(const AffinePoly& o);
  AffinePoly& operator-=(const AffinePoly& o);

  Polynomial evaluate(const std::vector<double>& values) const;

 private:
  Polynomial constant_;
  std::map<int, Polynomial> terms_;
};

inline AffinePoly operator*(const Polynomial& p, const AffinePoly& a) { return a * p; }
inline AffinePoly operator*(double s, const AffinePoly& a) { return a * s; }

struct VariableRef {
  enum class Kind { Free, Gram } kind = Kind::Free;
  int index = 0;  // free index, or block index
  int row = 0;
  int col = 0;
};

struct UnknownDecl {
  std::string name;
  int degree = 0;
  bool vanish_at_origin = false;
  bool sos = false;
  int block = -1;          // Gram block for SOS unknowns
  MonomialBasis basis;     // Gram basis (SOS) or coefficient monomials (free)
  std::vector<int> vars;   // decision variables owned by this unknown
};

struct ConstraintDecl {
  std::string name;
  AffinePoly expr;
  bool equality = false;   // expr == 0 instead of expr SOS
  int block = -1;
  MonomialBasis basis;
};

struct CompiledProgram {
  sdp::SdpProblem problem;
  std::vector<VariableRef> variables;
  std::vector<std::string> row_labels;
};

class SosSolution;

class SosProgram {
 public:
  explicit SosProgram(int nvars);

  int nvars() const { return nvars_; }

  /// Free (sign-indefinite) polynomial with all monomials of degree
  /// 0..degree, or 1..degree when vanishing at the origin.
  AffinePoly new_free_poly(const std::string& name, int degree, bool vanish_at_origin = false);
  /// Free polynomial over an explicit monomial list.
  AffinePoly new_free_poly(const std::string& name, const std::vector<Monomial>& monomials);
  /// SOS polynomial z^T Q z, Q PSD; even degree. Vanishing at the origin
  /// drops the constant monomial from z.
  AffinePoly new_sos_poly(const std::string& name, int degree, bool vanish_at_origin = false);
  /// Single unconstrained scalar.
  AffinePoly new_scalar(const std::string& name);

  void add_sos_constraint(const std::string& name, const AffinePoly& expr);
  void add_equality(const std::string& name, const AffinePoly& expr);

  /// Minimize a degree-0 affine expression.
  void minimize(const AffinePoly& objective);

  /// Adds sum of Gram traces + slack == budget, which keeps otherwise
  /// unbounded feasibility problems inside a compact set.
  void set_trace_budget(double budget) { trace_budget_ = budget; }

  const std::vector<UnknownDecl>& unknowns() const { return unknowns_; }
  const std::vector<ConstraintDecl>& constraints() const { return constraints_; }

  CompiledProgram compile() const;
  SosSolution solve(const sdp::Settings& settings = {}) const;

 private:
  int add_var(VariableRef ref);
  int add_block(const std::string& name, int dim);

  int nvars_;
  std::vector<VariableRef> vars_;
  std::vector<UnknownDecl> unknowns_;
  std::vector<ConstraintDecl> constraints_;
  std::optional<AffinePoly> objective_;
  std::optional<double> trace_budget_;
  std::vector<sdp::Block> blocks_;
  int num_free_ = 0;
};

struct ConstraintReport {
  std::string name;
  double gram_mismatch = 0.0;
  double min_eigenvalue = 0.0;
};

class SosSolution {
 public:
  sdp::Status status() const { return sdp_.status; }
  bool ok() const { return sdp_.ok(); }
  const sdp::SdpSolution& sdp() const { return sdp_; }
  const std::vector<double>& values() const { return values_; }

  Polynomial value(const AffinePoly& expr) const { return expr.evaluate(values_); }
  double scalar(const AffinePoly& expr) const;

  /// Gram consistency of every constraint: z^T Q z against the decoded
  /// constraint polynomial, plus minimum eigenvalues.
  const std::vector<ConstraintReport>& reports() const { return reports_; }
  double worst_mismatch() const;
  double worst_eigenvalue() const;
  /// ok() and all reports within kGramTolerance / kEigenTolerance.
  bool verified() const;

 private:
  friend class SosProgram;
  sdp::SdpSolution sdp_;
  std::vector<double> values_;
  std::vector<ConstraintReport> reports_;
};

/// Debug dump: block sizes and constraints as sparse triplets.
std::string to_json(const sdp::SdpProblem& problem, int indent = 1);

}  // namespace csr::sos
