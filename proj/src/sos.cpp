#include "csr/sos.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace csr::sos {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void enumerate(int nvars, int var, int remaining, std::vector<int>& exps, std::vector<Monomial>& out) {
  if (var == nvars - 1) {
    exps[static_cast<std::size_t>(var)] = remaining;
    out.emplace_back(exps);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    exps[static_cast<std::size_t>(var)] = e;
    enumerate(nvars, var + 1, remaining - e, exps, out);
  }
  exps[static_cast<std::size_t>(var)] = 0;
}

struct Support {
  int min_degree = std::numeric_limits<int>::max();
  int max_degree = -1;
  std::vector<int> max_exp;
  std::vector<int> min_exp;

  explicit Support(int nvars)
      : max_exp(static_cast<std::size_t>(nvars), 0),
        min_exp(static_cast<std::size_t>(nvars), std::numeric_limits<int>::max()) {}

  void add(const Polynomial& p) {
    for (const auto& [m, c] : p.terms()) {
      min_degree = std::min(min_degree, m.degree());
      max_degree = std::max(max_degree, m.degree());
      for (int i = 0; i < m.nvars(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        max_exp[k] = std::max(max_exp[k], m[i]);
        min_exp[k] = std::min(min_exp[k], m[i]);
      }
    }
  }
  bool empty() const { return max_degree < 0; }
};

// Basis for a Gram representation of anything supported inside `sup`:
// half the degree range, and half the per-variable exponent range.
MonomialBasis pruned_basis(int nvars, const Support& sup) {
  MonomialBasis b;
  b.nvars = nvars;
  if (sup.empty()) return b;
  b.min_degree = (sup.min_degree + 1) / 2;
  b.max_degree = sup.max_degree / 2;
  for (int d = b.min_degree; d <= b.max_degree; ++d) {
    for (auto& m : monomials_of_degree(nvars, d)) {
      bool keep = true;
      for (int i = 0; i < nvars && keep; ++i) {
        const auto k = static_cast<std::size_t>(i);
        keep = 2 * m[i] <= sup.max_exp[k] && 2 * m[i] >= sup.min_exp[k];
      }
      if (keep) b.entries.push_back(std::move(m));
    }
  }
  return b;
}

MatrixXd block_value(const sdp::SdpSolution& s, int block) {
  return s.blocks[static_cast<std::size_t>(block)];
}

double min_eig(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

std::vector<Monomial> monomials_of_degree(int nvars, int degree) {
  std::vector<Monomial> out;
  if (nvars == 0) {
    if (degree == 0) out.emplace_back(0);
    return out;
  }
  std::vector<int> exps(static_cast<std::size_t>(nvars), 0);
  enumerate(nvars, 0, degree, exps, out);
  return out;
}

MonomialBasis make_basis_range(int nvars, int min_degree, int max_degree) {
  if (min_degree < 0 || max_degree < 0) throw std::invalid_argument("make_basis: negative degree");
  MonomialBasis b;
  b.nvars = nvars;
  b.min_degree = min_degree;
  b.max_degree = max_degree;
  for (int d = min_degree; d <= max_degree; ++d) {
    auto ms = monomials_of_degree(nvars, d);
    b.entries.insert(b.entries.end(), ms.begin(), ms.end());
  }
  return b;
}

MonomialBasis make_basis(int nvars, int half_degree, bool include_constant) {
  return make_basis_range(nvars, include_constant ? 0 : 1, half_degree);
}

Polynomial gram_polynomial(const MatrixXd& q, const MonomialBasis& basis) {
  Polynomial p(basis.nvars);
  const int n = basis.size();
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double v = i == j ? q(i, j) : q(i, j) + q(j, i);
      if (v != 0.0) p.add_term(basis.entries[static_cast<std::size_t>(i)] * basis.entries[static_cast<std::size_t>(j)], v);
    }
  }
  return p;
}

GramParam gram_decompose(const Polynomial& f, const MonomialBasis& basis) {
  const int n = basis.size();
  if (f.nvars() != basis.nvars) throw poly::DimensionError("gram_decompose: variable count mismatch");
  std::map<Monomial, int> rows;
  std::vector<std::pair<int, int>> cols;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      rows.try_emplace(basis.entries[static_cast<std::size_t>(i)] * basis.entries[static_cast<std::size_t>(j)], 0);
      cols.emplace_back(i, j);
    }
  }
  for (const auto& [m, c] : f.terms()) {
    if (!rows.contains(m)) {
      throw SosError("gram_decompose: monomial of degree " + std::to_string(m.degree()) +
                     " is not a product of basis entries");
    }
  }
  int r = 0;
  for (auto& [m, idx] : rows) idx = r++;

  MatrixXd a = MatrixXd::Zero(r, static_cast<Eigen::Index>(cols.size()));
  VectorXd rhs = VectorXd::Zero(r);
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const auto [i, j] = cols[k];
    const int row = rows.at(basis.entries[static_cast<std::size_t>(i)] * basis.entries[static_cast<std::size_t>(j)]);
    a(row, static_cast<Eigen::Index>(k)) = i == j ? 1.0 : 2.0;
  }
  for (const auto& [m, c] : f.terms()) rhs(rows.at(m)) = c;

  GramParam out;
  out.basis = basis;
  out.q0 = MatrixXd::Zero(n, n);
  auto unpack = [&](const VectorXd& v) {
    MatrixXd q = MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const auto [i, j] = cols[k];
      q(i, j) = q(j, i) = v(static_cast<Eigen::Index>(k));
    }
    return q;
  };
  if (cols.empty()) {
    if (!f.is_zero()) throw SosError("gram_decompose: empty basis for nonzero polynomial");
    return out;
  }
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(a);
  const VectorXd x = cod.solve(rhs);
  if ((a * x - rhs).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, rhs.cwiseAbs().maxCoeff())) {
    throw SosError("gram_decompose: inconsistent coefficient equations");
  }
  out.q0 = unpack(x);
  Eigen::FullPivLU<MatrixXd> lu(a);
  const MatrixXd ker = lu.kernel();
  if (lu.rank() < a.cols()) {
    for (Eigen::Index c = 0; c < ker.cols(); ++c) out.basis_matrices.push_back(unpack(ker.col(c)));
  }
  return out;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Sos: return "sos";
    case Verdict::NotSos: return "not-sos";
    case Verdict::SolverFailure: return "solver-failure";
  }
  return "?";
}

// ---------------------------------------------------------------- AffinePoly

void AffinePoly::add_variable(int var, const Polynomial& direction) {
  auto [it, inserted] = terms_.try_emplace(var, direction);
  if (!inserted) it->second += direction;
  if (it->second.is_zero()) terms_.erase(it);
}

int AffinePoly::min_degree() const {
  int d = constant_.is_zero() ? std::numeric_limits<int>::max() : constant_.min_degree();
  for (const auto& [v, p] : terms_) d = std::min(d, p.min_degree());
  return d == std::numeric_limits<int>::max() ? 0 : d;
}

int AffinePoly::degree() const {
  int d = constant_.degree();
  for (const auto& [v, p] : terms_) d = std::max(d, p.degree());
  return d;
}

AffinePoly& AffinePoly::operator+=(const AffinePoly& o) {
  constant_ += o.constant_;
  for (const auto& [v, p] : o.terms_) add_variable(v, p);
  return *this;
}

AffinePoly& AffinePoly::operator-=(const AffinePoly& o) {
  constant_ -= o.constant_;
  for (const auto& [v, p] : o.terms_) add_variable(v, -p);
  return *this;
}

AffinePoly AffinePoly::operator+(const AffinePoly& o) const {
  AffinePoly r = *this;
  r += o;
  return r;
}

AffinePoly AffinePoly::operator-(const AffinePoly& o) const {
  AffinePoly r = *this;
  r -= o;
  return r;
}

AffinePoly AffinePoly::operator-() const { return *this * -1.0; }

AffinePoly AffinePoly::operator*(double s) const {
  AffinePoly r(constant_ * s);
  for (const auto& [v, p] : terms_) r.add_variable(v, p * s);
  return r;
}

AffinePoly AffinePoly::operator*(const Polynomial& q) const {
  AffinePoly r(constant_ * q);
  for (const auto& [v, p] : terms_) r.add_variable(v, p * q);
  return r;
}

AffinePoly AffinePoly::operator*(const AffinePoly& o) const {
  if (!is_known() && !o.is_known()) {
    throw SosError("product of two unknown polynomials is not affine in the decision variables");
  }
  return is_known() ? o * constant_ : *this * o.constant_;
}

Polynomial AffinePoly::evaluate(const std::vector<double>& values) const {
  Polynomial r = constant_;
  for (const auto& [v, p] : terms_) r += p * values.at(static_cast<std::size_t>(v));
  return r;
}

// ---------------------------------------------------------------- SosProgram

SosProgram::SosProgram(int nvars) : nvars_(nvars) {
  if (nvars <= 0) throw std::invalid_argument("SosProgram: need at least one variable");
}

int SosProgram::add_var(VariableRef ref) {
  vars_.push_back(ref);
  return static_cast<int>(vars_.size()) - 1;
}

int SosProgram::add_block(const std::string& name, int dim) {
  blocks_.push_back({name, dim});
  return static_cast<int>(blocks_.size()) - 1;
}

AffinePoly SosProgram::new_free_poly(const std::string& name, const std::vector<Monomial>& monomials) {
  UnknownDecl u;
  u.name = name;
  u.basis.nvars = nvars_;
  u.basis.entries = monomials;
  AffinePoly a(nvars_);
  for (const auto& m : monomials) {
    if (m.nvars() != nvars_) throw poly::DimensionError("new_free_poly: monomial variable count");
    u.degree = std::max(u.degree, m.degree());
    const int v = add_var({VariableRef::Kind::Free, num_free_++, 0, 0});
    u.vars.push_back(v);
    a.add_variable(v, Polynomial::monomial(m));
  }
  u.basis.max_degree = u.degree;
  unknowns_.push_back(std::move(u));
  return a;
}

AffinePoly SosProgram::new_free_poly(const std::string& name, int degree, bool vanish_at_origin) {
  if (degree < 0) throw std::invalid_argument("new_free_poly: negative degree");
  const auto b = make_basis_range(nvars_, vanish_at_origin ? 1 : 0, degree);
  AffinePoly a = new_free_poly(name, b.entries);
  unknowns_.back().vanish_at_origin = vanish_at_origin;
  unknowns_.back().degree = degree;
  return a;
}

AffinePoly SosProgram::new_scalar(const std::string& name) {
  return new_free_poly(name, std::vector<Monomial>{Monomial(nvars_)});
}

AffinePoly SosProgram::new_sos_poly(const std::string& name, int degree, bool vanish_at_origin) {
  if (degree < 0 || degree % 2 != 0) throw std::invalid_argument("new_sos_poly: degree must be even and non-negative");
  if (vanish_at_origin && degree == 0) throw std::invalid_argument("new_sos_poly: degree-0 SOS cannot vanish at the origin");
  UnknownDecl u;
  u.name = name;
  u.degree = degree;
  u.vanish_at_origin = vanish_at_origin;
  u.sos = true;
  u.basis = make_basis_range(nvars_, vanish_at_origin ? 1 : 0, degree / 2);
  const int n = u.basis.size();
  u.block = add_block(name, n);
  AffinePoly a(nvars_);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const int v = add_var({VariableRef::Kind::Gram, u.block, i, j});
      u.vars.push_back(v);
      const Monomial m = u.basis.entries[static_cast<std::size_t>(i)] * u.basis.entries[static_cast<std::size_t>(j)];
      a.add_variable(v, Polynomial::monomial(m, i == j ? 1.0 : 2.0));
    }
  }
  unknowns_.push_back(std::move(u));
  return a;
}

void SosProgram::add_sos_constraint(const std::string& name, const AffinePoly& expr) {
  if (expr.nvars() != nvars_) throw poly::DimensionError("add_sos_constraint: variable count mismatch");
  ConstraintDecl c;
  c.name = name;
  c.expr = expr;
  Support sup(nvars_);
  sup.add(expr.constant());
  for (const auto& [v, p] : expr.terms()) sup.add(p);
  c.basis = pruned_basis(nvars_, sup);
  if (c.basis.size() == 0) {
    c.equality = true;
  } else {
    c.block = add_block(name, c.basis.size());
  }
  constraints_.push_back(std::move(c));
}

void SosProgram::add_equality(const std::string& name, const AffinePoly& expr) {
  if (expr.nvars() != nvars_) throw poly::DimensionError("add_equality: variable count mismatch");
  ConstraintDecl c;
  c.name = name;
  c.expr = expr;
  c.equality = true;
  constraints_.push_back(std::move(c));
}

void SosProgram::minimize(const AffinePoly& objective) {
  if (objective.degree() > 0) throw SosError("minimize: objective must be a scalar (degree 0) expression");
  objective_ = objective;
}

CompiledProgram SosProgram::compile() const {
  if (constraints_.empty()) throw SosError("compile: program has no constraints");
  CompiledProgram out;
  out.variables = vars_;
  auto& prob = out.problem;
  prob.blocks = blocks_;
  prob.num_free = num_free_;

  // Adds coef * x_v to a row.
  auto stamp = [&](sdp::LinearConstraint& row, int v, double coef) {
    const auto& ref = vars_[static_cast<std::size_t>(v)];
    if (ref.kind == VariableRef::Kind::Free) {
      row.free_terms.push_back({ref.index, coef});
    } else {
      row.entries.push_back({ref.index, ref.row, ref.col, ref.row == ref.col ? coef : 0.5 * coef});
    }
  };

  for (const auto& c : constraints_) {
    std::map<Monomial, sdp::LinearConstraint> rows;
    for (const auto& [m, coef] : c.expr.constant().terms()) rows[m].rhs = -coef;
    for (const auto& [v, dir] : c.expr.terms()) {
      for (const auto& [m, coef] : dir.terms()) stamp(rows[m], v, coef);
    }
    if (!c.equality) {
      const int n = c.basis.size();
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          const Monomial m = c.basis.entries[static_cast<std::size_t>(i)] * c.basis.entries[static_cast<std::size_t>(j)];
          rows[m].entries.push_back({c.block, i, j, -1.0});
        }
      }
    }
    for (auto& [m, row] : rows) {
      out.row_labels.push_back(c.name + ":" + poly::to_string(Polynomial::monomial(m)));
      prob.constraints.push_back(std::move(row));
    }
  }

  if (objective_) {
    for (const auto& [v, dir] : objective_->terms()) {
      const double coef = dir.coefficient(Monomial(nvars_));
      const auto& ref = vars_[static_cast<std::size_t>(v)];
      if (ref.kind == VariableRef::Kind::Free) {
        prob.free_objective.push_back({ref.index, coef});
      } else {
        prob.objective.push_back({ref.index, ref.row, ref.col, ref.row == ref.col ? coef : 0.5 * coef});
      }
    }
  }

  if (trace_budget_) {
    const int slack = prob.add_block("trace_slack", 1);
    sdp::LinearConstraint row;
    for (std::size_t k = 0; k < prob.blocks.size(); ++k) {
      for (int i = 0; i < prob.blocks[k].dim; ++i) row.entries.push_back({static_cast<int>(k), i, i, 1.0});
    }
    (void)slack;
    row.rhs = *trace_budget_;
    out.row_labels.push_back("trace_budget");
    prob.constraints.push_back(std::move(row));
  }
  return out;
}

SosSolution SosProgram::solve(const sdp::Settings& settings) const {
  const CompiledProgram cp = compile();
  SosSolution sol;
  sol.sdp_ = sdp::solve(cp.problem, settings);
  sol.values_.assign(vars_.size(), 0.0);
  for (std::size_t v = 0; v < vars_.size(); ++v) {
    const auto& ref = vars_[v];
    sol.values_[v] = ref.kind == VariableRef::Kind::Free
                         ? sol.sdp_.free(ref.index)
                         : sol.sdp_.blocks[static_cast<std::size_t>(ref.index)](ref.row, ref.col);
  }
  if (!sol.ok()) return sol;
  for (const auto& c : constraints_) {
    ConstraintReport r;
    r.name = c.name;
    const Polynomial value = c.expr.evaluate(sol.values_);
    if (c.equality) {
      r.gram_mismatch = value.max_abs_coefficient();
      r.min_eigenvalue = 0.0;
    } else {
      const MatrixXd q = block_value(sol.sdp_, c.block);
      r.gram_mismatch = gram_polynomial(q, c.basis).max_coefficient_distance(value);
      r.min_eigenvalue = min_eig(q);
    }
    sol.reports_.push_back(std::move(r));
  }
  for (const auto& u : unknowns_) {
    if (!u.sos) continue;
    sol.reports_.push_back({u.name, 0.0, min_eig(block_value(sol.sdp_, u.block))});
  }
  return sol;
}

double SosSolution::scalar(const AffinePoly& expr) const {
  const Polynomial p = value(expr);
  return p.coefficient(Monomial(p.nvars()));
}

double SosSolution::worst_mismatch() const {
  double w = 0.0;
  for (const auto& r : reports_) w = std::max(w, r.gram_mismatch);
  return w;
}

double SosSolution::worst_eigenvalue() const {
  double w = std::numeric_limits<double>::infinity();
  for (const auto& r : reports_) w = std::min(w, r.min_eigenvalue);
  return w;
}

bool SosSolution::verified() const {
  return ok() && worst_mismatch() <= kGramTolerance && worst_eigenvalue() >= -kEigenTolerance;
}

// ---------------------------------------------------------------- check_sos

SosCheck check_sos(const Polynomial& f, const sdp::Settings& settings) {
  SosCheck out;
  out.basis.nvars = f.nvars();
  if (f.is_zero()) {
    out.verdict = Verdict::Sos;
    out.sdp_status = sdp::Status::Feasible;
    out.message = "zero polynomial";
    return out;
  }
  if (f.degree() % 2 != 0) {
    out.verdict = Verdict::NotSos;
    out.message = "odd degree";
    return out;
  }
  if (f.nvars() == 0) {
    const double c = f.coefficient(Monomial(0));
    out.verdict = c >= 0 ? Verdict::Sos : Verdict::NotSos;
    return out;
  }
  SosProgram prog(f.nvars());
  prog.add_sos_constraint("f", AffinePoly(f));
  const auto& decl = prog.constraints().front();
  out.basis = decl.basis;
  if (decl.equality) {
    out.verdict = Verdict::NotSos;
    out.message = "no Gram basis can represent the polynomial";
    return out;
  }
  const SosSolution sol = prog.solve(settings);
  out.sdp_status = sol.status();
  out.message = sol.sdp().message;
  switch (sol.status()) {
    case sdp::Status::Infeasible:
      out.verdict = Verdict::NotSos;
      return out;
    case sdp::Status::Optimal:
    case sdp::Status::Feasible:
      break;
    default:
      out.verdict = Verdict::SolverFailure;
      return out;
  }
  out.gram = sol.sdp().blocks[static_cast<std::size_t>(decl.block)];
  out.gram_mismatch = gram_polynomial(out.gram, out.basis).max_coefficient_distance(f);
  out.min_eigenvalue = min_eig(out.gram);
  if (out.gram_mismatch <= kGramTolerance && out.min_eigenvalue >= -kEigenTolerance) {
    out.verdict = Verdict::Sos;
  } else {
    out.verdict = Verdict::SolverFailure;
    out.message = "witness failed re-verification";
  }
  return out;
}

// ---------------------------------------------------------------- JSON dump

std::string to_json(const sdp::SdpProblem& problem, int indent) {
  using nlohmann::json;
  json j;
  j["blocks"] = json::array();
  for (const auto& b : problem.blocks) j["blocks"].push_back({{"name", b.name}, {"dim", b.dim}});
  j["num_free"] = problem.num_free;
  auto entries = [](const std::vector<sdp::Entry>& es) {
    json a = json::array();
    for (const auto& e : es) a.push_back({e.block, e.row, e.col, e.value});
    return a;
  };
  auto frees = [](const std::vector<sdp::FreeTerm>& fs) {
    json a = json::array();
    for (const auto& f : fs) a.push_back({f.index, f.value});
    return a;
  };
  j["objective"] = {{"entries", entries(problem.objective)}, {"free", frees(problem.free_objective)}};
  j["constraints"] = json::array();
  for (const auto& c : problem.constraints) {
    j["constraints"].push_back({{"rhs", c.rhs}, {"entries", entries(c.entries)}, {"free", frees(c.free_terms)}});
  }
  return j.dump(indent);
}

}  // namespace csr::sos
