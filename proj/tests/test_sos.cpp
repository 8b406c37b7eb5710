#include "csr/sos.hpp"

#include <catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include <random>

using namespace csr;
using namespace csr::sos;
using poly::Monomial;
using poly::Polynomial;

namespace {

Polynomial random_sos(std::mt19937_64& rng, int nvars, int squares) {
  std::normal_distribution<double> nd;
  const MonomialBasis b = make_basis(nvars, 2);
  Polynomial f(nvars);
  for (int k = 0; k < squares; ++k) {
    Polynomial fi(nvars);
    for (const auto& m : b.entries) fi.add_term(m, nd(rng));
    f += fi * fi;
  }
  return f;
}

// Witness re-verification, independent of the solver's own reports.
void reverify(const Polynomial& f, const SosCheck& r) {
  REQUIRE(r.verdict == Verdict::Sos);
  const Polynomial back = gram_polynomial(r.gram, r.basis);
  CHECK(back.max_coefficient_distance(f) <= 1e-7);
  const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r.gram).eigenvalues().minCoeff();
  CHECK(lmin >= -1e-8);
}

}  // namespace

TEST_CASE("basis sizes", "[sos]") {
  const auto b1 = make_basis(1, 1, true);
  REQUIRE(b1.size() == 2);
  CHECK(b1.entries[0] == Monomial(std::vector<int>{0}));
  CHECK(b1.entries[1] == Monomial(std::vector<int>{1}));
  CHECK(make_basis(2, 2, true).size() == 6);
  CHECK(make_basis(6, 1, false).size() == 6);
  CHECK(make_basis(6, 2, true).size() == 28);
}

TEST_CASE("gram decomposition of a perfect square", "[sos]") {
  const Polynomial x = Polynomial::variable(1, 0);
  const Polynomial f = x * x + x * 2.0 + Polynomial::constant(1, 1.0);
  const auto g = gram_decompose(f, make_basis(1, 1));
  CHECK(g.basis_matrices.empty());
  Eigen::Matrix2d expect;
  expect << 1, 1, 1, 1;
  CHECK((g.q0 - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gram nullspace dimension for x^4", "[sos]") {
  // 6 symmetric entries, 5 coefficient equations (degrees 0..4).
  const Polynomial x = Polynomial::variable(1, 0);
  const auto basis = make_basis(1, 2);
  const auto g = gram_decompose(x * x * x * x, basis);
  CHECK(g.basis_matrices.size() == 1);
  CHECK(gram_polynomial(g.q0, basis).max_coefficient_distance(x * x * x * x) < 1e-10);
  for (const auto& q : g.basis_matrices) CHECK(gram_polynomial(q, basis).max_abs_coefficient() < 1e-10);

  const auto z = gram_decompose(Polynomial(1), basis);
  CHECK(z.q0.cwiseAbs().maxCoeff() == 0.0);
  CHECK(z.basis_matrices.size() == 1);
}

TEST_CASE("gram decomposition on two variables", "[sos]") {
  std::mt19937_64 rng(5);
  const Polynomial f = random_sos(rng, 2, 2);
  const auto basis = make_basis(2, 2);
  const auto g = gram_decompose(f, basis);
  // 21 symmetric entries, 15 monomials of degree <= 4.
  CHECK(g.basis_matrices.size() == 6);
  CHECK(gram_polynomial(g.q0, basis).max_coefficient_distance(f) < 1e-10);
  for (const auto& q : g.basis_matrices) CHECK(gram_polynomial(q, basis).max_abs_coefficient() < 1e-10);
}

TEST_CASE("unrepresentable monomials are rejected", "[sos]") {
  const Polynomial one = Polynomial::constant(1, 1.0);
  CHECK_THROWS_AS(gram_decompose(one, make_basis(1, 1, false)), SosError);
  const Polynomial x = Polynomial::variable(1, 0);
  CHECK_THROWS_AS(gram_decompose(x * x * x * x * x, make_basis(1, 2)), SosError);
}

TEST_CASE("check_sos on simple polynomials", "[sos]") {
  const Polynomial x = Polynomial::variable(1, 0);
  const Polynomial one = Polynomial::constant(1, 1.0);
  const auto a = check_sos(x * x + one);
  reverify(x * x + one, a);
  CHECK(check_sos(-(x * x)).verdict == Verdict::NotSos);
  CHECK(check_sos(x * x * x + one).verdict == Verdict::NotSos);
  CHECK(check_sos(Polynomial(1)).verdict == Verdict::Sos);
}

TEST_CASE("Motzkin polynomial is not SOS", "[sos]") {
  const Polynomial x = Polynomial::variable(2, 0);
  const Polynomial y = Polynomial::variable(2, 1);
  const Polynomial motzkin = x * x * x * x * y * y + x * x * y * y * y * y - x * x * y * y * 3.0 + Polynomial::constant(2, 1.0);
  CHECK(check_sos(motzkin).verdict == Verdict::NotSos);
}

TEST_CASE("constructed SOS polynomials are accepted", "[sos]") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + t % 4;
    const Polynomial f = random_sos(rng, n, 1 + t % 3);
    const auto r = check_sos(f);
    INFO("trial " << t << ": " << r.message);
    reverify(f, r);
  }
}

TEST_CASE("polynomials negative somewhere are rejected", "[sos]") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + t % 4;
    const Polynomial g = random_sos(rng, n, 2);
    std::vector<double> x0(static_cast<std::size_t>(n));
    for (auto& v : x0) v = u(rng);
    const Polynomial f = g - Polynomial::constant(n, g.evaluate(x0) + 0.5);
    REQUIRE(f.evaluate(x0) < 0.0);
    CHECK(check_sos(f).verdict == Verdict::NotSos);
  }
}

TEST_CASE("programs with unknown polynomials", "[sos]") {
  const Polynomial x = Polynomial::variable(1, 0);
  SECTION("feasible: s SOS and s - x^2 SOS") {
    SosProgram prog(1);
    const AffinePoly s = prog.new_sos_poly("s", 2);
    prog.add_sos_constraint("gap", s - AffinePoly(x * x));
    const auto sol = prog.solve();
    REQUIRE(sol.ok());
    CHECK(sol.verified());
    const Polynomial sv = sol.value(s);
    CHECK(check_sos(sv - x * x).verdict == Verdict::Sos);
  }
  SECTION("infeasible: s SOS with s + x^2 + 1 == 0") {
    SosProgram prog(1);
    const AffinePoly s = prog.new_sos_poly("s", 2);
    prog.add_equality("sum", s + AffinePoly(x * x + Polynomial::constant(1, 1.0)));
    CHECK(prog.solve().status() == sdp::Status::Infeasible);
  }
  SECTION("local Lyapunov program for zdot = -z + z^3") {
    const double beta = 0.25;
    const double eps = 1e-6;
    const std::vector<Polynomial> f{x * x * x - x};
    SosProgram prog(1);
    const AffinePoly v = prog.new_free_poly("V", 2, true);
    const AffinePoly s6 = prog.new_sos_poly("s6", 2);
    // V is linear in its coefficients, so Vdot is too
    AffinePoly lie(1);
    for (const auto& [var, dir] : v.terms()) {
      AffinePoly t(1);
      t.add_variable(var, poly::lie_derivative(dir, f));
      lie += t;
    }
    prog.add_sos_constraint("positive", v - AffinePoly(x * x * eps));
    prog.add_sos_constraint("decrease", -(s6 * (Polynomial::constant(1, beta) - x * x)) - lie - AffinePoly(x * x * eps));
    const auto sol = prog.solve();
    REQUIRE(sol.ok());
    CHECK(sol.verified());
    CHECK(sol.worst_mismatch() <= 1e-7);
  }
}

TEST_CASE("products of unknowns are rejected", "[sos]") {
  SosProgram prog(1);
  const AffinePoly a = prog.new_free_poly("a", 1);
  const AffinePoly b = prog.new_free_poly("b", 1);
  CHECK_THROWS_AS(a * b, SosError);
  CHECK_NOTHROW(a * AffinePoly(Polynomial::constant(1, 2.0)));
}

TEST_CASE("empty programs are rejected", "[sos]") {
  SosProgram prog(2);
  CHECK_THROWS_AS(prog.compile(), SosError);
}

TEST_CASE("compiled problems serialize to JSON", "[sos]") {
  const Polynomial x = Polynomial::variable(1, 0);
  SosProgram prog(1);
  const AffinePoly s = prog.new_sos_poly("s", 2);
  prog.add_sos_constraint("gap", s - AffinePoly(x * x));
  const auto c = prog.compile();
  const std::string j = to_json(c.problem);
  CHECK(j.find("\"blocks\"") != std::string::npos);
  CHECK(j.find("\"constraints\"") != std::string::npos);
  CHECK(c.row_labels.size() == c.problem.constraints.size());
}
