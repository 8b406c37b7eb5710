#include "csr/sdp.hpp"

#include <catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include <random>

using namespace csr::sdp;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Independent residual reconstruction from the returned matrices.
double equality_residual(const SdpProblem& p, const SdpSolution& s) {
  double worst = 0.0;
  for (const auto& c : p.constraints) {
    double lhs = 0.0;
    for (const auto& e : c.entries) {
      const double x = s.blocks[static_cast<std::size_t>(e.block)](e.row, e.col);
      lhs += (e.row == e.col ? 1.0 : 2.0) * e.value * x;
    }
    for (const auto& f : c.free_terms) lhs += f.value * s.free(f.index);
    worst = std::max(worst, std::abs(lhs - c.rhs));
  }
  return worst;
}

double min_eigenvalue(const SdpSolution& s) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& x : s.blocks) m = std::min(m, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(x).eigenvalues().minCoeff());
  return m;
}

void check_invariants(const SdpProblem& p, const SdpSolution& s) {
  if (!s.ok()) return;
  CHECK(min_eigenvalue(s) >= -1e-8);
  CHECK(equality_residual(p, s) <= 1e-7);
  if (p.has_objective()) CHECK(std::abs(s.gap) <= 1e-7 * std::max(1.0, std::abs(s.primal_objective)));
}

Eigen::Matrix2d random_sym(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Eigen::Matrix2d c;
  c(0, 0) = u(rng);
  c(1, 1) = u(rng);
  c(0, 1) = c(1, 0) = u(rng);
  return c;
}

std::vector<Entry> entries_of(const Eigen::Matrix2d& c) {
  return {{0, 0, 0, c(0, 0)}, {0, 0, 1, c(0, 1)}, {0, 1, 1, c(1, 1)}};
}

}  // namespace

TEST_CASE("minimize trace with X11 = 1", "[sdp]") {
  SdpProblem p;
  p.add_block("X", 1);
  p.constraints.push_back({{{0, 0, 0, 1.0}}, {}, 1.0});
  p.objective = {{0, 0, 0, 1.0}};
  const auto s = solve(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK_THAT(s.primal_objective, WithinAbs(1.0, 1e-6));
  CHECK_THAT(s.blocks[0](0, 0), WithinAbs(1.0, 1e-6));
  check_invariants(p, s);
}

TEST_CASE("negative trace is infeasible", "[sdp]") {
  SdpProblem p;
  p.add_block("X", 2);
  p.constraints.push_back({{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}, {}, -1.0});
  CHECK(solve(p).status == Status::Infeasible);
}

TEST_CASE("affine matrix inequality [[x,1],[1,x]]", "[sdp]") {
  SdpProblem p;
  p.add_block("X", 2);
  const int u = p.add_free();
  p.constraints.push_back({{{0, 0, 0, 1.0}}, {{u, -1.0}}, 0.0});
  p.constraints.push_back({{{0, 1, 1, 1.0}}, {{u, -1.0}}, 0.0});
  p.constraints.push_back({{{0, 0, 1, 0.5}}, {}, 1.0});
  p.free_objective = {{u, 1.0}};
  const auto s = solve(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK_THAT(s.free(0), WithinAbs(1.0, 1e-6));
  check_invariants(p, s);
}

TEST_CASE("malformed problems are rejected", "[sdp]") {
  SdpProblem p;
  p.add_block("X", 2);
  p.constraints.push_back({{{0, 1, 0, 1.0}}, {}, 1.0});
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  SdpProblem q;
  q.add_block("X", 2);
  q.constraints.push_back({{{1, 0, 0, 1.0}}, {}, 1.0});
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
}

TEST_CASE("2x2 oracle: unit trace gives the smallest eigenvalue", "[sdp]") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const Eigen::Matrix2d c = random_sym(rng);
    SdpProblem p;
    p.add_block("X", 2);
    p.constraints.push_back({{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}, {}, 1.0});
    p.objective = entries_of(c);
    const auto s = solve(p);
    REQUIRE(s.status == Status::Optimal);
    const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(c).eigenvalues()(0);
    CHECK_THAT(s.primal_objective, WithinAbs(lmin, 1e-4));
    check_invariants(p, s);
  }
}

TEST_CASE("2x2 oracle: X11 = 1 completes the square", "[sdp]") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    Eigen::Matrix2d c = random_sym(rng);
    c(1, 1) = std::abs(c(1, 1)) + 0.2;
    SdpProblem p;
    p.add_block("X", 2);
    p.constraints.push_back({{{0, 0, 0, 1.0}}, {}, 1.0});
    p.objective = entries_of(c);
    const auto s = solve(p);
    REQUIRE(s.status == Status::Optimal);
    // X = [[1, b], [b, b^2]] with b = -C12 / C22.
    const double expect = c(0, 0) - c(0, 1) * c(0, 1) / c(1, 1);
    CHECK_THAT(s.primal_objective, WithinAbs(expect, 1e-4));
    check_invariants(p, s);
  }
}

TEST_CASE("objective scaling scales the optimum", "[sdp]") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    const int n = 3;
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(n, n);
    SdpProblem p;
    p.add_block("X", n);
    // Feasible by construction: X0 = I satisfies every constraint.
    for (int k = 0; k < 3; ++k) {
      LinearConstraint c;
      double rhs = 0.0;
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          const double v = u(rng);
          c.entries.push_back({0, i, j, v});
          if (i == j) rhs += v;
        }
      }
      c.rhs = rhs;
      p.constraints.push_back(c);
    }
    // Positive definite cost keeps the problem bounded.
    const Eigen::MatrixXd cm = a * a.transpose() + Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) p.objective.push_back({0, i, j, cm(i, j)});
    }
    SdpProblem p2 = p;
    for (auto& e : p2.objective) e.value *= 2.0;
    const auto s1 = solve(p);
    const auto s2 = solve(p2);
    REQUIRE(s1.status == Status::Optimal);
    REQUIRE(s2.status == Status::Optimal);
    CHECK_THAT(s2.primal_objective, WithinRel(2.0 * s1.primal_objective, 1e-6));
    check_invariants(p, s1);
    check_invariants(p2, s2);
  }
}

TEST_CASE("solver is deterministic", "[sdp]") {
  SdpProblem p;
  p.add_block("X", 2);
  p.constraints.push_back({{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}, {}, 1.0});
  p.objective = {{0, 0, 0, 0.3}, {0, 0, 1, -0.7}, {0, 1, 1, 1.1}};
  const auto a = solve(p);
  const auto b = solve(p);
  CHECK(a.iterations == b.iterations);
  CHECK(a.blocks[0] == b.blocks[0]);
}

TEST_CASE("reported residuals match an independent recomputation", "[sdp]") {
  SdpProblem p;
  p.add_block("X", 2);
  p.add_block("Y", 1);
  p.constraints.push_back({{{0, 0, 0, 1.0}, {1, 0, 0, 1.0}}, {}, 2.0});
  p.constraints.push_back({{{0, 0, 1, 1.0}}, {}, 0.25});
  p.objective = {{0, 1, 1, 1.0}, {1, 0, 0, 3.0}};
  const auto s = solve(p);
  REQUIRE(s.ok());
  const auto r = evaluate_residuals(p, s);
  CHECK_THAT(r.equality, WithinAbs(equality_residual(p, s), 1e-12));
  CHECK_THAT(r.min_eigenvalue, WithinAbs(min_eigenvalue(s), 1e-10));
  check_invariants(p, s);
}
