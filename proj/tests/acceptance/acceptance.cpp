// Acceptance checks. `acceptance N` runs criterion N, no argument runs all.
// One line per criterion: "Criterion N: PASS|FAIL <details>".

#include "csr/json_io.hpp"
#include "csr/powersys.hpp"
#include "csr/roa.hpp"
#include "csr/sdp.hpp"
#include "csr/sim.hpp"
#include "csr/sos.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>

using namespace csr;
using poly::Monomial;
using poly::Polynomial;

namespace {

const std::string kModel = std::string(CSR_DATA_DIR) + "/three_machine.model";

struct Result {
  bool pass = false;
  std::string detail;
};

class Timer {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

int jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---------------------------------------------------------------- 1

Result criterion1() {
  const Timer t;
  const auto pc = powersys::build_case(powersys::load_model(kModel));
  const double secs = t.seconds();
  const double a = pc.swing.delta_s(1), b = pc.swing.delta_s(2);
  const double err = std::max(std::abs(a - 0.3165), std::abs(b - 0.3451));
  return {err <= 1e-3 && secs < 1.0, "SEP (" + fmt(a) + ", " + fmt(b) + ") vs (0.3165, 0.3451), max error " + fmt(err, 3) +
                                         " (tol 1e-3), " + fmt(secs, 2) + " s"};
}

// ---------------------------------------------------------------- 2

Result criterion2() {
  const Timer t;
  const auto pc = powersys::build_case(powersys::load_model(kModel));
  const auto& sw = pc.swing;
  const auto y = powersys::build_admittance(pc.model, pc.eq.pf);
  const int nb = static_cast<int>(pc.model.buses.size());
  const int ng = sw.ng;
  const Eigen::MatrixXcd y11 = y.topLeftCorner(nb, nb);
  const Eigen::MatrixXcd y12 = y.topRightCorner(nb, ng);
  const Eigen::FullPivLU<Eigen::MatrixXcd> lu(y11);
  const int bus = pc.model.bus_index(sw.monitored_bus_ids.at(0));
  const double vmin2 = sw.v_min.at(0) * sw.v_min.at(0);

  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> spd(-5.0, 5.0);
  const int nr = sw.nrel();
  double f_err = 0.0, h_err = 0.0;
  for (int s = 0; s < 1000; ++s) {
    std::vector<double> x(static_cast<std::size_t>(2 * nr));
    for (int a = 0; a < nr; ++a) {
      x[static_cast<std::size_t>(a)] = ang(rng);
      x[static_cast<std::size_t>(nr + a)] = spd(rng);
    }
    const auto z = powersys::state_to_z(sw, x);
    const auto dx = sw.rhs(x);
    const auto fz = poly::evaluate(pc.system.f, z);
    for (int a = 0; a < nr; ++a) {
      const double th = x[static_cast<std::size_t>(a)] - sw.delta_s(sw.others[static_cast<std::size_t>(a)]);
      const double thd = dx[static_cast<std::size_t>(a)];
      const double expect[3] = {dx[static_cast<std::size_t>(nr + a)], std::cos(th) * thd, std::sin(th) * thd};
      const std::size_t idx[3] = {static_cast<std::size_t>(a), static_cast<std::size_t>(nr + 2 * a),
                                  static_cast<std::size_t>(nr + 2 * a + 1)};
      for (int k = 0; k < 3; ++k) f_err = std::max(f_err, std::abs(fz[idx[k]] - expect[k]));
    }
    Eigen::VectorXcd e(ng);
    e(sw.ref) = pc.eq.e_mag(sw.ref);
    for (int a = 0; a < nr; ++a) {
      const int m = sw.others[static_cast<std::size_t>(a)];
      e(m) = std::polar(pc.eq.e_mag(m), x[static_cast<std::size_t>(a)]);
    }
    const Eigen::VectorXcd v = lu.solve(-y12 * e);
    h_err = std::max(h_err, std::abs(pc.system.h.at(0).evaluate(z) - (std::norm(v(bus)) - vmin2)));
  }
  const double secs = t.seconds();
  return {f_err <= 1e-8 && h_err <= 1e-8 && secs < 10.0,
          "max |f - chain rule| " + fmt(f_err, 3) + ", max |h - network solve| " + fmt(h_err, 3) + " (tol 1e-8), " +
              fmt(secs, 2) + " s"};
}

// ---------------------------------------------------------------- 3

Polynomial random_sos(std::mt19937_64& rng, int nvars, int squares) {
  std::normal_distribution<double> nd;
  const auto basis = sos::make_basis(nvars, 2);
  Polynomial f(nvars);
  for (int k = 0; k < squares; ++k) {
    Polynomial fi(nvars);
    for (const auto& m : basis.entries) fi.add_term(m, nd(rng));
    f += fi * fi;
  }
  return f;
}

bool witness_ok(const Polynomial& f, const sos::SosCheck& r) {
  if (r.verdict != sos::Verdict::Sos) return false;
  const double mismatch = sos::gram_polynomial(r.gram, r.basis).max_coefficient_distance(f);
  const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r.gram).eigenvalues().minCoeff();
  return mismatch <= 1e-7 && lmin >= -1e-8;
}

Result criterion3() {
  const Timer t;
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int accepted = 0, rejected = 0;
  for (int k = 0; k < 50; ++k) {
    const int n = 1 + k % 4;
    const Polynomial f = random_sos(rng, n, 1 + k % 3);
    if (witness_ok(f, sos::check_sos(f))) ++accepted;
  }
  for (int k = 0; k < 50; ++k) {
    const int n = 1 + k % 4;
    const Polynomial g = random_sos(rng, n, 2);
    std::vector<double> x0(static_cast<std::size_t>(n));
    for (auto& v : x0) v = u(rng);
    const Polynomial f = g - Polynomial::constant(n, g.evaluate(x0) + 0.5);
    if (sos::check_sos(f).verdict == sos::Verdict::NotSos) ++rejected;
  }
  const Polynomial x = Polynomial::variable(2, 0);
  const Polynomial y = Polynomial::variable(2, 1);
  const Polynomial motzkin = x * x * x * x * y * y + x * x * y * y * y * y - x * x * y * y * 3.0 + Polynomial::constant(2, 1.0);
  const bool motzkin_rejected = sos::check_sos(motzkin).verdict == sos::Verdict::NotSos;
  const double secs = t.seconds();
  return {accepted == 50 && rejected == 50 && motzkin_rejected && secs < 60.0,
          "SOS accepted and re-verified " + std::to_string(accepted) + "/50, negative rejected " + std::to_string(rejected) +
              "/50, Motzkin " + (motzkin_rejected ? "rejected" : "accepted") + ", " + fmt(secs, 2) + " s"};
}

// ---------------------------------------------------------------- 4

bool residuals_ok(const sdp::SdpProblem& p, const sdp::SdpSolution& s) {
  if (!s.ok()) return true;
  double eq = 0.0;
  for (const auto& c : p.constraints) {
    double lhs = 0.0;
    for (const auto& e : c.entries) lhs += (e.row == e.col ? 1.0 : 2.0) * e.value * s.blocks[static_cast<std::size_t>(e.block)](e.row, e.col);
    for (const auto& f : c.free_terms) lhs += f.value * s.free(f.index);
    eq = std::max(eq, std::abs(lhs - c.rhs));
  }
  double lmin = 0.0;
  for (const auto& b : s.blocks) lmin = std::min(lmin, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(b).eigenvalues().minCoeff());
  return eq <= 1e-7 && lmin >= -1e-8;
}

Result criterion4() {
  int solved = 0, total = 0;
  bool invariants = true;
  double worst = 0.0;
  auto record = [&](const sdp::SdpProblem& p, double expect) {
    ++total;
    const auto s = sdp::solve(p);
    invariants = invariants && residuals_ok(p, s);
    if (s.status != sdp::Status::Optimal) return;
    const double err = std::abs(s.primal_objective - expect);
    worst = std::max(worst, err);
    if (err <= 1e-6) ++solved;
  };
  {
    // min x s.t. x = 1, x >= 0
    sdp::SdpProblem p;
    p.add_block("X", 1);
    p.constraints.push_back({{{0, 0, 0, 1.0}}, {}, 1.0});
    p.objective = {{0, 0, 0, 1.0}};
    record(p, 1.0);
  }
  {
    // min 2x s.t. x = 3
    sdp::SdpProblem p;
    p.add_block("X", 1);
    p.constraints.push_back({{{0, 0, 0, 1.0}}, {}, 3.0});
    p.objective = {{0, 0, 0, 2.0}};
    record(p, 6.0);
  }
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 10; ++k) {
    // min <C, X> s.t. tr X = 1: smallest eigenvalue of C
    Eigen::Matrix2d c;
    c << u(rng), 0.0, 0.0, u(rng);
    c(0, 1) = c(1, 0) = u(rng);
    sdp::SdpProblem p;
    p.add_block("X", 2);
    p.constraints.push_back({{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}, {}, 1.0});
    p.objective = {{0, 0, 0, c(0, 0)}, {0, 0, 1, c(0, 1)}, {0, 1, 1, c(1, 1)}};
    record(p, Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(c).eigenvalues()(0));
  }
  for (int k = 0; k < 10; ++k) {
    // min <C, X> s.t. X11 = 1 with C22 > 0: C11 - C12^2 / C22
    Eigen::Matrix2d c;
    c << u(rng), 0.0, 0.0, std::abs(u(rng)) + 0.2;
    c(0, 1) = c(1, 0) = u(rng);
    sdp::SdpProblem p;
    p.add_block("X", 2);
    p.constraints.push_back({{{0, 0, 0, 1.0}}, {}, 1.0});
    p.objective = {{0, 0, 0, c(0, 0)}, {0, 0, 1, c(0, 1)}, {0, 1, 1, c(1, 1)}};
    record(p, c(0, 0) - c(0, 1) * c(0, 1) / c(1, 1));
  }
  {
    // min t s.t. [[t, 1], [1, t]] >= 0: t = 1
    sdp::SdpProblem p;
    p.add_block("X", 2);
    const int tv = p.add_free();
    p.constraints.push_back({{{0, 0, 0, 1.0}}, {{tv, -1.0}}, 0.0});
    p.constraints.push_back({{{0, 1, 1, 1.0}}, {{tv, -1.0}}, 0.0});
    p.constraints.push_back({{{0, 0, 1, 0.5}}, {}, 1.0});
    p.free_objective = {{tv, 1.0}};
    record(p, 1.0);
  }
  return {solved == total && invariants, std::to_string(solved) + "/" + std::to_string(total) +
                                             " instances within 1e-6 (worst " + fmt(worst, 3) + "), residual invariants " +
                                             (invariants ? "hold" : "violated")};
}

// ---------------------------------------------------------------- 5

double reach(const Polynomial& v, double dir) {
  double r = 0.0;
  const double step = 1e-4;
  while (r < 10.0 && v.evaluate(std::vector<double>{dir * (r + step)}) <= 1.0) r += step;
  double lo = r, hi = r + step;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (v.evaluate(std::vector<double>{dir * mid}) > 1.0 ? hi : lo) = mid;
  }
  return lo;
}

Result criterion5() {
  const Timer t;
  const Polynomial z = Polynomial::variable(1, 0);
  ConstrainedPolySystem sys;
  sys.nvars = 1;
  sys.f = {z * z * z - z};
  sys.labels = {"z"};
  const auto free_cert = roa::estimate_csr(sys, {}, {});
  const double l = reach(free_cert.v, -1.0), r = reach(free_cert.v, 1.0);
  const double coverage = (l + r) / 2.0;
  sys.h = {Polynomial::constant(1, 0.5) - z * z};
  const auto con_cert = roa::estimate_csr(sys, {}, {});
  const double cl = reach(con_cert.v, -1.0), cr = reach(con_cert.v, 1.0);
  const double secs = t.seconds();
  const bool inside = l < 1.0 && r < 1.0;
  const bool con_inside = std::max(cl, cr) <= std::sqrt(0.5) + 1e-6;
  return {free_cert.verified() && con_cert.verified() && inside && coverage >= 0.9 && con_inside && secs < 30.0,
          "unconstrained [" + fmt(-l, 6) + ", " + fmt(r, 6) + "] covers " + fmt(100.0 * coverage, 4) +
              "% of (-1, 1); with h = 0.5 - z^2 [" + fmt(-cl, 6) + ", " + fmt(cr, 6) + "] vs sqrt(0.5) = 0.707107; " +
              fmt(secs, 2) + " s"};
}

// ---------------------------------------------------------------- 6

bool nondecreasing(const std::vector<double>& b) {
  for (std::size_t i = 1; i < b.size(); ++i)
    if (b[i] < b[i - 1] - 1e-9) return false;
  return true;
}

Result criterion6() {
  const Timer t;
  const auto pc = powersys::build_case(powersys::load_model(kModel));
  const auto& sw = pc.swing;
  std::ostringstream d;
  bool pass = true;

  roa::LyapunovCertificate cert;
  try {
    cert = roa::estimate_csr(pc.system, {}, {});
  } catch (const std::exception& e) {
    return {false, std::string("(a) estimate_csr failed: ") + e.what()};
  }
  bool mono = true;
  for (const auto& b : cert.beta_history) mono = mono && nondecreasing(b);
  const bool a = cert.verified() && mono;
  pass = pass && a;
  d << "(a) " << (a ? "ok" : "FAIL") << " verified=" << cert.verified() << " monotone=" << mono
    << " outer=" << cert.outer_iterations << " beta=" << fmt(cert.beta_final);

  roa::CheckOptions co;
  co.samples = 10000;
  const auto rep = roa::certificate_check(pc.system, cert.v, co);
  const bool b = rep.violations() == 0 && rep.inside > 0;
  pass = pass && b;
  d << "; (b) " << (b ? "ok" : "FAIL") << " " << rep.violations() << " violations, " << rep.inside
    << " of 10000 samples inside, min h " << fmt(rep.min_h, 3);

  const auto tc = sim::trajectory_containment(sw, pc.system, cert.v, 100, 7, 0.85, {}, jobs());
  const bool c = tc.trajectories == 100 && tc.failures == 0 && tc.min_voltage >= 0.85;
  pass = pass && c;
  d << "; (c) " << (c ? "ok" : "FAIL") << " " << tc.trajectories - tc.failures << "/" << tc.trajectories
    << " converged feasible, min v1 " << fmt(tc.min_voltage);

  const auto unc = roa::estimate_csr(pc.system.without_inequalities(), {}, {});
  const auto bc = sim::level_set_boundary(sw, cert.v, 0, 1);
  const auto bu = sim::level_set_boundary(sw, unc.v, 0, 1);
  const bool dd = unc.verified() && bc.area <= bu.area;
  pass = pass && dd;
  d << "; (d) " << (dd ? "ok" : "FAIL") << " area constrained " << fmt(bc.area) << " <= unconstrained " << fmt(bu.area);

  sim::Slice s;
  s.axis_x = 0;
  s.axis_y = 1;
  s.x_min = sw.delta_s(sw.others[0]) - std::numbers::pi;
  s.x_max = sw.delta_s(sw.others[0]) + std::numbers::pi;
  s.y_min = sw.delta_s(sw.others[1]) - std::numbers::pi;
  s.y_max = sw.delta_s(sw.others[1]) + std::numbers::pi;
  s.nx = s.ny = 101;
  const auto grid = sim::grid_csr(sw, s, 0.85, {}, jobs(), &cert.v);
  int inside = 0;
  for (const auto& n : grid) inside += n.v <= 1.0;
  const int viol = sim::containment_violations(grid, s);
  const bool e = viol == 0 && inside > 0;
  pass = pass && e;
  d << "; (e) " << (e ? "ok" : "FAIL") << " " << viol << " violations among " << inside << " nodes with V <= 1";

  const double secs = t.seconds();
  pass = pass && secs < 900.0;
  d << "; " << fmt(secs, 4) << " s";
  return {pass, d.str()};
}

// ---------------------------------------------------------------- 7

Result criterion7() {
  const auto pc = powersys::build_case(powersys::load_model(kModel));
  const auto run = [&] { return json_io::certificate_to_json(roa::estimate_csr(pc.system, {}, {}), pc.system.labels); };
  const std::string a = run();
  const std::string b = run();
  return {a == b, std::string(a == b ? "byte-identical" : "different") + " certificate JSON (" + std::to_string(a.size()) +
                      " bytes)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Result()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                      criterion5, criterion6, criterion7};
  std::vector<int> which;
  if (argc > 1) {
    const int n = std::atoi(argv[1]);
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::cerr << "usage: acceptance [1-7]\n";
      return 2;
    }
    which.push_back(n);
  } else {
    for (int n = 1; n <= static_cast<int>(criteria.size()); ++n) which.push_back(n);
  }
  bool all = true;
  for (int n : which) {
    Result r;
    try {
      r = criteria[static_cast<std::size_t>(n - 1)]();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "Criterion " << n << ": " << (r.pass ? "PASS" : "FAIL") << " " << r.detail << std::endl;
    all = all && r.pass;
  }
  return all ? 0 : 1;
}
