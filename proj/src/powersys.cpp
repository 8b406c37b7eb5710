#include "csr/powersys.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <queue>
#include <set>

namespace csr::powersys {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using poly::Polynomial;

namespace {

constexpr cplx kJ{0.0, 1.0};

// Net scheduled load at a bus, PV units counted as negative load.
cplx bus_load(const PowerSystemModel& model, int bus_id) {
  cplx s{0.0, 0.0};
  for (const auto& b : model.buses) {
    if (b.id == bus_id) s += cplx{b.p_load, b.q_load};
  }
  for (const auto& pv : model.pv_units) {
    if (pv.bus == bus_id) s -= cplx{pv.p, pv.q};
  }
  return s;
}

}  // namespace

// ------------------------------------------------------------------ model

double LvrtCurve::max_value() const {
  double m = 0.0;
  for (const auto& [t, v] : points) m = std::max(m, v);
  return m;
}

void LvrtCurve::validate() const {
  if (points.empty()) throw ModelError("LVRT curve '" + name + "' has no points");
  double last = -std::numeric_limits<double>::infinity();
  for (const auto& [t, v] : points) {
    if (!(v > 0.0 && v <= 1.0)) throw ModelError("LVRT curve '" + name + "': voltages must lie in (0, 1]");
    if (t < last) throw ModelError("LVRT curve '" + name + "': times must be nondecreasing");
    last = t;
  }
}

int PowerSystemModel::bus_index(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == id) return static_cast<int>(i);
  }
  throw ModelError("unknown bus " + std::to_string(id));
}

int PowerSystemModel::machine_index(int id) const {
  for (std::size_t i = 0; i < machines.size(); ++i) {
    if (machines[i].id == id) return static_cast<int>(i);
  }
  throw ModelError("unknown machine " + std::to_string(id));
}

int PowerSystemModel::reference_index() const {
  if (reference) return machine_index(*reference);
  int best = 0;
  for (std::size_t i = 1; i < machines.size(); ++i) {
    if (machines[i].m > machines[static_cast<std::size_t>(best)].m) best = static_cast<int>(i);
  }
  return best;
}

double PowerSystemModel::damping_ratio() const {
  if (machines.empty()) throw ModelError("model has no machines");
  return machines.front().d / machines.front().m;
}

void PowerSystemModel::validate() const {
  if (!(frequency > 0.0)) throw ModelError("frequency must be positive");
  if (buses.empty()) throw ModelError("model has no buses");
  std::set<int> ids;
  int slack = 0;
  for (const auto& b : buses) {
    if (!ids.insert(b.id).second) throw ModelError("duplicate bus id " + std::to_string(b.id));
    if (b.type == BusType::Slack) ++slack;
    if (b.type != BusType::PQ && !(b.v_set > 0.0)) throw ModelError("bus " + std::to_string(b.id) + ": voltage setpoint must be positive");
  }
  if (slack != 1) throw ModelError("model needs exactly one slack bus");
  for (const auto& br : branches) {
    bus_index(br.from);
    bus_index(br.to);
    if (br.from == br.to) throw ModelError("branch connects bus " + std::to_string(br.from) + " to itself");
    if (br.r == 0.0 && br.x == 0.0) throw ModelError("branch " + std::to_string(br.from) + "-" + std::to_string(br.to) + " has zero impedance");
  }
  if (machines.size() < 2) throw ModelError("model needs at least two machines");
  std::set<int> mids, mbuses;
  for (const auto& m : machines) {
    if (!mids.insert(m.id).second) throw ModelError("duplicate machine id " + std::to_string(m.id));
    bus_index(m.bus);
    if (!mbuses.insert(m.bus).second) throw ModelError("more than one machine at bus " + std::to_string(m.bus));
    if (!(m.m > 0.0)) throw ModelError("machine " + std::to_string(m.id) + ": inertia must be positive");
    if (!(m.xd > 0.0)) throw ModelError("machine " + std::to_string(m.id) + ": transient reactance must be positive");
    if (m.d < 0.0) throw ModelError("machine " + std::to_string(m.id) + ": damping must be non-negative");
  }
  const double ratio = damping_ratio();
  for (const auto& m : machines) {
    const double r = m.d / m.m;
    if (std::abs(r - ratio) > 1e-9 * std::max(1.0, std::abs(ratio))) {
      throw ModelError("non-uniform damping: D/M of machine " + std::to_string(m.id) + " is " + std::to_string(r) +
                       ", machine " + std::to_string(machines.front().id) + " has " + std::to_string(ratio));
    }
  }
  for (const auto& b : buses) {
    if (b.type != BusType::PQ && !mbuses.contains(b.id)) {
      throw ModelError("bus " + std::to_string(b.id) + " is a generator bus without a machine");
    }
  }
  for (const auto& pv : pv_units) {
    bus_index(pv.bus);
    pv.lvrt.validate();
  }
  if (reference) machine_index(*reference);

  // Connectivity.
  std::map<int, std::vector<int>> adj;
  for (const auto& br : branches) {
    adj[br.from].push_back(br.to);
    adj[br.to].push_back(br.from);
  }
  std::set<int> seen{buses.front().id};
  std::queue<int> q;
  q.push(buses.front().id);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int w : adj[u]) {
      if (seen.insert(w).second) q.push(w);
    }
  }
  if (seen.size() != buses.size()) throw ModelError("network is not connected");
}

// ------------------------------------------------------------- networks

MatrixXcd build_bus_admittance(const PowerSystemModel& model) {
  const int nb = static_cast<int>(model.buses.size());
  MatrixXcd y = MatrixXcd::Zero(nb, nb);
  for (const auto& br : model.branches) {
    const int a = model.bus_index(br.from);
    const int b = model.bus_index(br.to);
    const cplx ys = 1.0 / cplx{br.r, br.x};
    const cplx sh{0.0, br.b / 2.0};
    y(a, a) += ys + sh;
    y(b, b) += ys + sh;
    y(a, b) -= ys;
    y(b, a) -= ys;
  }
  return y;
}

PowerFlow solve_power_flow(const PowerSystemModel& model, double tol, int max_iterations) {
  const int nb = static_cast<int>(model.buses.size());
  const MatrixXcd y = build_bus_admittance(model);
  const MatrixXd gm = y.real();
  const MatrixXd bm = y.imag();

  VectorXd vm = VectorXd::Ones(nb);
  VectorXd th = VectorXd::Zero(nb);
  VectorXd psp = VectorXd::Zero(nb);
  VectorXd qsp = VectorXd::Zero(nb);
  std::vector<int> ang, mag;  // unknown angles / magnitudes
  for (int i = 0; i < nb; ++i) {
    const auto& b = model.buses[static_cast<std::size_t>(i)];
    const cplx load = bus_load(model, b.id);
    psp(i) = b.p_gen - load.real();
    qsp(i) = -load.imag();
    if (b.type != BusType::PQ) vm(i) = b.v_set;
    if (b.type == BusType::Slack) th(i) = b.angle;
    if (b.type != BusType::Slack) ang.push_back(i);
    if (b.type == BusType::PQ) mag.push_back(i);
  }
  const int na = static_cast<int>(ang.size());
  const int nm = static_cast<int>(mag.size());

  auto calc = [&](VectorXd& p, VectorXd& q) {
    p = VectorXd::Zero(nb);
    q = VectorXd::Zero(nb);
    for (int i = 0; i < nb; ++i) {
      for (int k = 0; k < nb; ++k) {
        const double t = th(i) - th(k);
        p(i) += vm(i) * vm(k) * (gm(i, k) * std::cos(t) + bm(i, k) * std::sin(t));
        q(i) += vm(i) * vm(k) * (gm(i, k) * std::sin(t) - bm(i, k) * std::cos(t));
      }
    }
  };

  PowerFlow out;
  VectorXd p, q;
  for (int it = 0; it <= max_iterations; ++it) {
    calc(p, q);
    VectorXd mis(na + nm);
    for (int a = 0; a < na; ++a) mis(a) = psp(ang[static_cast<std::size_t>(a)]) - p(ang[static_cast<std::size_t>(a)]);
    for (int a = 0; a < nm; ++a) mis(na + a) = qsp(mag[static_cast<std::size_t>(a)]) - q(mag[static_cast<std::size_t>(a)]);
    out.mismatch = mis.size() ? mis.cwiseAbs().maxCoeff() : 0.0;
    out.iterations = it;
    if (out.mismatch <= tol) break;
    if (it == max_iterations || !std::isfinite(out.mismatch)) {
      throw ModelError("power flow did not converge (mismatch " + std::to_string(out.mismatch) + ")");
    }
    MatrixXd jac = MatrixXd::Zero(na + nm, na + nm);
    for (int r = 0; r < na + nm; ++r) {
      const bool prow = r < na;
      const int i = prow ? ang[static_cast<std::size_t>(r)] : mag[static_cast<std::size_t>(r - na)];
      for (int c = 0; c < na + nm; ++c) {
        const bool tcol = c < na;
        const int k = tcol ? ang[static_cast<std::size_t>(c)] : mag[static_cast<std::size_t>(c - na)];
        const double t = th(i) - th(k);
        double v;
        if (prow && tcol) {
          v = i == k ? -q(i) - bm(i, i) * vm(i) * vm(i) : vm(i) * vm(k) * (gm(i, k) * std::sin(t) - bm(i, k) * std::cos(t));
        } else if (prow) {
          v = i == k ? p(i) / vm(i) + gm(i, i) * vm(i) : vm(i) * (gm(i, k) * std::cos(t) + bm(i, k) * std::sin(t));
        } else if (tcol) {
          v = i == k ? p(i) - gm(i, i) * vm(i) * vm(i) : -vm(i) * vm(k) * (gm(i, k) * std::cos(t) + bm(i, k) * std::sin(t));
        } else {
          v = i == k ? q(i) / vm(i) - bm(i, i) * vm(i) : vm(i) * (gm(i, k) * std::sin(t) - bm(i, k) * std::cos(t));
        }
        jac(r, c) = v;
      }
    }
    const VectorXd dx = jac.fullPivLu().solve(mis);
    for (int a = 0; a < na; ++a) th(ang[static_cast<std::size_t>(a)]) += dx(a);
    for (int a = 0; a < nm; ++a) vm(mag[static_cast<std::size_t>(a)]) += dx(na + a);
  }
  out.v.resize(static_cast<std::size_t>(nb));
  for (int i = 0; i < nb; ++i) out.v[static_cast<std::size_t>(i)] = std::polar(vm(i), th(i));
  out.injection.resize(static_cast<std::size_t>(nb));
  for (int i = 0; i < nb; ++i) out.injection[static_cast<std::size_t>(i)] = {p(i), q(i)};
  return out;
}

MatrixXcd build_admittance(const PowerSystemModel& model, const PowerFlow& pf) {
  const int nb = static_cast<int>(model.buses.size());
  const int ng = static_cast<int>(model.machines.size());
  MatrixXcd y = MatrixXcd::Zero(nb + ng, nb + ng);
  y.topLeftCorner(nb, nb) = build_bus_admittance(model);
  for (int i = 0; i < nb; ++i) {
    const cplx load = bus_load(model, model.buses[static_cast<std::size_t>(i)].id);
    const double v2 = std::norm(pf.v[static_cast<std::size_t>(i)]);
    y(i, i) += std::conj(load) / v2;
  }
  for (int g = 0; g < ng; ++g) {
    const auto& m = model.machines[static_cast<std::size_t>(g)];
    const int b = model.bus_index(m.bus);
    const cplx ys = 1.0 / cplx{0.0, m.xd};
    y(b, b) += ys;
    y(nb + g, nb + g) += ys;
    y(b, nb + g) -= ys;
    y(nb + g, b) -= ys;
  }
  return y;
}

ReducedNetwork kron_reduce(const MatrixXcd& y, const std::vector<int>& retained, const VectorXcd& scale) {
  const int n = static_cast<int>(y.rows());
  std::vector<bool> keep(static_cast<std::size_t>(n), false);
  for (int r : retained) {
    if (r < 0 || r >= n) throw ModelError("kron_reduce: retained node out of range");
    keep[static_cast<std::size_t>(r)] = true;
  }
  std::vector<int> elim;
  for (int i = 0; i < n; ++i) {
    if (!keep[static_cast<std::size_t>(i)]) elim.push_back(i);
  }
  const int ne = static_cast<int>(elim.size());
  const int nr = static_cast<int>(retained.size());
  if (scale.size() != nr) throw ModelError("kron_reduce: scale has wrong length");
  MatrixXcd y11(ne, ne), y12(ne, nr), y21(nr, ne), y22(nr, nr);
  for (int a = 0; a < ne; ++a) {
    for (int b = 0; b < ne; ++b) y11(a, b) = y(elim[static_cast<std::size_t>(a)], elim[static_cast<std::size_t>(b)]);
    for (int b = 0; b < nr; ++b) y12(a, b) = y(elim[static_cast<std::size_t>(a)], retained[static_cast<std::size_t>(b)]);
  }
  for (int a = 0; a < nr; ++a) {
    for (int b = 0; b < ne; ++b) y21(a, b) = y(retained[static_cast<std::size_t>(a)], elim[static_cast<std::size_t>(b)]);
    for (int b = 0; b < nr; ++b) y22(a, b) = y(retained[static_cast<std::size_t>(a)], retained[static_cast<std::size_t>(b)]);
  }
  ReducedNetwork out;
  if (ne == 0) {
    out.y_red = y22;
    out.k = MatrixXcd::Zero(0, nr);
    return out;
  }
  Eigen::FullPivLU<MatrixXcd> lu(y11);
  if (!lu.isInvertible()) throw ModelError("kron_reduce: eliminated block is singular (isolated bus?)");
  const MatrixXcd x = lu.solve(y12);
  out.y_red = y22 - y21 * x;
  out.k = -x * scale.asDiagonal();
  return out;
}

Equilibrium solve_equilibrium(const PowerSystemModel& model) {
  model.validate();
  Equilibrium eq;
  eq.pf = solve_power_flow(model);
  const int nb = static_cast<int>(model.buses.size());
  const int ng = static_cast<int>(model.machines.size());
  eq.delta.resize(ng);
  eq.e_mag.resize(ng);
  eq.pm.resize(ng);
  VectorXcd e(ng);
  for (int g = 0; g < ng; ++g) {
    const auto& m = model.machines[static_cast<std::size_t>(g)];
    const int b = model.bus_index(m.bus);
    const cplx vt = eq.pf.v[static_cast<std::size_t>(b)];
    const cplx sg = eq.pf.injection[static_cast<std::size_t>(b)] + bus_load(model, m.bus);
    const cplx ig = std::conj(sg / vt);
    e(g) = vt + kJ * m.xd * ig;
    eq.delta(g) = std::arg(e(g));
    eq.e_mag(g) = std::abs(e(g));
    eq.pm(g) = sg.real();
  }
  std::vector<int> retained;
  for (int g = 0; g < ng; ++g) retained.push_back(nb + g);
  VectorXcd mags(ng);
  for (int g = 0; g < ng; ++g) mags(g) = eq.e_mag(g);
  eq.reduced = kron_reduce(build_admittance(model, eq.pf), retained, mags);

  const VectorXcd current = eq.reduced.y_red * e;
  eq.residual = 0.0;
  for (int g = 0; g < ng; ++g) {
    const double pe = (e(g) * std::conj(current(g))).real();
    eq.residual = std::max(eq.residual, std::abs(eq.pm(g) - pe));
  }
  if (!(eq.residual <= 1e-8)) {
    throw ModelError("equilibrium check failed: swing residual " + std::to_string(eq.residual));
  }
  return eq;
}

// ----------------------------------------------------------- swing model

SwingSystem build_swing_system(const PowerSystemModel& model, const Equilibrium& eq) {
  SwingSystem s;
  s.ng = static_cast<int>(model.machines.size());
  s.ref = model.reference_index();
  for (int g = 0; g < s.ng; ++g) {
    if (g != s.ref) s.others.push_back(g);
  }
  s.m.resize(s.ng);
  for (int g = 0; g < s.ng; ++g) s.m(g) = model.machines[static_cast<std::size_t>(g)].m;
  s.e = eq.e_mag;
  s.pm = eq.pm;
  s.damping_ratio = model.damping_ratio();
  s.g = eq.reduced.y_red.real();
  s.b = eq.reduced.y_red.imag();
  s.delta_s = eq.delta.array() - eq.delta(s.ref);
  s.k = MatrixXcd::Zero(static_cast<Eigen::Index>(model.pv_units.size()), s.ng);
  for (std::size_t j = 0; j < model.pv_units.size(); ++j) {
    const auto& pv = model.pv_units[j];
    s.k.row(static_cast<Eigen::Index>(j)) = eq.reduced.k.row(model.bus_index(pv.bus));
    s.monitored_bus_ids.push_back(pv.bus);
    s.v_min.push_back(pv.lvrt.max_value());
  }
  return s;
}

std::vector<double> SwingSystem::sep_state() const {
  std::vector<double> x(static_cast<std::size_t>(nstate()), 0.0);
  for (int a = 0; a < nrel(); ++a) x[static_cast<std::size_t>(a)] = delta_s(others[static_cast<std::size_t>(a)]);
  return x;
}

std::vector<double> SwingSystem::rhs(std::span<const double> x) const {
  const int nr = nrel();
  VectorXd delta = VectorXd::Zero(ng);
  for (int a = 0; a < nr; ++a) delta(others[static_cast<std::size_t>(a)]) = x[static_cast<std::size_t>(a)];
  VectorXd acc(ng);
  for (int i = 0; i < ng; ++i) {
    double pe = 0.0;
    for (int k = 0; k < ng; ++k) {
      const double t = delta(i) - delta(k);
      pe += e(i) * e(k) * (g(i, k) * std::cos(t) + b(i, k) * std::sin(t));
    }
    acc(i) = (pm(i) - pe) / m(i);
  }
  std::vector<double> dx(static_cast<std::size_t>(2 * nr));
  for (int a = 0; a < nr; ++a) {
    const double w = x[static_cast<std::size_t>(nr + a)];
    dx[static_cast<std::size_t>(a)] = w;
    dx[static_cast<std::size_t>(nr + a)] = acc(others[static_cast<std::size_t>(a)]) - acc(ref) - damping_ratio * w;
  }
  return dx;
}

std::vector<cplx> SwingSystem::voltages(std::span<const double> x) const {
  VectorXcd ph = VectorXcd::Ones(ng);
  for (int a = 0; a < nrel(); ++a) ph(others[static_cast<std::size_t>(a)]) = std::polar(1.0, x[static_cast<std::size_t>(a)]);
  const VectorXcd v = k * ph;
  return {v.data(), v.data() + v.size()};
}

std::vector<double> swing_rhs(const SwingSystem& s, std::span<const double> x) { return s.rhs(x); }

std::vector<double> state_to_z(const SwingSystem& s, std::span<const double> x) {
  const int nr = s.nrel();
  std::vector<double> z(static_cast<std::size_t>(3 * nr));
  for (int a = 0; a < nr; ++a) {
    const double th = x[static_cast<std::size_t>(a)] - s.delta_s(s.others[static_cast<std::size_t>(a)]);
    z[static_cast<std::size_t>(a)] = x[static_cast<std::size_t>(nr + a)];
    z[static_cast<std::size_t>(nr + 2 * a)] = std::sin(th);
    z[static_cast<std::size_t>(nr + 2 * a + 1)] = 1.0 - std::cos(th);
  }
  return z;
}

std::vector<double> z_to_state(const SwingSystem& s, std::span<const double> z) {
  const int nr = s.nrel();
  std::vector<double> x(static_cast<std::size_t>(2 * nr));
  for (int a = 0; a < nr; ++a) {
    const double th = std::atan2(z[static_cast<std::size_t>(nr + 2 * a)], 1.0 - z[static_cast<std::size_t>(nr + 2 * a + 1)]);
    x[static_cast<std::size_t>(a)] = th + s.delta_s(s.others[static_cast<std::size_t>(a)]);
    x[static_cast<std::size_t>(nr + a)] = z[static_cast<std::size_t>(a)];
  }
  return x;
}

namespace {

// cos and sin of theta_i as polynomials in z (theta_ref = 0).
struct Trig {
  std::vector<Polynomial> c;
  std::vector<Polynomial> s;
};

Trig trig_polys(const SwingSystem& sw, int n) {
  Trig t;
  t.c.assign(static_cast<std::size_t>(sw.ng), Polynomial::constant(n, 1.0));
  t.s.assign(static_cast<std::size_t>(sw.ng), Polynomial(n));
  const int nr = sw.nrel();
  for (int a = 0; a < nr; ++a) {
    const auto i = static_cast<std::size_t>(sw.others[static_cast<std::size_t>(a)]);
    t.s[i] = Polynomial::variable(n, nr + 2 * a);
    t.c[i] = Polynomial::constant(n, 1.0) - Polynomial::variable(n, nr + 2 * a + 1);
  }
  return t;
}

}  // namespace

std::vector<Polynomial> lvrt_polynomials(const SwingSystem& sw) {
  const int n = 3 * sw.nrel();
  const Trig t = trig_polys(sw, n);
  std::vector<Polynomial> out;
  for (Eigen::Index j = 0; j < sw.k.rows(); ++j) {
    Polynomial re(n), im(n);
    for (int i = 0; i < sw.ng; ++i) {
      const cplx w = sw.k(j, i) * std::polar(1.0, sw.delta_s(i));
      const auto ii = static_cast<std::size_t>(i);
      re += t.c[ii] * w.real() - t.s[ii] * w.imag();
      im += t.c[ii] * w.imag() + t.s[ii] * w.real();
    }
    const double vmin = sw.v_min[static_cast<std::size_t>(j)];
    out.push_back(re * re + im * im - Polynomial::constant(n, vmin * vmin));
  }
  return out;
}

ConstrainedPolySystem transform_to_polynomial(const SwingSystem& sw) {
  const int nr = sw.nrel();
  const int n = 3 * nr;
  const Trig t = trig_polys(sw, n);
  std::vector<Polynomial> acc(static_cast<std::size_t>(sw.ng), Polynomial(n));
  for (int i = 0; i < sw.ng; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    Polynomial pe(n);
    for (int k = 0; k < sw.ng; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const double ds = sw.delta_s(i) - sw.delta_s(k);
      const Polynomial cphi = t.c[ii] * t.c[kk] + t.s[ii] * t.s[kk];
      const Polynomial sphi = t.s[ii] * t.c[kk] - t.c[ii] * t.s[kk];
      const Polynomial cosd = cphi * std::cos(ds) - sphi * std::sin(ds);
      const Polynomial sind = cphi * std::sin(ds) + sphi * std::cos(ds);
      pe += (cosd * sw.g(i, k) + sind * sw.b(i, k)) * (sw.e(i) * sw.e(k));
    }
    acc[ii] = (Polynomial::constant(n, sw.pm(i)) - pe) * (1.0 / sw.m(i));
  }
  ConstrainedPolySystem sys;
  sys.nvars = n;
  sys.f.assign(static_cast<std::size_t>(n), Polynomial(n));
  sys.labels.resize(static_cast<std::size_t>(n));
  for (int a = 0; a < nr; ++a) {
    const auto i = static_cast<std::size_t>(sw.others[static_cast<std::size_t>(a)]);
    const Polynomial w = Polynomial::variable(n, a);
    const Polynomial zs = Polynomial::variable(n, nr + 2 * a);
    const Polynomial zc = Polynomial::variable(n, nr + 2 * a + 1);
    sys.f[static_cast<std::size_t>(a)] = acc[i] - acc[static_cast<std::size_t>(sw.ref)] - w * sw.damping_ratio;
    sys.f[static_cast<std::size_t>(nr + 2 * a)] = t.c[i] * w;
    sys.f[static_cast<std::size_t>(nr + 2 * a + 1)] = zs * w;
    sys.g.push_back(zs * zs + zc * zc - zc * 2.0);
    sys.angle_pairs.emplace_back(nr + 2 * a, nr + 2 * a + 1);
    const std::string tag = std::to_string(i + 1) + std::to_string(sw.ref + 1);
    sys.labels[static_cast<std::size_t>(a)] = "w" + tag;
    sys.labels[static_cast<std::size_t>(nr + 2 * a)] = "s" + tag;
    sys.labels[static_cast<std::size_t>(nr + 2 * a + 1)] = "c" + tag;
  }
  // Drop round-off in the constant terms; the expansion is exact at the SEP.
  const std::vector<double> origin(static_cast<std::size_t>(n), 0.0);
  for (auto& fi : sys.f) {
    const double c0 = fi.evaluate(origin);
    if (std::abs(c0) > 1e-10) throw ModelError("polynomial vector field does not vanish at the SEP (" + std::to_string(c0) + ")");
    fi.add_term(poly::Monomial(n), -fi.coefficient(poly::Monomial(n)));
  }
  sys.h = lvrt_polynomials(sw);
  sys.validate();
  return sys;
}

PowerCase build_case(const PowerSystemModel& model) {
  PowerCase pc;
  pc.model = model;
  pc.eq = solve_equilibrium(model);
  pc.swing = build_swing_system(model, pc.eq);
  pc.system = transform_to_polynomial(pc.swing);
  return pc;
}

}  // namespace csr::powersys
