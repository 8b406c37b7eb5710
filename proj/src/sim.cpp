#include "csr/sim.hpp"

#include "csr/roa.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace csr::sim {

namespace {

using State = std::vector<double>;

void rk4_step(const SwingSystem& sys, State& x, double dt, State& tmp) {
  const std::size_t n = x.size();
  const State k1 = sys.rhs(x);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
  const State k2 = sys.rhs(tmp);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
  const State k3 = sys.rhs(tmp);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
  const State k4 = sys.rhs(tmp);
  for (std::size_t i = 0; i < n; ++i) x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

bool finite(const State& x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

std::vector<double> magnitudes(const SwingSystem& sys, const State& x) {
  std::vector<double> out;
  for (const auto& v : sys.voltages(x)) out.push_back(std::abs(v));
  return out;
}

long step_count(double t_end, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
  if (!(t_end >= dt)) throw std::invalid_argument("integrate: horizon must be at least one step");
  return std::lround(t_end / dt);
}

}  // namespace

Trajectory integrate(const SwingSystem& sys, std::span<const double> x0, double t_end, double dt) {
  const long steps = step_count(t_end, dt);
  if (static_cast<int>(x0.size()) != sys.nstate()) throw std::invalid_argument("integrate: state has wrong length");
  Trajectory tr;
  tr.dt = dt;
  State x(x0.begin(), x0.end());
  State tmp(x.size());
  tr.times.push_back(0.0);
  tr.states.push_back(x);
  tr.voltages.push_back(magnitudes(sys, x));
  for (long k = 1; k <= steps; ++k) {
    rk4_step(sys, x, dt, tmp);
    if (!finite(x)) {
      tr.blew_up = true;
      break;
    }
    tr.times.push_back(static_cast<double>(k) * dt);
    tr.states.push_back(x);
    tr.voltages.push_back(magnitudes(sys, x));
  }
  return tr;
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::ConvergedFeasible: return "converged_feasible";
    case Outcome::InfeasibleLvrt: return "infeasible_lvrt";
    case Outcome::NotConverged: return "not_converged";
  }
  return "unknown";
}

Classification classify_point(const SwingSystem& sys, std::span<const double> x0, double v_min, const SimOptions& opts) {
  const long steps = step_count(opts.t_end, opts.dt);
  if (static_cast<int>(x0.size()) != sys.nstate()) throw std::invalid_argument("classify_point: state has wrong length");
  const State sep = sys.sep_state();
  Classification c;
  State x(x0.begin(), x0.end());
  State tmp(x.size());
  auto monitor = [&](long k) {
    for (double v : magnitudes(sys, x)) {
      c.min_voltage = std::min(c.min_voltage, v);
      if (v < v_min) {
        c.outcome = Outcome::InfeasibleLvrt;
        c.violation_time = static_cast<double>(k) * opts.dt;
        return false;
      }
    }
    return true;
  };
  if (!monitor(0)) return c;
  for (long k = 1; k <= steps; ++k) {
    rk4_step(sys, x, opts.dt, tmp);
    if (!finite(x)) {
      c.outcome = Outcome::NotConverged;
      return c;
    }
    if (!monitor(k)) return c;
  }
  double dist = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dist = std::max(dist, std::abs(x[i] - sep[i]));
  c.final_distance = dist;
  c.outcome = dist < opts.conv_tol ? Outcome::ConvergedFeasible : Outcome::NotConverged;
  return c;
}

void Slice::validate(int nstate) const {
  if (axis_x < 0 || axis_x >= nstate || axis_y < 0 || axis_y >= nstate || axis_x == axis_y) {
    throw std::invalid_argument("slice: axes must be two distinct state coordinates");
  }
  if (nx < 2 || ny < 2) throw std::invalid_argument("slice: resolution must be at least 2 per axis");
  if (!(x_max > x_min) || !(y_max > y_min)) throw std::invalid_argument("slice: empty range");
  if (!base.empty() && static_cast<int>(base.size()) != nstate) throw std::invalid_argument("slice: base has wrong length");
}

std::vector<GridNode> grid_csr(const SwingSystem& sys, const Slice& slice, double v_min, const SimOptions& opts,
                               int jobs, const poly::Polynomial* v) {
  slice.validate(sys.nstate());
  const State base = slice.base.empty() ? sys.sep_state() : slice.base;
  const std::size_t total = static_cast<std::size_t>(slice.nx) * static_cast<std::size_t>(slice.ny);
  std::vector<GridNode> grid(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t idx = next++; idx < total; idx = next++) {
      const auto iy = static_cast<int>(idx / static_cast<std::size_t>(slice.nx));
      const auto ix = static_cast<int>(idx % static_cast<std::size_t>(slice.nx));
      GridNode& node = grid[idx];
      node.x = slice.x_min + (slice.x_max - slice.x_min) * ix / (slice.nx - 1);
      node.y = slice.y_min + (slice.y_max - slice.y_min) * iy / (slice.ny - 1);
      State x = base;
      x[static_cast<std::size_t>(slice.axis_x)] = node.x;
      x[static_cast<std::size_t>(slice.axis_y)] = node.y;
      node.c = classify_point(sys, x, v_min, opts);
      if (v) node.v = v->evaluate(powersys::state_to_z(sys, x));
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(total)));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return grid;
}

int containment_violations(const std::vector<GridNode>& grid, const Slice& slice) {
  int bad = 0;
  auto at = [&](int ix, int iy) -> const GridNode& { return grid[static_cast<std::size_t>(iy * slice.nx + ix)]; };
  for (int iy = 0; iy < slice.ny; ++iy) {
    for (int ix = 0; ix < slice.nx; ++ix) {
      const GridNode& n = at(ix, iy);
      if (!(n.v <= 1.0) || n.c.outcome == Outcome::ConvergedFeasible) continue;
      bool near_boundary = false;
      for (int dy = -1; dy <= 1 && !near_boundary; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int jx = ix + dx, jy = iy + dy;
          if (jx < 0 || jy < 0 || jx >= slice.nx || jy >= slice.ny) continue;
          if (at(jx, jy).v > 1.0) {
            near_boundary = true;
            break;
          }
        }
      }
      if (!near_boundary) ++bad;
    }
  }
  return bad;
}

SliceBoundary level_set_boundary(const SwingSystem& sys, const poly::Polynomial& v, int axis_x, int axis_y,
                                 const std::vector<double>& base_in, int rays, double r_max) {
  const State base = base_in.empty() ? sys.sep_state() : base_in;
  if (axis_x < 0 || axis_y < 0 || axis_x >= sys.nstate() || axis_y >= sys.nstate() || axis_x == axis_y) {
    throw std::invalid_argument("level_set_boundary: bad axes");
  }
  if (rays < 3) throw std::invalid_argument("level_set_boundary: need at least 3 rays");
  auto value = [&](double r, double c, double s) {
    State x = base;
    x[static_cast<std::size_t>(axis_x)] += r * c;
    x[static_cast<std::size_t>(axis_y)] += r * s;
    return v.evaluate(powersys::state_to_z(sys, x));
  };
  SliceBoundary out;
  const double step = 1e-2;
  for (int k = 0; k < rays; ++k) {
    const double a = 2.0 * std::numbers::pi * k / rays;
    const double c = std::cos(a), s = std::sin(a);
    double lo = 0.0, hi = -1.0;
    for (double r = step; r <= r_max + 1e-12; r += step) {
      if (value(r, c, s) > 1.0) {
        hi = r;
        break;
      }
      lo = r;
    }
    double r = lo;
    if (hi < 0.0) {
      out.truncated = true;
    } else {
      for (int it = 0; it < 50; ++it) {
        const double mid = 0.5 * (lo + hi);
        (value(mid, c, s) > 1.0 ? hi : lo) = mid;
      }
      r = lo;
    }
    out.points.emplace_back(base[static_cast<std::size_t>(axis_x)] + r * c, base[static_cast<std::size_t>(axis_y)] + r * s);
  }
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    const auto& [x0, y0] = out.points[i];
    const auto& [x1, y1] = out.points[(i + 1) % out.points.size()];
    out.area += 0.5 * (x0 * y1 - x1 * y0);
  }
  out.area = std::abs(out.area);
  return out;
}

std::vector<std::vector<double>> states_inside(const SwingSystem& sys, const ConstrainedPolySystem& poly_sys,
                                               const poly::Polynomial& v, int count, std::uint64_t seed) {
  std::vector<std::vector<double>> out;
  std::uint64_t round = 0;
  while (static_cast<int>(out.size()) < count) {
    if (round == 20) throw std::runtime_error("states_inside: could not find enough points with V <= 1");
    const auto draws = roa::sample_manifold(poly_sys, v, 4 * count, seed + round++, 5.0);
    for (const auto& z : draws) {
      if (static_cast<int>(out.size()) == count) break;
      if (v.evaluate(z) <= 1.0) out.push_back(powersys::z_to_state(sys, z));
    }
  }
  return out;
}

ContainmentReport trajectory_containment(const SwingSystem& sys, const ConstrainedPolySystem& poly_sys,
                                         const poly::Polynomial& v, int count, std::uint64_t seed, double v_min,
                                         const SimOptions& opts, int jobs) {
  ContainmentReport rep;
  rep.starts = states_inside(sys, poly_sys, v, count, seed);
  rep.trajectories = count;
  rep.results.resize(rep.starts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rep.starts.size(); i = next++) {
      rep.results[i] = classify_point(sys, rep.starts[i], v_min, opts);
    }
  };
  const int n = std::max(1, std::min(jobs, count));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& c : rep.results) {
    if (c.outcome != Outcome::ConvergedFeasible) ++rep.failures;
    rep.min_voltage = std::min(rep.min_voltage, c.min_voltage);
  }
  return rep;
}

void write_boundary_csv(std::ostream& out, const SliceBoundary& b) {
  out << std::setprecision(17);
  out << "x,y\n";
  for (const auto& [x, y] : b.points) out << x << ',' << y << '\n';
}

void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
  out << std::setprecision(17);
  out << "t";
  const std::size_t ns = t.states.empty() ? 0 : t.states.front().size();
  for (std::size_t i = 0; i < ns / 2; ++i) out << ",delta" << i + 1;
  for (std::size_t i = 0; i < ns / 2; ++i) out << ",omega" << i + 1;
  const std::size_t nv = t.voltages.empty() ? 0 : t.voltages.front().size();
  for (std::size_t j = 0; j < nv; ++j) out << ",v" << j + 1;
  out << '\n';
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    out << t.times[k];
    for (double s : t.states[k]) out << ',' << s;
    for (double v : t.voltages[k]) out << ',' << v;
    out << '\n';
  }
}

void write_grid_csv(std::ostream& out, const std::vector<GridNode>& grid) {
  out << std::setprecision(17);
  out << "x,y,class,V\n";
  for (const auto& n : grid) out << n.x << ',' << n.y << ',' << to_string(n.c.outcome) << ',' << n.v << '\n';
}

}  // namespace csr::sim
