#pragma once

// Time-domain oracle for the swing model: fixed-step RK4, voltage
// monitoring against a constant LVRT bound, and brute-force grids.

#include "csr/poly.hpp"
#include "csr/powersys.hpp"
#include "csr/system.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace csr::sim {

using powersys::SwingSystem;

struct Trajectory {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<std::vector<double>> states;    // relative-frame state per step
  std::vector<std::vector<double>> voltages;  // |v| at monitored buses per step
  bool blew_up = false;                       // truncated at a non-finite state
};

/// Classical RK4. Throws std::invalid_argument for dt <= 0 or t_end < dt.
Trajectory integrate(const SwingSystem& sys, std::span<const double> x0, double t_end, double dt);

enum class Outcome { ConvergedFeasible, InfeasibleLvrt, NotConverged };

std::string to_string(Outcome o);

struct Classification {
  Outcome outcome = Outcome::NotConverged;
  double violation_time = std::numeric_limits<double>::quiet_NaN();
  double min_voltage = std::numeric_limits<double>::infinity();
  double final_distance = std::numeric_limits<double>::infinity();  // inf-norm to the SEP
};

struct SimOptions {
  double t_end = 20.0;
  double dt = 1e-3;
  double conv_tol = 1e-3;
};

/// Integrates without storing the trajectory; stops at the first sample
/// where any monitored voltage falls below v_min.
Classification classify_point(const SwingSystem& sys, std::span<const double> x0, double v_min,
                              const SimOptions& opts = {});

/// Two state coordinates varied over a rectangle, the rest pinned to `base`.
struct Slice {
  int axis_x = 0;
  int axis_y = 1;
  double x_min = 0.0, x_max = 0.0;
  double y_min = 0.0, y_max = 0.0;
  int nx = 101, ny = 101;
  std::vector<double> base;  // empty: the SEP

  void validate(int nstate) const;
};

struct GridNode {
  double x = 0.0;
  double y = 0.0;
  Classification c;
  double v = std::numeric_limits<double>::quiet_NaN();  // V(z(node)) when a V is supplied
};

/// Row-major over (y, x). Result order is independent of `jobs`.
std::vector<GridNode> grid_csr(const SwingSystem& sys, const Slice& slice, double v_min, const SimOptions& opts = {},
                               int jobs = 1, const poly::Polynomial* v = nullptr);

/// Nodes with V <= 1 classified other than ConvergedFeasible, ignoring those
/// with a V > 1 node within one cell (8-neighbourhood). Requires V values.
int containment_violations(const std::vector<GridNode>& grid, const Slice& slice);

/// Boundary of {V <= 1} on a slice through `base`, traced along rays from
/// the base point. Rays that stay inside up to `r_max` end there and set
/// `truncated`.
struct SliceBoundary {
  std::vector<std::pair<double, double>> points;
  double area = 0.0;
  bool truncated = false;
};

SliceBoundary level_set_boundary(const SwingSystem& sys, const poly::Polynomial& v, int axis_x, int axis_y,
                                 const std::vector<double>& base = {}, int rays = 360, double r_max = 6.0);

/// Relative-frame states drawn on the manifold with V(z) <= 1, in draw order.
std::vector<std::vector<double>> states_inside(const SwingSystem& sys, const ConstrainedPolySystem& poly_sys,
                                               const poly::Polynomial& v, int count, std::uint64_t seed);

struct ContainmentReport {
  int trajectories = 0;
  int failures = 0;  // not ConvergedFeasible
  double min_voltage = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> starts;
  std::vector<Classification> results;
};

/// Simulates `count` trajectories from states_inside.
ContainmentReport trajectory_containment(const SwingSystem& sys, const ConstrainedPolySystem& poly_sys,
                                         const poly::Polynomial& v, int count, std::uint64_t seed, double v_min,
                                         const SimOptions& opts = {}, int jobs = 1);

void write_boundary_csv(std::ostream& out, const SliceBoundary& b);
void write_trajectory_csv(std::ostream& out, const Trajectory& t);
void write_grid_csv(std::ostream& out, const std::vector<GridNode>& grid);

}  // namespace csr::sim
