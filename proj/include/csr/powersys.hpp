#pragma once

// Classical multi-machine power-system model: network data, power flow,
// Kron reduction to generator internal nodes, relative-frame swing
// dynamics and their polynomial form in (speed, sin, 1 - cos) coordinates.

#include "csr/poly.hpp"
#include "csr/system.hpp"

#include <Eigen/Dense>

#include <complex>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace csr::powersys {

using cplx = std::complex<double>;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BusType { Slack, PV, PQ };

struct Bus {
  int id = 0;
  BusType type = BusType::PQ;
  double v_set = 1.0;   // |V| for slack and PV buses [pu]
  double angle = 0.0;   // slack angle [rad]
  double p_gen = 0.0;   // scheduled generation for PV buses [pu]
  double p_load = 0.0;  // constant-power load [pu]
  double q_load = 0.0;
};

struct Branch {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double b = 0.0;  // total line charging
};

struct Machine {
  int id = 0;
  int bus = 0;
  double m = 0.0;   // inertia [s^2/rad pu]
  double d = 0.0;   // damping [pu s/rad]
  double xd = 0.0;  // transient reactance [pu]
};

struct LvrtCurve {
  std::string name;
  std::vector<std::pair<double, double>> points;  // time [s] -> minimum voltage [pu]

  double max_value() const;
  void validate() const;
};

struct PvUnit {
  int id = 0;
  int bus = 0;
  double p = 0.0;  // injection, modeled as a negative load [pu]
  double q = 0.0;
  LvrtCurve lvrt;
};

struct PowerSystemModel {
  double frequency = 60.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Machine> machines;
  std::vector<PvUnit> pv_units;
  std::optional<int> reference;  // machine id; default highest inertia

  /// Throws ModelError: duplicate ids, dangling references, missing slack,
  /// disconnected network, non-uniform D/M, bad LVRT curves.
  void validate() const;

  int bus_index(int id) const;
  int machine_index(int id) const;
  int reference_index() const;
  double damping_ratio() const;  // common D/M
};

/// Parses the record format documented in docs/model_format.md.
PowerSystemModel parse_model(std::istream& in, const std::string& source = "<model>");
PowerSystemModel load_model(const std::string& path);

struct PowerFlow {
  std::vector<cplx> v;           // bus voltage phasors
  std::vector<cplx> injection;   // net complex injection per bus
  int iterations = 0;
  double mismatch = 0.0;
};

PowerFlow solve_power_flow(const PowerSystemModel& model, double tol = 1e-12, int max_iterations = 50);

/// Physical network only: series branches and line charging.
Eigen::MatrixXcd build_bus_admittance(const PowerSystemModel& model);

/// Buses (0..nb-1) followed by one internal node per machine, with loads
/// and PV units converted to shunt admittances at the solved voltages.
Eigen::MatrixXcd build_admittance(const PowerSystemModel& model, const PowerFlow& pf);

struct ReducedNetwork {
  Eigen::MatrixXcd y_red;  // retained x retained
  Eigen::MatrixXcd k;      // eliminated nodes x retained, includes the scaling
};

/// Eliminates every node not in `retained`. K = -Y11^{-1} Y12 diag(scale).
/// Throws ModelError when Y11 is singular.
ReducedNetwork kron_reduce(const Eigen::MatrixXcd& y, const std::vector<int>& retained,
                           const Eigen::VectorXcd& scale);

struct Equilibrium {
  PowerFlow pf;
  Eigen::VectorXd delta;   // absolute internal angles [rad]
  Eigen::VectorXd e_mag;   // |E|
  Eigen::VectorXd pm;      // mechanical power [pu]
  ReducedNetwork reduced;
  double residual = 0.0;   // max |swing rhs| at the equilibrium
};

Equilibrium solve_equilibrium(const PowerSystemModel& model);

/// Relative-frame swing model. State layout: [delta_rel (ng-1), omega_rel
/// (ng-1)], angles relative to the reference machine, non-reference
/// machines in model order.
struct SwingSystem {
  int ng = 0;
  int ref = 0;
  std::vector<int> others;
  Eigen::VectorXd m;
  Eigen::VectorXd e;
  Eigen::VectorXd pm;
  double damping_ratio = 0.0;
  Eigen::MatrixXd g;  // Re Y_red
  Eigen::MatrixXd b;  // Im Y_red
  Eigen::VectorXd delta_s;  // SEP angles relative to the reference, all machines
  Eigen::MatrixXcd k;       // monitored buses x machines, includes |E|
  std::vector<int> monitored_bus_ids;
  std::vector<double> v_min;

  int nrel() const { return ng - 1; }
  int nstate() const { return 2 * (ng - 1); }
  std::vector<double> sep_state() const;
  std::vector<double> rhs(std::span<const double> x) const;
  /// Monitored bus voltage phasors at a state.
  std::vector<cplx> voltages(std::span<const double> x) const;
};

SwingSystem build_swing_system(const PowerSystemModel& model, const Equilibrium& eq);

std::vector<double> swing_rhs(const SwingSystem& s, std::span<const double> x);

/// z from a relative state: speeds, then (sin, 1 - cos) per machine.
std::vector<double> state_to_z(const SwingSystem& s, std::span<const double> x);
/// Inverse of state_to_z for points on the manifold (angle wrapped to (-pi, pi]).
std::vector<double> z_to_state(const SwingSystem& s, std::span<const double> z);

std::vector<poly::Polynomial> lvrt_polynomials(const SwingSystem& s);

/// f, g and h in z coordinates. Throws ModelError if f(0) or g(0) is
/// nonzero beyond 1e-10.
ConstrainedPolySystem transform_to_polynomial(const SwingSystem& s);

/// One-stop construction: parse-free build from a validated model.
struct PowerCase {
  PowerSystemModel model;
  Equilibrium eq;
  SwingSystem swing;
  ConstrainedPolySystem system;
};

PowerCase build_case(const PowerSystemModel& model);

}  // namespace csr::powersys
