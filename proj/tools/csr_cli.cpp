// csr_cli: build a power-system case, estimate its constrained stability
// region, validate a certificate and brute-force slices of the true region.

#include "csr/json_io.hpp"
#include "csr/powersys.hpp"
#include "csr/roa.hpp"
#include "csr/sim.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>

namespace fs = std::filesystem;
using namespace csr;

namespace {

enum Exit { kOk = 0, kUsage = 1, kModel = 2, kSolver = 3, kViolation = 4 };

struct Common {
  std::string model;
  bool unconstrained = false;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool verbose = false;
};

struct SimArgs {
  double dt = 1e-3;
  double t_end = 20.0;
  double conv_tol = 1e-3;

  sim::SimOptions options() const { return {t_end, dt, conv_tol}; }
};

struct SliceArgs {
  int x_axis = 0;
  int y_axis = 1;
  std::vector<double> speeds;      // pinned speed coordinates; default 0
  double half_width = std::numbers::pi;  // grid range around the SEP
  int res = 101;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-m,--model", c.model, "model file")->required()->check(CLI::ExistingFile);
  cmd->add_flag("--unconstrained", c.unconstrained, "drop the LVRT inequalities");
  cmd->add_option("--seed", c.seed, "seed for all sampling");
  cmd->add_option("-j,--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("-v,--verbose", c.verbose, "solver progress on stderr");
}

void add_sim(CLI::App* cmd, SimArgs& s) {
  cmd->add_option("--dt", s.dt, "RK4 step [s]")->check(CLI::PositiveNumber);
  cmd->add_option("--t-end", s.t_end, "simulation horizon [s]")->check(CLI::PositiveNumber);
  cmd->add_option("--conv-tol", s.conv_tol, "convergence tolerance (inf-norm)")->check(CLI::PositiveNumber);
}

void add_slice(CLI::App* cmd, SliceArgs& s) {
  cmd->add_option("--x-axis", s.x_axis, "state coordinate on the x axis");
  cmd->add_option("--y-axis", s.y_axis, "state coordinate on the y axis");
  cmd->add_option("--slice-speed", s.speeds, "pinned relative speeds [rad/s]")->delimiter(',');
  cmd->add_option("--half-width", s.half_width, "grid half-width around the SEP")->check(CLI::PositiveNumber);
  cmd->add_option("--res", s.res, "grid nodes per axis")->check(CLI::Range(2, 100000));
}

powersys::PowerCase load_case(const Common& c) {
  powersys::PowerCase pc = powersys::build_case(powersys::load_model(c.model));
  if (c.unconstrained) pc.system = pc.system.without_inequalities();
  return pc;
}

std::vector<double> slice_base(const powersys::SwingSystem& sw, const SliceArgs& s) {
  std::vector<double> base = sw.sep_state();
  const int nr = sw.nrel();
  if (!s.speeds.empty() && static_cast<int>(s.speeds.size()) != nr) {
    throw CLI::ValidationError("--slice-speed", "expected " + std::to_string(nr) + " values");
  }
  for (int a = 0; a < static_cast<int>(s.speeds.size()); ++a) base[static_cast<std::size_t>(nr + a)] = s.speeds[static_cast<std::size_t>(a)];
  return base;
}

sim::Slice make_slice(const powersys::SwingSystem& sw, const SliceArgs& s) {
  sim::Slice sl;
  sl.axis_x = s.x_axis;
  sl.axis_y = s.y_axis;
  sl.base = slice_base(sw, s);
  sl.x_min = sl.base[static_cast<std::size_t>(s.x_axis < sw.nstate() && s.x_axis >= 0 ? s.x_axis : 0)] - s.half_width;
  sl.x_max = sl.x_min + 2.0 * s.half_width;
  sl.y_min = sl.base[static_cast<std::size_t>(s.y_axis < sw.nstate() && s.y_axis >= 0 ? s.y_axis : 0)] - s.half_width;
  sl.y_max = sl.y_min + 2.0 * s.half_width;
  sl.nx = sl.ny = s.res;
  sl.validate(sw.nstate());
  return sl;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  return out;
}

double v_min_of(const powersys::SwingSystem& sw) {
  double v = 0.0;
  for (double x : sw.v_min) v = std::max(v, x);
  return v;
}

void print_check(const roa::CheckReport& r) {
  std::cout << "certificate_check: " << r.samples << " samples, " << r.inside << " inside {V<=1}\n"
            << "  positivity violations " << r.positivity_violations << ", decrease violations "
            << r.decrease_violations << ", constraint violations " << r.constraint_violations << "\n"
            << "  min V/|z|^2 " << r.min_v_ratio << ", max Vdot inside " << r.max_vdot << ", min h inside "
            << r.min_h << "\n";
}

// ------------------------------------------------------------- commands

int cmd_build(const Common& c) {
  const auto pc = load_case(c);
  const auto& sw = pc.swing;
  std::cout << "power flow: " << pc.eq.pf.iterations << " iterations, mismatch " << pc.eq.pf.mismatch << "\n";
  std::cout << "equilibrium residual " << pc.eq.residual << "\n";
  std::cout << "reference machine " << pc.model.machines[static_cast<std::size_t>(sw.ref)].id << "\n";
  std::cout << "SEP (relative angles, rad):";
  for (int a = 0; a < sw.nrel(); ++a) std::cout << " " << sw.delta_s(sw.others[static_cast<std::size_t>(a)]);
  std::cout << "\n";
  for (int g = 0; g < sw.ng; ++g) {
    const auto& m = pc.model.machines[static_cast<std::size_t>(g)];
    std::cout << "machine " << m.id << ": |E| " << sw.e(g) << ", Pm " << sw.pm(g) << ", M " << sw.m(g) << "\n";
  }
  std::cout << "reduced network Y_red:\n";
  for (int i = 0; i < sw.ng; ++i) {
    std::cout << " ";
    for (int k = 0; k < sw.ng; ++k) std::cout << "  " << sw.g(i, k) << (sw.b(i, k) < 0 ? " - j" : " + j") << std::abs(sw.b(i, k));
    std::cout << "\n";
  }
  std::cout << "polynomial system: " << pc.system.nvars << " variables, " << pc.system.g.size() << " equalities, "
            << pc.system.h.size() << " inequalities\n";
  const std::vector<double> origin(static_cast<std::size_t>(pc.system.nvars), 0.0);
  for (std::size_t j = 0; j < pc.system.h.size(); ++j) {
    std::cout << "h" << j + 1 << "(0) = " << pc.system.h[j].evaluate(origin) << " (bus " << sw.monitored_bus_ids[j]
              << ", bound " << sw.v_min[j] << " pu)\n";
  }
  return kOk;
}

int cmd_estimate(const Common& c, const roa::DegreeProfile& prof, int max_outer, const std::string& out_dir,
                 const SliceArgs& slice, int samples) {
  const auto pc = load_case(c);
  roa::Options opts;
  opts.max_outer = max_outer;
  if (c.verbose) opts.log = &std::cerr;
  const roa::LyapunovCertificate cert = roa::estimate_csr(pc.system, prof, opts);
  const fs::path dir(out_dir);
  {
    auto out = open_out(dir / "certificate.json");
    out << json_io::certificate_to_json(cert, pc.system.labels);
  }
  const auto boundary = sim::level_set_boundary(pc.swing, cert.v, slice.x_axis, slice.y_axis, slice_base(pc.swing, slice));
  {
    auto out = open_out(dir / "level_set.csv");
    sim::write_boundary_csv(out, boundary);
  }
  std::cout << "V = " << poly::to_string(cert.v, pc.system.labels, 4) << "\n";
  std::cout << "outer iterations " << cert.outer_iterations << (cert.fixpoint_reached ? " (fixpoint)" : "")
            << ", final beta " << cert.beta_final << "\n";
  std::cout << "slice area " << boundary.area << (boundary.truncated ? " (truncated)" : "") << "\n";
  bool ok = cert.verified();
  if (!ok) std::cout << "SOS re-verification failed\n";
  roa::CheckOptions co;
  co.samples = samples;
  co.seed = c.seed;
  const auto rep = roa::certificate_check(pc.system, cert.v, co);
  print_check(rep);
  if (rep.violations() > 0) ok = false;
  std::cout << "wrote " << (dir / "certificate.json").string() << ", " << (dir / "level_set.csv").string() << "\n";
  return ok ? kOk : kViolation;
}

int cmd_validate(const Common& c, const std::string& cert_path, const std::string& out_dir, int samples,
                 int trajectories, bool grid, const SliceArgs& slice, const SimArgs& simargs) {
  const auto pc = load_case(c);
  const auto cert = json_io::load_certificate(cert_path);
  if (cert.nvars != pc.system.nvars) throw json_io::FormatError("certificate has " + std::to_string(cert.nvars) +
                                                                " variables, model has " + std::to_string(pc.system.nvars));
  bool ok = true;
  roa::CheckOptions co;
  co.samples = samples;
  co.seed = c.seed;
  const auto rep = roa::certificate_check(pc.system, cert.v, co);
  print_check(rep);
  if (rep.violations() > 0) ok = false;

  const fs::path dir(out_dir);
  const double vmin = c.unconstrained ? 0.0 : v_min_of(pc.swing);
  if (trajectories > 0) {
    const auto tr = sim::trajectory_containment(pc.swing, pc.system, cert.v, trajectories, c.seed, vmin,
                                                simargs.options(), c.jobs);
    std::cout << "trajectories: " << tr.trajectories << " from {V<=1}, " << tr.failures
              << " not converged_feasible, min monitored voltage " << tr.min_voltage << "\n";
    if (tr.failures > 0) ok = false;
    auto out = open_out(dir / "trajectories.csv");
    out << std::setprecision(17) << "index";
    for (int i = 0; i < pc.swing.nstate(); ++i) out << ",x" << i + 1;
    out << ",class,min_voltage,violation_time\n";
    for (std::size_t i = 0; i < tr.starts.size(); ++i) {
      out << i;
      for (double x : tr.starts[i]) out << ',' << x;
      out << ',' << sim::to_string(tr.results[i].outcome) << ',' << tr.results[i].min_voltage << ','
          << tr.results[i].violation_time << '\n';
    }
  }
  if (grid) {
    const auto sl = make_slice(pc.swing, slice);
    const auto nodes = sim::grid_csr(pc.swing, sl, vmin, simargs.options(), c.jobs, &cert.v);
    const int bad = sim::containment_violations(nodes, sl);
    std::cout << "grid " << sl.nx << "x" << sl.ny << ": " << bad << " nodes with V<=1 outside the true region\n";
    if (bad > 0) ok = false;
    auto out = open_out(dir / "grid.csv");
    sim::write_grid_csv(out, nodes);
  }
  std::cout << (ok ? "validation passed" : "validation FAILED") << "\n";
  return ok ? kOk : kViolation;
}

int cmd_grid(const Common& c, const std::string& cert_path, const std::string& out_path, const SliceArgs& slice,
             const SimArgs& simargs) {
  const auto pc = load_case(c);
  std::optional<roa::LyapunovCertificate> cert;
  if (!cert_path.empty()) cert = json_io::load_certificate(cert_path);
  const auto sl = make_slice(pc.swing, slice);
  const double vmin = c.unconstrained ? 0.0 : v_min_of(pc.swing);
  const auto nodes = sim::grid_csr(pc.swing, sl, vmin, simargs.options(), c.jobs, cert ? &cert->v : nullptr);
  auto out = open_out(out_path);
  sim::write_grid_csv(out, nodes);
  int counts[3] = {0, 0, 0};
  for (const auto& n : nodes) ++counts[static_cast<int>(n.c.outcome)];
  std::cout << "grid " << sl.nx << "x" << sl.ny << ": " << counts[0] << " converged_feasible, " << counts[1]
            << " infeasible_lvrt, " << counts[2] << " not_converged\n";
  if (cert) std::cout << "containment violations " << sim::containment_violations(nodes, sl) << "\n";
  std::cout << "wrote " << out_path << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained stability region estimation via SOS Lyapunov synthesis"};
  app.require_subcommand(1);
  std::cout << std::setprecision(4);

  Common common;
  SimArgs simargs;
  SliceArgs slice;

  auto* build = app.add_subcommand("build", "load a model and report the equilibrium and polynomial system");
  add_common(build, common);

  roa::DegreeProfile prof;
  int max_outer = 10;
  std::string out_dir = "out";
  int samples = 10000;
  auto* estimate = app.add_subcommand("estimate", "synthesize a Lyapunov certificate");
  add_common(estimate, common);
  estimate->add_option("--max-outer", max_outer, "outer p <- V iterations")->check(CLI::PositiveNumber);
  estimate->add_option("-o,--out", out_dir, "output directory");
  estimate->add_option("--samples", samples, "certificate_check samples")->check(CLI::PositiveNumber);
  estimate->add_option("--deg-v", prof.v, "degree of V");
  estimate->add_option("--deg-s6", prof.s6);
  estimate->add_option("--deg-s8", prof.s8);
  estimate->add_option("--deg-lambda1", prof.lambda1);
  estimate->add_option("--deg-lambda2", prof.lambda2);
  estimate->add_option("--deg-lambda3", prof.lambda3);
  estimate->add_option("--deg-sh", prof.s_h);
  estimate->add_option("--deg-lambdah", prof.lambda_h);
  estimate->add_option("--x-axis", slice.x_axis, "state coordinate on the x axis of the level-set slice");
  estimate->add_option("--y-axis", slice.y_axis, "state coordinate on the y axis of the level-set slice");
  estimate->add_option("--slice-speed", slice.speeds, "pinned relative speeds [rad/s]")->delimiter(',');

  std::string cert_path;
  int trajectories = 100;
  bool grid_flag = false;
  auto* validate = app.add_subcommand("validate", "check a certificate against sampling and simulation");
  add_common(validate, common);
  add_sim(validate, simargs);
  add_slice(validate, slice);
  validate->add_option("-c,--cert", cert_path, "certificate JSON")->required()->check(CLI::ExistingFile);
  validate->add_option("-o,--out", out_dir, "output directory");
  validate->add_option("--samples", samples, "certificate_check samples")->check(CLI::PositiveNumber);
  validate->add_option("--trajectories", trajectories, "trajectories from inside {V<=1}")->check(CLI::NonNegativeNumber);
  validate->add_flag("--grid", grid_flag, "also run the grid containment check");

  std::string grid_out = "out/grid.csv";
  auto* grid = app.add_subcommand("grid", "classify a grid of initial states by simulation");
  add_common(grid, common);
  add_sim(grid, simargs);
  add_slice(grid, slice);
  grid->add_option("-c,--cert", cert_path, "certificate JSON (adds V to the output)")->check(CLI::ExistingFile);
  grid->add_option("-o,--out", grid_out, "output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*build) return cmd_build(common);
    if (*estimate) {
      try {
        prof.validate();
      } catch (const roa::RoaError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
      }
      return cmd_estimate(common, prof, max_outer, out_dir, slice, samples);
    }
    if (*validate) return cmd_validate(common, cert_path, out_dir, samples, trajectories, grid_flag, slice, simargs);
    if (*grid) return cmd_grid(common, cert_path, grid_out, slice, simargs);
  } catch (const powersys::ModelError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return kModel;
  } catch (const json_io::FormatError& e) {
    std::cerr << "certificate error: " << e.what() << "\n";
    return kViolation;
  } catch (const roa::RoaError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolver;
  } catch (const sos::SosError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolver;
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolver;
  }
  return kUsage;
}
