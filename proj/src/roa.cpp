#include "csr/roa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <utility>

namespace csr::roa {

using sos::AffinePoly;
using sos::SosProgram;

namespace {

using Named = std::vector<std::pair<std::string, AffinePoly>>;
using Multipliers = std::map<std::string, Polynomial>;

AffinePoly lie(const AffinePoly& v, const std::vector<Polynomial>& f) {
  AffinePoly r(poly::lie_derivative(v.constant(), f));
  for (const auto& [var, dir] : v.terms()) r.add_variable(var, poly::lie_derivative(dir, f));
  return r;
}

Polynomial constant(int n, double c) { return Polynomial::constant(n, c); }

// SOS multiplier; positive degrees drop the constant monomial when asked.
AffinePoly sos_multiplier(SosProgram& prog, Named& rec, const std::string& name, int degree, bool vanish) {
  AffinePoly s = prog.new_sos_poly(name, degree, vanish && degree > 0);
  rec.emplace_back(name, s);
  return s;
}

// sum_k lambda_k g_k with fresh free polynomials.
AffinePoly lambda_dot_g(SosProgram& prog, Named& rec, const std::string& base, int degree,
                        const std::vector<Polynomial>& g) {
  AffinePoly r(prog.nvars());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const std::string name = base + "_" + std::to_string(k + 1);
    AffinePoly lam = prog.new_free_poly(name, degree);
    rec.emplace_back(name, lam);
    r += lam * g[k];
  }
  return r;
}

std::optional<Multipliers> solve_program(const SosProgram& prog, const Named& rec, const Options& opts) {
  const sos::SosSolution sol = prog.solve(opts.sdp);
  if (!sol.verified()) return std::nullopt;
  Multipliers out;
  for (const auto& [name, expr] : rec) out[name] = sol.value(expr).pruned(poly::kDropTolerance);
  return out;
}

template <class T>
struct Search {
  double beta = 0.0;
  std::optional<T> best;
  int solves = 0;
  bool capped = false;  // never found an infeasible beta
};

// Doubling then bisection, starting from a beta known (or assumed) feasible.
template <class T, class F>
Search<T> line_search(double start, std::optional<T> incumbent, F&& feasible_at, const Options& opts,
                      const char* what) {
  Search<T> s;
  s.beta = start;
  s.best = std::move(incumbent);
  double hi = std::numeric_limits<double>::infinity();
  double probe = start > 0.0 ? 2.0 * start : opts.initial_probe;
  while (s.solves < opts.max_solves) {
    double cand;
    if (std::isinf(hi)) {
      cand = probe;
    } else {
      if (hi - s.beta <= opts.beta_tol) break;
      cand = 0.5 * (s.beta + hi);
    }
    ++s.solves;
    std::optional<T> r = feasible_at(cand);
    if (opts.log) *opts.log << "    " << what << " beta=" << cand << (r ? " feasible\n" : " infeasible\n");
    if (r) {
      s.beta = cand;
      s.best = std::move(r);
      if (std::isinf(hi)) probe = 2.0 * cand;
    } else {
      hi = cand;
    }
  }
  s.capped = std::isinf(hi);
  return s;
}

Polynomial fixed_or(const Multipliers& m, const std::string& name, int n) {
  auto it = m.find(name);
  return it == m.end() ? constant(n, 1.0) : it->second;
}

void merge(Multipliers& into, const Multipliers& from) {
  for (const auto& [k, v] : from) into[k] = v;
}

}  // namespace

void DegreeProfile::validate() const {
  auto even = [](int d, const char* name) {
    if (d < 0 || d % 2 != 0) throw RoaError(std::string("degree profile: ") + name + " must be even and non-negative");
  };
  even(s2, "s2");
  even(s6, "s6");
  even(s8, "s8");
  even(s9, "s9");
  even(s_h, "s_h");
  even(local_s2, "local_s2");
  even(local_s6, "local_s6");
  even(local_s9, "local_s9");
  for (int d : {lambda1, lambda2, lambda3, lambda_h, local_lambda1, local_lambda2, local_lambda3}) {
    if (d < 0) throw RoaError("degree profile: multiplier degrees must be non-negative");
  }
  if (v < 2) throw RoaError("degree profile: V needs degree >= 2");
}

bool LyapunovCertificate::verified() const {
  if (verification.empty()) return false;
  return std::all_of(verification.begin(), verification.end(),
                     [](const VerificationEntry& e) { return e.verdict == sos::Verdict::Sos; });
}

// ------------------------------------------------------------------ local

LocalResult local_lyapunov(const ConstrainedPolySystem& sys, const DegreeProfile& prof, const Options& opts) {
  sys.validate();
  prof.validate();
  if (!(opts.epsilon > 0.0)) throw RoaError("local_lyapunov: epsilon must be positive");
  const int n = sys.nvars;
  const Polynomial p = poly::sum_of_squares_of_variables(n);
  const Polynomial l = p * opts.epsilon;
  LocalResult out;

  auto attempt = [&](double beta) -> std::optional<Multipliers> {
    SosProgram prog(n);
    Named rec;
    AffinePoly v = prog.new_free_poly("V", prof.v, true);
    rec.emplace_back("V", v);
    const AffinePoly vdot = lie(v, sys.f);
    const Polynomial bp = constant(n, beta) - p;

    AffinePoly c1 = v - lambda_dot_g(prog, rec, "lambda1", prof.local_lambda1, sys.g) - l;
    // A constant s2 is forced to zero by the constant term, so it is left out.
    if (prof.local_s2 > 0) c1 -= sos_multiplier(prog, rec, "s2", prof.local_s2, true) * bp;
    prog.add_sos_constraint("positivity", c1);

    AffinePoly c2 = -vdot - lambda_dot_g(prog, rec, "lambda2", prof.local_lambda2, sys.g) - l;
    if (prof.local_s6 > 0) c2 -= sos_multiplier(prog, rec, "s6", prof.local_s6, true) * bp;
    prog.add_sos_constraint("decrease", c2);

    for (std::size_t j = 0; j < sys.h.size(); ++j) {
      const std::string tag = std::to_string(j + 1);
      AffinePoly s9 = sos_multiplier(prog, rec, "s9_" + tag, prof.local_s9, false);
      AffinePoly c3 = AffinePoly(sys.h[j]) - s9 * bp -
                      lambda_dot_g(prog, rec, "lambda3_" + tag, prof.local_lambda3, sys.g);
      prog.add_sos_constraint("inequality_" + tag, c3);
    }
    return solve_program(prog, rec, opts);
  };

  if (opts.log) *opts.log << "local estimate\n";
  auto search = line_search<Multipliers>(0.0, std::nullopt, attempt, opts, "local");
  out.solves += search.solves;
  if (!search.best) throw RoaError("local_lyapunov: no feasible beta > 0 (check the degree profile and model)");
  out.beta = search.beta;
  Polynomial v = search.best->at("V");
  const double scale = v.max_abs_coefficient();
  if (!(scale > 0.0)) throw RoaError("local_lyapunov: zero Lyapunov candidate");
  v = v * (1.0 / scale);
  const Polynomial vdot = poly::lie_derivative(v, sys.f);

  // Largest level gamma at which {V <= gamma} keeps decrease and h >= 0.
  auto level = [&](double gamma) -> std::optional<Multipliers> {
    SosProgram prog(n);
    Named rec;
    const Polynomial gv = constant(n, gamma) - v;
    AffinePoly s8 = sos_multiplier(prog, rec, "s8", prof.s8, true);
    AffinePoly c = -(s8 * gv) - vdot - lambda_dot_g(prog, rec, "lambda3", prof.lambda3, sys.g) - l * gamma;
    prog.add_sos_constraint("decrease", c);
    for (std::size_t j = 0; j < sys.h.size(); ++j) {
      const std::string tag = std::to_string(j + 1);
      AffinePoly sh = sos_multiplier(prog, rec, "s_h_" + tag, prof.s_h, false);
      AffinePoly ch = AffinePoly(sys.h[j]) - sh * gv - lambda_dot_g(prog, rec, "lambda_h_" + tag, prof.lambda_h, sys.g);
      prog.add_sos_constraint("inequality_" + tag, ch);
    }
    return solve_program(prog, rec, opts);
  };
  auto lv = line_search<Multipliers>(0.0, std::nullopt, level, opts, "level");
  out.solves += lv.solves;
  if (!lv.best) throw RoaError("local_lyapunov: no certified level set for the local V");
  out.level = lv.beta;
  out.v = v * (1.0 / lv.beta);
  out.multipliers = *search.best;
  out.multipliers.erase("V");
  return out;
}

// ------------------------------------------------------------ expanding

namespace {

struct Stage {
  const ConstrainedPolySystem& sys;
  const DegreeProfile& prof;
  const Options& opts;
  Polynomial p;
  Polynomial l;
  int n;

  // V fixed, no beta: positivity, decrease, inequalities.
  std::optional<Multipliers> fixed_v(const Polynomial& v) const {
    SosProgram prog(n);
    Named rec;
    const Polynomial one_minus_v = constant(n, 1.0) - v;
    const Polynomial vdot = poly::lie_derivative(v, sys.f);
    AffinePoly s2 = prof.s2 > 0 ? sos_multiplier(prog, rec, "s2", prof.s2, false) : AffinePoly(constant(n, 1.0));
    prog.add_sos_constraint("positivity", s2 * v - lambda_dot_g(prog, rec, "lambda1", prof.lambda1, sys.g) - l);
    AffinePoly s8 = sos_multiplier(prog, rec, "s8", prof.s8, true);
    AffinePoly s9 = prof.s9 > 0 ? sos_multiplier(prog, rec, "s9", prof.s9, false) : AffinePoly(constant(n, 1.0));
    prog.add_sos_constraint("decrease", -(s8 * one_minus_v) - s9 * vdot -
                                            lambda_dot_g(prog, rec, "lambda3", prof.lambda3, sys.g) - l);
    add_inequalities(prog, rec, one_minus_v, nullptr);
    return solve_program(prog, rec, opts);
  }

  // Containment of P_beta in {V <= 1} for fixed V.
  std::optional<Multipliers> containment(const Polynomial& v, double beta) const {
    SosProgram prog(n);
    Named rec;
    AffinePoly s6 = sos_multiplier(prog, rec, "s6", prof.s6, false);
    prog.add_sos_constraint("containment", -(s6 * (constant(n, beta) - p)) -
                                               lambda_dot_g(prog, rec, "lambda2", prof.lambda2, sys.g) -
                                               (v - constant(n, 1.0)));
    return solve_program(prog, rec, opts);
  }

  // All four families with s2, s8, s9, s_h fixed and V free.
  std::optional<Multipliers> free_v(const Multipliers& fixed, double beta) const {
    SosProgram prog(n);
    Named rec;
    AffinePoly v = prog.new_free_poly("V", prof.v, true);
    rec.emplace_back("V", v);
    const AffinePoly vdot = lie(v, sys.f);
    const AffinePoly one_minus_v = AffinePoly(constant(n, 1.0)) - v;
    const Polynomial s2 = fixed_or(fixed, "s2", n);
    const Polynomial s8 = fixed.at("s8");
    const Polynomial s9 = fixed_or(fixed, "s9", n);
    prog.add_sos_constraint("positivity", s2 * v - lambda_dot_g(prog, rec, "lambda1", prof.lambda1, sys.g) - l);
    AffinePoly s6 = sos_multiplier(prog, rec, "s6", prof.s6, false);
    prog.add_sos_constraint("containment", -(s6 * (constant(n, beta) - p)) -
                                               lambda_dot_g(prog, rec, "lambda2", prof.lambda2, sys.g) -
                                               (v - constant(n, 1.0)));
    prog.add_sos_constraint("decrease", -(s8 * one_minus_v) - s9 * vdot -
                                            lambda_dot_g(prog, rec, "lambda3", prof.lambda3, sys.g) - l);
    add_inequalities(prog, rec, one_minus_v, &fixed);
    auto out = solve_program(prog, rec, opts);
    if (out) {
      (*out)["s8"] = s8;
      if (fixed.contains("s2")) (*out)["s2"] = s2;
      if (fixed.contains("s9")) (*out)["s9"] = s9;
      for (std::size_t j = 0; j < sys.h.size(); ++j) {
        const std::string key = "s_h_" + std::to_string(j + 1);
        (*out)[key] = fixed.at(key);
      }
    }
    return out;
  }

  void add_inequalities(SosProgram& prog, Named& rec, const AffinePoly& one_minus_v, const Multipliers* fixed) const {
    for (std::size_t j = 0; j < sys.h.size(); ++j) {
      const std::string tag = std::to_string(j + 1);
      AffinePoly sh = fixed ? AffinePoly(fixed->at("s_h_" + tag)) : sos_multiplier(prog, rec, "s_h_" + tag, prof.s_h, false);
      prog.add_sos_constraint("inequality_" + tag,
                              AffinePoly(sys.h[j]) - sh * one_minus_v -
                                  lambda_dot_g(prog, rec, "lambda_h_" + tag, prof.lambda_h, sys.g));
    }
  }
};

}  // namespace

ExpandResult expanding_interior(const ConstrainedPolySystem& sys, const Polynomial& p, double beta0,
                                const Polynomial& v0, const DegreeProfile& prof, const Options& opts) {
  sys.validate();
  prof.validate();
  const int n = sys.nvars;
  Stage st{sys, prof, opts, p, poly::sum_of_squares_of_variables(n) * opts.epsilon, n};
  ExpandResult res;
  res.v = v0;
  res.beta = beta0;
  res.beta_history.push_back(beta0);

  // Last state whose V passed the fixed-V program.
  struct Good {
    Polynomial v;
    double beta;
    Multipliers multipliers;
  };
  std::optional<Good> good;
  bool v_from_step_iii = false;
  auto revert = [&] {
    res.v = good->v;
    res.beta = good->beta;
    res.multipliers = good->multipliers;
    res.beta_history.back() = good->beta;
    v_from_step_iii = false;
  };

  for (int i = 0; i < opts.max_inner; ++i) {
    res.iterations = i + 1;
    // Step ii: V fixed, multipliers free.
    ++res.solves;
    auto fixed = st.fixed_v(res.v);
    if (!fixed) {
      if (i == 0) throw RoaError("expanding_interior: constraints infeasible at the starting V");
      if (opts.log) *opts.log << "  iteration " << i << ": fixed-V problem lost feasibility, reverting\n";
      revert();
      break;
    }
    v_from_step_iii = false;
    std::optional<Multipliers> incumbent;
    if (i > 0) incumbent = res.multipliers;
    auto ii = line_search<Multipliers>(
        res.beta, std::nullopt, [&](double b) { return st.containment(res.v, b); }, opts, "step-ii");
    res.solves += ii.solves;
    double beta_ii = res.beta;
    Multipliers bundle;
    if (ii.best) {
      beta_ii = ii.beta;
      bundle = *fixed;
      merge(bundle, *ii.best);
    } else if (incumbent) {
      bundle = *incumbent;
      merge(bundle, *fixed);
    } else {
      // No containment certificate even at the starting beta.
      auto at_start = st.containment(res.v, res.beta);
      ++res.solves;
      if (!at_start) throw RoaError("expanding_interior: containment infeasible at the starting beta");
      bundle = *fixed;
      merge(bundle, *at_start);
    }

    good = Good{res.v, beta_ii, bundle};

    // Step iii: multipliers s2, s8, s9, s_h fixed, V free.
    auto iii = line_search<Multipliers>(
        beta_ii, std::nullopt, [&](double b) { return st.free_v(bundle, b); }, opts, "step-iii");
    res.solves += iii.solves;
    double beta_new = beta_ii;
    if (iii.best && opts.backoff > 0.0 && iii.beta > beta_ii) {
      const double b = beta_ii + (1.0 - opts.backoff) * (iii.beta - beta_ii);
      ++res.solves;
      if (auto inner = st.free_v(bundle, b)) {
        iii.best = std::move(inner);
        iii.beta = b;
      }
    }
    if (iii.best) {
      beta_new = iii.beta;
      res.v = iii.best->at("V");
      res.multipliers = *iii.best;
      res.multipliers.erase("V");
      v_from_step_iii = true;
    } else {
      res.multipliers = bundle;
    }
    if (opts.log) *opts.log << "  iteration " << i << ": beta " << res.beta << " -> " << beta_new << "\n";
    const double delta = std::abs(beta_new - res.beta);
    res.beta = beta_new;
    res.beta_history.push_back(beta_new);
    if (delta <= opts.inner_tol) break;
  }
  if (v_from_step_iii) {
    ++res.solves;
    if (!st.fixed_v(res.v)) {
      if (opts.log) *opts.log << "  final V fails the fixed-V program, reverting\n";
      revert();
    }
  }
  return res;
}

LyapunovCertificate estimate_csr(const ConstrainedPolySystem& sys, const DegreeProfile& prof, const Options& opts) {
  LyapunovCertificate cert;
  cert.nvars = sys.nvars;
  cert.profile = prof;
  cert.options = opts;
  LocalResult local = local_lyapunov(sys, prof, opts);
  if (opts.log) *opts.log << "local beta " << local.beta << ", level " << local.level << "\n";

  Polynomial p = poly::sum_of_squares_of_variables(sys.nvars);
  double beta = 0.0;
  Polynomial v = local.v;
  for (int j = 0; j < opts.max_outer; ++j) {
    if (opts.log) *opts.log << "outer iteration " << j << "\n";
    ExpandResult er = expanding_interior(sys, p, beta, v, prof, opts);
    cert.beta_history.push_back(er.beta_history);
    cert.outer_iterations = j + 1;
    const double change = er.v.max_coefficient_distance(p);
    if (change < opts.fixpoint_tol) {
      cert.fixpoint_reached = true;
      // With V == p the containment condition degenerates; the previous
      // iteration certifies the same V.
      if (j == 0) {
        cert.v = er.v;
        cert.p_final = p;
        cert.beta_final = er.beta;
        cert.multipliers = er.multipliers;
      }
      break;
    }
    cert.v = er.v;
    cert.p_final = p;
    cert.beta_final = er.beta;
    cert.multipliers = er.multipliers;
    v = er.v;
    p = er.v;
    beta = 1.0;
  }
  if (opts.verify) cert.verification = verify_certificate(sys, cert, opts.sdp);
  return cert;
}

// ---------------------------------------------------------- verification

std::map<std::string, Polynomial> assemble_constraints(const ConstrainedPolySystem& sys,
                                                       const LyapunovCertificate& cert) {
  const int n = sys.nvars;
  const auto& m = cert.multipliers;
  auto get = [&](const std::string& k) {
    auto it = m.find(k);
    if (it == m.end()) throw RoaError("certificate is missing multiplier " + k);
    return it->second;
  };
  auto lam_g = [&](const std::string& base) {
    Polynomial r(n);
    for (std::size_t k = 0; k < sys.g.size(); ++k) r += get(base + "_" + std::to_string(k + 1)) * sys.g[k];
    return r;
  };
  const Polynomial one(constant(n, 1.0));
  const Polynomial l = poly::sum_of_squares_of_variables(n) * cert.options.epsilon;
  const Polynomial& v = cert.v;
  const Polynomial vdot = poly::lie_derivative(v, sys.f);
  const Polynomial s2 = fixed_or(m, "s2", n);
  const Polynomial s9 = fixed_or(m, "s9", n);

  std::map<std::string, Polynomial> out;
  out["positivity"] = s2 * v - lam_g("lambda1") - l;
  out["containment"] = -(get("s6") * (constant(n, cert.beta_final) - cert.p_final)) - lam_g("lambda2") - (v - one);
  out["decrease"] = -(get("s8") * (one - v)) - s9 * vdot - lam_g("lambda3") - l;
  for (std::size_t j = 0; j < sys.h.size(); ++j) {
    const std::string tag = std::to_string(j + 1);
    out["inequality_" + tag] = sys.h[j] - get("s_h_" + tag) * (one - v) - lam_g("lambda_h_" + tag);
  }
  for (const auto& [k, poly] : m) {
    if (k.rfind("s", 0) == 0) out["multiplier_" + k] = poly;
  }
  return out;
}

std::vector<VerificationEntry> verify_certificate(const ConstrainedPolySystem& sys, const LyapunovCertificate& cert,
                                                  const sdp::Settings& settings) {
  std::vector<VerificationEntry> out;
  for (const auto& [name, poly] : assemble_constraints(sys, cert)) {
    const sos::SosCheck chk = sos::check_sos(poly, settings);
    out.push_back({name, chk.verdict, chk.gram_mismatch, chk.min_eigenvalue});
  }
  return out;
}

// --------------------------------------------------------------- sampling

namespace {

std::vector<double> point_at(const ConstrainedPolySystem& sys, const std::vector<double>& angles,
                             const std::vector<double>& speeds, double t) {
  std::vector<double> z(static_cast<std::size_t>(sys.nvars), 0.0);
  for (std::size_t a = 0; a < sys.angle_pairs.size(); ++a) {
    const double th = t * angles[a];
    z[static_cast<std::size_t>(sys.angle_pairs[a].first)] = std::sin(th);
    z[static_cast<std::size_t>(sys.angle_pairs[a].second)] = 1.0 - std::cos(th);
  }
  const auto fc = sys.free_coordinates();
  for (std::size_t k = 0; k < fc.size(); ++k) z[static_cast<std::size_t>(fc[k])] = t * speeds[k];
  return z;
}

}  // namespace

std::vector<std::vector<double>> sample_manifold(const ConstrainedPolySystem& sys, const Polynomial& v, int count,
                                                 std::uint64_t seed, double speed_half_width) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> speed(-speed_half_width, speed_half_width);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t nfree = sys.free_coordinates().size();
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    std::vector<double> th(sys.angle_pairs.size()), w(nfree);
    for (auto& a : th) a = angle(rng);
    for (auto& s : w) s = speed(rng);
    const double u = unit(rng);
    if (i % 2 == 0) {
      out.push_back(point_at(sys, th, w, 1.0));
      continue;
    }
    // Pull the draw along its ray to somewhere inside the first crossing of V = 1.
    constexpr int kSteps = 64;
    double tmax = 1.0;
    for (int k = 1; k <= kSteps; ++k) {
      const double t = static_cast<double>(k) / kSteps;
      if (v.evaluate(point_at(sys, th, w, t)) > 1.0) {
        double lo = static_cast<double>(k - 1) / kSteps, hi = t;
        for (int b = 0; b < 30; ++b) {
          const double mid = 0.5 * (lo + hi);
          (v.evaluate(point_at(sys, th, w, mid)) > 1.0 ? hi : lo) = mid;
        }
        tmax = lo;
        break;
      }
    }
    out.push_back(point_at(sys, th, w, u * tmax));
  }
  return out;
}

CheckReport certificate_check(const ConstrainedPolySystem& sys, const Polynomial& v, const CheckOptions& opts) {
  CheckReport rep;
  const Polynomial vdot = poly::lie_derivative(v, sys.f);
  rep.min_v_ratio = std::numeric_limits<double>::infinity();
  rep.max_vdot = -std::numeric_limits<double>::infinity();
  rep.min_h = std::numeric_limits<double>::infinity();
  for (const auto& z : sample_manifold(sys, v, opts.samples, opts.seed, opts.speed_half_width)) {
    ++rep.samples;
    double r2 = 0.0;
    for (double zi : z) r2 += zi * zi;
    if (r2 < 1e-14) continue;  // the equilibrium itself
    const double val = v.evaluate(z);
    rep.min_v_ratio = std::min(rep.min_v_ratio, val / r2);
    if (!(val > 0.0)) ++rep.positivity_violations;
    if (val > 1.0) continue;
    ++rep.inside;
    const double d = vdot.evaluate(z);
    rep.max_vdot = std::max(rep.max_vdot, d);
    if (!(d < 0.0)) ++rep.decrease_violations;
    for (const auto& h : sys.h) {
      const double hv = h.evaluate(z);
      rep.min_h = std::min(rep.min_h, hv);
      if (hv < -opts.tol) ++rep.constraint_violations;
    }
  }
  return rep;
}

}  // namespace csr::roa
