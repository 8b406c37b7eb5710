#pragma once

// Lyapunov region-of-attraction estimation for constrained polynomial
// systems: a local estimate, the expanding-interior alternation and the
// outer p <- V loop. The estimate is always the sublevel set {V <= 1}.

#include "csr/poly.hpp"
#include "csr/sdp.hpp"
#include "csr/sos.hpp"
#include "csr/system.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace csr::roa {

using poly::Polynomial;

class RoaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Multiplier degrees. The first block applies to the expanding-interior
/// constraints, the local_* block to the local estimate.
struct DegreeProfile {
  int v = 2;
  int s2 = 0;
  int s6 = 0;
  int s8 = 2;
  int s9 = 0;
  int lambda1 = 0;
  int lambda2 = 0;
  int lambda3 = 2;
  int s_h = 0;
  int lambda_h = 0;

  int local_s2 = 0;
  int local_s6 = 2;
  int local_s9 = 0;
  int local_lambda1 = 0;
  int local_lambda2 = 2;
  int local_lambda3 = 0;

  /// SOS multiplier degrees even, everything non-negative, V degree >= 2.
  void validate() const;
};

struct Options {
  double epsilon = 1e-6;      // l(z) = epsilon z^T z
  double beta_tol = 1e-3;     // line-search resolution (absolute)
  int max_solves = 50;        // SDP solves per line search
  double initial_probe = 1.0; // first beta tried when starting from 0
  double backoff = 0.2;       // step iii keeps V from beta_ii + (1 - backoff)(beta* - beta_ii)
  double inner_tol = 1e-3;    // |delta beta| stopping rule
  int max_inner = 20;
  double fixpoint_tol = 1e-4; // max-norm change of V between outer loops
  int max_outer = 10;
  bool verify = true;         // re-check final constraints with check_sos
  sdp::Settings sdp;
  std::ostream* log = nullptr;
};

struct LocalResult {
  Polynomial v;           // normalized so that {V <= 1} is certified
  double beta = 0.0;      // largest beta for p = z^T z
  double level = 0.0;     // level of the raw V before normalization
  std::map<std::string, Polynomial> multipliers;
  int solves = 0;
};

struct ExpandResult {
  Polynomial v;
  double beta = 0.0;
  std::vector<double> beta_history;
  std::map<std::string, Polynomial> multipliers;
  int iterations = 0;
  int solves = 0;
};

struct VerificationEntry {
  std::string name;
  sos::Verdict verdict = sos::Verdict::SolverFailure;
  double gram_mismatch = 0.0;
  double min_eigenvalue = 0.0;
};

struct LyapunovCertificate {
  int nvars = 0;
  Polynomial v;
  Polynomial p_final;
  double beta_final = 0.0;
  std::vector<std::vector<double>> beta_history;  // one list per outer iteration
  std::map<std::string, Polynomial> multipliers;
  DegreeProfile profile;
  Options options;
  int outer_iterations = 0;
  bool fixpoint_reached = false;
  std::vector<VerificationEntry> verification;

  bool verified() const;
};

/// Local estimate with p = z^T z, followed by a level bisection that makes
/// {V <= 1} satisfy the decrease and inequality conditions.
LocalResult local_lyapunov(const ConstrainedPolySystem& sys, const DegreeProfile& prof, const Options& opts);

/// Bilinear alternation for fixed p, starting from (v0, beta0).
ExpandResult expanding_interior(const ConstrainedPolySystem& sys, const Polynomial& p, double beta0,
                                const Polynomial& v0, const DegreeProfile& prof, const Options& opts);

LyapunovCertificate estimate_csr(const ConstrainedPolySystem& sys, const DegreeProfile& prof, const Options& opts);

/// Assembled constraint polynomials for a certificate, keyed by name.
std::map<std::string, Polynomial> assemble_constraints(const ConstrainedPolySystem& sys,
                                                       const LyapunovCertificate& cert);

/// check_sos on every assembled constraint and SOS multiplier.
std::vector<VerificationEntry> verify_certificate(const ConstrainedPolySystem& sys,
                                                  const LyapunovCertificate& cert,
                                                  const sdp::Settings& settings = {});

struct CheckOptions {
  int samples = 10000;
  std::uint64_t seed = 0;
  double speed_half_width = 5.0;  // box for free coordinates
  double tol = 1e-7;              // slack on the sign conditions
};

struct CheckReport {
  int samples = 0;
  int inside = 0;                 // samples with V <= 1
  int positivity_violations = 0;
  int decrease_violations = 0;
  int constraint_violations = 0;
  double min_v_ratio = 0.0;       // min V / |z|^2 over samples
  double max_vdot = 0.0;          // max Vdot over samples inside
  double min_h = 0.0;             // min h_j over samples inside

  int violations() const { return positivity_violations + decrease_violations + constraint_violations; }
};

/// Samples points on {g = 0}: angles uniform on the circle, free
/// coordinates in a box, half of the draws pulled inside {V <= 1}.
std::vector<std::vector<double>> sample_manifold(const ConstrainedPolySystem& sys, const Polynomial& v,
                                                 int count, std::uint64_t seed, double speed_half_width);

CheckReport certificate_check(const ConstrainedPolySystem& sys, const Polynomial& v, const CheckOptions& opts = {});

}  // namespace csr::roa
