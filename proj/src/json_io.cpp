#include "csr/json_io.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace csr::json_io {

using nlohmann::json;
using poly::Monomial;
using poly::Polynomial;

namespace {

json poly_json(const Polynomial& p, std::span<const std::string> labels) {
  json terms = json::array();
  for (const auto& [m, c] : p.terms()) {
    json t = json::array();
    for (int e : m.exponents()) t.push_back(e);
    t.push_back(c);
    terms.push_back(std::move(t));
  }
  return json{{"nvars", p.nvars()}, {"terms", std::move(terms)}, {"text", poly::to_string(p, labels, 17)}};
}

Polynomial poly_from(const json& j) {
  const int n = j.at("nvars").get<int>();
  if (n < 0) throw FormatError("polynomial: negative nvars");
  Polynomial p(n);
  for (const auto& t : j.at("terms")) {
    if (!t.is_array() || static_cast<int>(t.size()) != n + 1) throw FormatError("polynomial: term has wrong length");
    std::vector<int> e;
    for (int i = 0; i < n; ++i) {
      const int v = t[static_cast<std::size_t>(i)].get<int>();
      if (v < 0) throw FormatError("polynomial: negative exponent");
      e.push_back(v);
    }
    p.add_term(Monomial(std::move(e)), t[static_cast<std::size_t>(n)].get<double>());
  }
  return p;
}

json profile_json(const roa::DegreeProfile& d) {
  return json{{"v", d.v},
              {"s2", d.s2},
              {"s6", d.s6},
              {"s8", d.s8},
              {"s9", d.s9},
              {"lambda1", d.lambda1},
              {"lambda2", d.lambda2},
              {"lambda3", d.lambda3},
              {"s_h", d.s_h},
              {"lambda_h", d.lambda_h},
              {"local_s2", d.local_s2},
              {"local_s6", d.local_s6},
              {"local_s9", d.local_s9},
              {"local_lambda1", d.local_lambda1},
              {"local_lambda2", d.local_lambda2},
              {"local_lambda3", d.local_lambda3}};
}

roa::DegreeProfile profile_from(const json& j) {
  roa::DegreeProfile d;
  d.v = j.at("v");
  d.s2 = j.at("s2");
  d.s6 = j.at("s6");
  d.s8 = j.at("s8");
  d.s9 = j.at("s9");
  d.lambda1 = j.at("lambda1");
  d.lambda2 = j.at("lambda2");
  d.lambda3 = j.at("lambda3");
  d.s_h = j.at("s_h");
  d.lambda_h = j.at("lambda_h");
  d.local_s2 = j.at("local_s2");
  d.local_s6 = j.at("local_s6");
  d.local_s9 = j.at("local_s9");
  d.local_lambda1 = j.at("local_lambda1");
  d.local_lambda2 = j.at("local_lambda2");
  d.local_lambda3 = j.at("local_lambda3");
  return d;
}

json options_json(const roa::Options& o) {
  return json{{"epsilon", o.epsilon},
              {"beta_tol", o.beta_tol},
              {"max_solves", o.max_solves},
              {"initial_probe", o.initial_probe},
              {"backoff", o.backoff},
              {"inner_tol", o.inner_tol},
              {"max_inner", o.max_inner},
              {"fixpoint_tol", o.fixpoint_tol},
              {"max_outer", o.max_outer},
              {"sdp",
               {{"feas_tol", o.sdp.feas_tol},
                {"gap_tol", o.sdp.gap_tol},
                {"fallback_tol", o.sdp.fallback_tol},
                {"eig_tol", o.sdp.eig_tol},
                {"max_iterations", o.sdp.max_iterations},
                {"step_fraction", o.sdp.step_fraction}}}};
}

roa::Options options_from(const json& j) {
  roa::Options o;
  o.epsilon = j.at("epsilon");
  o.beta_tol = j.at("beta_tol");
  o.max_solves = j.at("max_solves");
  o.initial_probe = j.at("initial_probe");
  o.backoff = j.at("backoff");
  o.inner_tol = j.at("inner_tol");
  o.max_inner = j.at("max_inner");
  o.fixpoint_tol = j.at("fixpoint_tol");
  o.max_outer = j.at("max_outer");
  const json& s = j.at("sdp");
  o.sdp.feas_tol = s.at("feas_tol");
  o.sdp.gap_tol = s.at("gap_tol");
  o.sdp.fallback_tol = s.at("fallback_tol");
  o.sdp.eig_tol = s.at("eig_tol");
  o.sdp.max_iterations = s.at("max_iterations");
  o.sdp.step_fraction = s.at("step_fraction");
  return o;
}

template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string polynomial_to_json(const Polynomial& p, std::span<const std::string> labels) {
  return poly_json(p, labels).dump(2);
}

Polynomial polynomial_from_json(const std::string& text) {
  return guarded("polynomial", [&] { return poly_from(json::parse(text)); });
}

std::string certificate_to_json(const roa::LyapunovCertificate& cert, std::span<const std::string> labels) {
  json j;
  j["format"] = "csr-certificate-1";
  j["nvars"] = cert.nvars;
  j["level"] = 1.0;
  j["V"] = poly_json(cert.v, labels);
  j["p_final"] = poly_json(cert.p_final, labels);
  j["beta_final"] = cert.beta_final;
  j["beta_history"] = cert.beta_history;
  json mult = json::object();
  for (const auto& [name, p] : cert.multipliers) mult[name] = poly_json(p, labels);
  j["multipliers"] = std::move(mult);
  j["degree_profile"] = profile_json(cert.profile);
  j["options"] = options_json(cert.options);
  j["outer_iterations"] = cert.outer_iterations;
  j["fixpoint_reached"] = cert.fixpoint_reached;
  json ver = json::array();
  for (const auto& e : cert.verification) {
    ver.push_back({{"name", e.name},
                   {"verdict", sos::to_string(e.verdict)},
                   {"gram_mismatch", e.gram_mismatch},
                   {"min_eigenvalue", e.min_eigenvalue}});
  }
  j["verification"] = std::move(ver);
  return j.dump(2) + "\n";
}

roa::LyapunovCertificate certificate_from_json(const std::string& text) {
  return guarded("certificate", [&] {
    const json j = json::parse(text);
    if (j.value("format", "") != "csr-certificate-1") throw FormatError("certificate: unknown format tag");
    roa::LyapunovCertificate c;
    c.nvars = j.at("nvars");
    c.v = poly_from(j.at("V"));
    c.p_final = poly_from(j.at("p_final"));
    if (c.v.nvars() != c.nvars || c.p_final.nvars() != c.nvars) throw FormatError("certificate: variable count mismatch");
    c.beta_final = j.at("beta_final");
    c.beta_history = j.at("beta_history").get<std::vector<std::vector<double>>>();
    for (const auto& [name, p] : j.at("multipliers").items()) c.multipliers[name] = poly_from(p);
    c.profile = profile_from(j.at("degree_profile"));
    c.options = options_from(j.at("options"));
    c.outer_iterations = j.at("outer_iterations");
    c.fixpoint_reached = j.at("fixpoint_reached");
    for (const auto& e : j.at("verification")) {
      roa::VerificationEntry v;
      v.name = e.at("name");
      const std::string verdict = e.at("verdict");
      v.verdict = verdict == sos::to_string(sos::Verdict::Sos)      ? sos::Verdict::Sos
                  : verdict == sos::to_string(sos::Verdict::NotSos) ? sos::Verdict::NotSos
                                                                    : sos::Verdict::SolverFailure;
      v.gram_mismatch = e.at("gram_mismatch");
      v.min_eigenvalue = e.at("min_eigenvalue");
      c.verification.push_back(v);
    }
    return c;
  });
}

void save_certificate(const std::string& path, const roa::LyapunovCertificate& cert,
                      std::span<const std::string> labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << certificate_to_json(cert, labels);
}

roa::LyapunovCertificate load_certificate(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return certificate_from_json(ss.str());
}

}  // namespace csr::json_io
