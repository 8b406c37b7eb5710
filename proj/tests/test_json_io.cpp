#include "csr/json_io.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace csr;
using namespace csr::json_io;
using poly::Monomial;
using poly::Polynomial;

namespace {

roa::LyapunovCertificate sample_certificate() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  roa::LyapunovCertificate c;
  c.nvars = 3;
  c.v = Polynomial(3);
  c.p_final = poly::sum_of_squares_of_variables(3);
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      std::vector<int> e(3, 0);
      ++e[static_cast<std::size_t>(i)];
      ++e[static_cast<std::size_t>(j)];
      c.v.add_term(Monomial(e), u(rng) + (i == j ? 3.0 : 0.0));
    }
  }
  c.v.add_term(Monomial({0, 0, 1}), 0.1 / 3.0);
  c.beta_final = 0.123456789012345678;
  c.beta_history = {{0.1, 0.2, 0.25}, {0.3}};
  c.multipliers["s6"] = Polynomial::constant(3, 1e-9);
  c.multipliers["lambda2"] = c.v * 0.5;
  c.profile.lambda3 = 4;
  c.options.epsilon = 2e-6;
  c.options.backoff = 0.3;
  c.outer_iterations = 2;
  c.fixpoint_reached = true;
  c.verification.push_back({"positivity", sos::Verdict::Sos, 1e-12, 3e-4});
  c.verification.push_back({"decrease", sos::Verdict::NotSos, 2e-3, -1e-2});
  return c;
}

}  // namespace

TEST_CASE("polynomial round trip is exact", "[json_io]") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  Polynomial p(2);
  for (int a = 0; a <= 3; ++a)
    for (int b = 0; a + b <= 3; ++b) p.add_term(Monomial({a, b}), nd(rng) * 1e3);
  const Polynomial q = polynomial_from_json(polynomial_to_json(p));
  CHECK(q == p);
  CHECK(q.max_coefficient_distance(p) == 0.0);
}

TEST_CASE("certificate round trip", "[json_io]") {
  const auto c = sample_certificate();
  const std::string text = certificate_to_json(c);
  const auto d = certificate_from_json(text);
  CHECK(d.nvars == 3);
  CHECK(d.v == c.v);
  CHECK(d.p_final == c.p_final);
  CHECK(d.beta_final == c.beta_final);
  CHECK(d.beta_history == c.beta_history);
  REQUIRE(d.multipliers.size() == 2);
  CHECK(d.multipliers.at("lambda2") == c.multipliers.at("lambda2"));
  CHECK(d.profile.lambda3 == 4);
  CHECK(d.options.epsilon == 2e-6);
  CHECK(d.options.backoff == 0.3);
  CHECK(d.fixpoint_reached);
  REQUIRE(d.verification.size() == 2);
  CHECK(d.verification[1].verdict == sos::Verdict::NotSos);
  CHECK_FALSE(d.verified());
  CHECK(certificate_to_json(d) == text);
}

TEST_CASE("serialization is byte-deterministic", "[json_io]") {
  const auto c = sample_certificate();
  CHECK(certificate_to_json(c) == certificate_to_json(c));
  const std::vector<std::string> labels{"a", "b", "c"};
  const std::string t = certificate_to_json(c, labels);
  CHECK(t.find("\"text\"") != std::string::npos);
  CHECK(t.find("a^2") != std::string::npos);
  // keys come out sorted
  CHECK(t.find("\"V\"") < t.find("\"beta_final\""));
  CHECK(t.find("\"beta_final\"") < t.find("\"format\""));
}

TEST_CASE("malformed input raises FormatError", "[json_io]") {
  const std::string good = certificate_to_json(sample_certificate());
  CHECK_THROWS_AS(certificate_from_json("{"), FormatError);
  CHECK_THROWS_AS(certificate_from_json("[]"), FormatError);
  CHECK_THROWS_AS(certificate_from_json("{\"format\": \"other\"}"), FormatError);
  std::string no_v = good;
  no_v.replace(no_v.find("\"V\""), 3, "\"W\"");
  CHECK_THROWS_AS(certificate_from_json(no_v), FormatError);
  CHECK_THROWS_AS(polynomial_from_json("{\"nvars\": 2, \"terms\": [[1, 0]]}"), FormatError);
  CHECK_THROWS_AS(polynomial_from_json("{\"nvars\": 1, \"terms\": [[-1, 2.0]]}"), FormatError);
  CHECK_THROWS_AS(polynomial_from_json("{\"nvars\": 1, \"terms\": [[1, \"x\"]]}"), FormatError);
  CHECK_THROWS_AS(load_certificate("/nonexistent/cert.json"), FormatError);
}
