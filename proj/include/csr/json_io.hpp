#pragma once

// JSON export/import of polynomials and Lyapunov certificates. Output is
// deterministic: keys sorted, terms in graded-lex order, doubles printed
// in round-trip form.

#include "csr/poly.hpp"
#include "csr/roa.hpp"

#include <span>
#include <stdexcept>
#include <string>

namespace csr::json_io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// {"nvars": n, "terms": [[e0, .., en-1, coef], ...], "text": "..."}
std::string polynomial_to_json(const poly::Polynomial& p, std::span<const std::string> labels = {});
poly::Polynomial polynomial_from_json(const std::string& text);

std::string certificate_to_json(const roa::LyapunovCertificate& cert, std::span<const std::string> labels = {});
/// Restores v, p_final, betas, multipliers and the degree profile.
/// Throws FormatError on malformed input.
roa::LyapunovCertificate certificate_from_json(const std::string& text);

void save_certificate(const std::string& path, const roa::LyapunovCertificate& cert,
                      std::span<const std::string> labels = {});
roa::LyapunovCertificate load_certificate(const std::string& path);

}  // namespace csr::json_io
