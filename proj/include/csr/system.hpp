#pragma once

// Polynomial dynamics zdot = f(z) restricted to {g(z) = 0}, with
// inequality constraints h(z) >= 0. The origin is the equilibrium.

#include "csr/poly.hpp"

#include <string>
#include <utility>
#include <vector>

namespace csr {

struct ConstrainedPolySystem {
  int nvars = 0;
  std::vector<poly::Polynomial> f;
  std::vector<poly::Polynomial> g;
  std::vector<poly::Polynomial> h;
  std::vector<std::string> labels;

  // Coordinates (sin, 1 - cos) of one angle each; they parameterize the
  // manifold {g = 0}. Remaining coordinates are unconstrained.
  std::vector<std::pair<int, int>> angle_pairs;

  /// Throws std::invalid_argument on inconsistent sizes, or when f(0) or
  /// g(0) exceeds `tol` in magnitude.
  void validate(double tol = 1e-10) const;

  /// Coordinates not covered by angle_pairs.
  std::vector<int> free_coordinates() const;

  /// Same system with h dropped.
  ConstrainedPolySystem without_inequalities() const;
};

}  // namespace csr
