#include "csr/system.hpp"

#include <cmath>
#include <stdexcept>

namespace csr {

void ConstrainedPolySystem::validate(double tol) const {
  if (nvars <= 0) throw std::invalid_argument("system: no variables");
  if (static_cast<int>(f.size()) != nvars) throw std::invalid_argument("system: f has wrong length");
  const std::vector<double> origin(static_cast<std::size_t>(nvars), 0.0);
  auto check = [&](const std::vector<poly::Polynomial>& ps, const char* what, bool vanish) {
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (ps[i].nvars() != nvars) {
        throw std::invalid_argument(std::string("system: ") + what + "[" + std::to_string(i) + "] has wrong variable count");
      }
      if (vanish && std::abs(ps[i].evaluate(origin)) > tol) {
        throw std::invalid_argument(std::string("system: ") + what + "[" + std::to_string(i) + "] does not vanish at the origin");
      }
    }
  };
  check(f, "f", true);
  check(g, "g", true);
  check(h, "h", false);
  for (const auto& [s, c] : angle_pairs) {
    if (s < 0 || s >= nvars || c < 0 || c >= nvars || s == c) throw std::invalid_argument("system: bad angle pair");
  }
}

std::vector<int> ConstrainedPolySystem::free_coordinates() const {
  std::vector<bool> used(static_cast<std::size_t>(nvars), false);
  for (const auto& [s, c] : angle_pairs) {
    used[static_cast<std::size_t>(s)] = true;
    used[static_cast<std::size_t>(c)] = true;
  }
  std::vector<int> out;
  for (int i = 0; i < nvars; ++i) {
    if (!used[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

ConstrainedPolySystem ConstrainedPolySystem::without_inequalities() const {
  ConstrainedPolySystem s = *this;
  s.h.clear();
  return s;
}

}  // namespace csr
