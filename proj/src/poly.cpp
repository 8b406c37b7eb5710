#include "csr/poly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace csr::poly {

namespace {

void require_same_nvars(int a, int b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": variable count mismatch (" +
                         std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

double ipow(double x, int n) {
  double r = 1.0;
  while (n > 0) {
    if (n & 1) r *= x;
    x *= x;
    n >>= 1;
  }
  return r;
}

}  // namespace

Monomial::Monomial(std::vector<int> exps) : exps_(std::move(exps)) {
  for (int e : exps_) {
    if (e < 0) throw std::invalid_argument("Monomial: negative exponent");
  }
  degree_ = std::accumulate(exps_.begin(), exps_.end(), 0);
}

Monomial Monomial::variable(int nvars, int index, int power) {
  if (index < 0 || index >= nvars) {
    throw DimensionError("Monomial::variable: index out of range");
  }
  std::vector<int> e(static_cast<std::size_t>(nvars), 0);
  e[static_cast<std::size_t>(index)] = power;
  return Monomial(std::move(e));
}

Monomial Monomial::operator*(const Monomial& other) const {
  require_same_nvars(nvars(), other.nvars(), "Monomial::operator*");
  Monomial r = *this;
  for (std::size_t i = 0; i < exps_.size(); ++i) r.exps_[i] += other.exps_[i];
  r.degree_ = degree_ + other.degree_;
  return r;
}

std::strong_ordering Monomial::operator<=>(const Monomial& other) const {
  if (auto c = degree_ <=> other.degree_; c != 0) return c;
  // Higher power on an earlier variable sorts first.
  for (std::size_t i = 0; i < exps_.size() && i < other.exps_.size(); ++i) {
    if (exps_[i] != other.exps_[i]) return other.exps_[i] <=> exps_[i];
  }
  return exps_.size() <=> other.exps_.size();
}

double Monomial::evaluate(std::span<const double> point) const {
  double r = 1.0;
  for (std::size_t i = 0; i < exps_.size(); ++i) {
    if (exps_[i] != 0) r *= ipow(point[i], exps_[i]);
  }
  return r;
}

Polynomial Polynomial::constant(int nvars, double value) {
  Polynomial p(nvars);
  p.add_term(Monomial(nvars), value);
  return p;
}

Polynomial Polynomial::variable(int nvars, int index) {
  return monomial(Monomial::variable(nvars, index));
}

Polynomial Polynomial::monomial(const Monomial& m, double coef) {
  Polynomial p(m.nvars());
  p.add_term(m, coef);
  return p;
}

int Polynomial::degree() const {
  return terms_.empty() ? 0 : terms_.rbegin()->first.degree();
}

int Polynomial::min_degree() const {
  return terms_.empty() ? 0 : terms_.begin()->first.degree();
}

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(const Monomial& m, double coef) {
  require_same_nvars(nvars_, m.nvars(), "Polynomial::add_term");
  auto [it, inserted] = terms_.try_emplace(m, coef);
  if (!inserted) it->second += coef;
  if (std::abs(it->second) < kDropTolerance) terms_.erase(it);
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  require_same_nvars(nvars_, o.nvars_, "Polynomial add");
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
  require_same_nvars(nvars_, o.nvars_, "Polynomial sub");
  for (const auto& [m, c] : o.terms_) add_term(m, -c);
  return *this;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r = *this;
  r += o;
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
  Polynomial r = *this;
  r -= o;
  return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  require_same_nvars(nvars_, o.nvars_, "Polynomial mul");
  // Accumulate without per-term pruning, then canonicalize once so that
  // intermediate cancellations do not depend on summation order.
  std::map<Monomial, double> acc;
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : o.terms_) acc[ma * mb] += ca * cb;
  }
  Polynomial r(nvars_);
  for (auto& [m, c] : acc) {
    if (std::abs(c) >= kDropTolerance) r.terms_.emplace_hint(r.terms_.end(), m, c);
  }
  return r;
}

Polynomial Polynomial::operator-() const { return *this * -1.0; }

Polynomial Polynomial::operator*(double s) const {
  Polynomial r(nvars_);
  for (const auto& [m, c] : terms_) {
    const double v = c * s;
    if (std::abs(v) >= kDropTolerance) r.terms_.emplace_hint(r.terms_.end(), m, v);
  }
  return r;
}

double Polynomial::evaluate(std::span<const double> point) const {
  if (static_cast<int>(point.size()) != nvars_) {
    throw DimensionError("Polynomial::evaluate: point has " +
                         std::to_string(point.size()) + " entries, expected " +
                         std::to_string(nvars_));
  }
  double s = 0.0;
  for (const auto& [m, c] : terms_) s += c * m.evaluate(point);
  return s;
}

double Polynomial::max_coefficient_distance(const Polynomial& o) const {
  require_same_nvars(nvars_, o.nvars_, "max_coefficient_distance");
  double d = 0.0;
  for (const auto& [m, c] : terms_) d = std::max(d, std::abs(c - o.coefficient(m)));
  for (const auto& [m, c] : o.terms_) {
    if (!terms_.contains(m)) d = std::max(d, std::abs(c));
  }
  return d;
}

double Polynomial::max_abs_coefficient() const {
  double d = 0.0;
  for (const auto& [m, c] : terms_) d = std::max(d, std::abs(c));
  return d;
}

Polynomial Polynomial::pruned(double tol) const {
  Polynomial r(nvars_);
  for (const auto& [m, c] : terms_) {
    if (std::abs(c) > tol) r.terms_.emplace_hint(r.terms_.end(), m, c);
  }
  return r;
}

Polynomial add(const Polynomial& a, const Polynomial& b) { return a + b; }
Polynomial sub(const Polynomial& a, const Polynomial& b) { return a - b; }
Polynomial mul(const Polynomial& a, const Polynomial& b) { return a * b; }

Polynomial differentiate(const Polynomial& p, int var) {
  if (var < 0 || var >= p.nvars()) {
    throw DimensionError("differentiate: variable index " + std::to_string(var) +
                         " out of range");
  }
  Polynomial r(p.nvars());
  for (const auto& [m, c] : p.terms()) {
    const int e = m[var];
    if (e == 0) continue;
    std::vector<int> exps = m.exponents();
    exps[static_cast<std::size_t>(var)] -= 1;
    r.add_term(Monomial(std::move(exps)), c * e);
  }
  return r;
}

Polynomial lie_derivative(const Polynomial& v, std::span<const Polynomial> f) {
  if (static_cast<int>(f.size()) != v.nvars()) {
    throw DimensionError("lie_derivative: field has " + std::to_string(f.size()) +
                         " components for " + std::to_string(v.nvars()) +
                         " variables");
  }
  Polynomial r(v.nvars());
  for (int i = 0; i < v.nvars(); ++i) {
    require_same_nvars(v.nvars(), f[static_cast<std::size_t>(i)].nvars(),
                       "lie_derivative");
    const Polynomial dv = differentiate(v, i);
    if (!dv.is_zero()) r += dv * f[static_cast<std::size_t>(i)];
  }
  return r;
}

Polynomial sum_of_squares_of_variables(int nvars) {
  Polynomial r(nvars);
  for (int i = 0; i < nvars; ++i) r.add_term(Monomial::variable(nvars, i, 2), 1.0);
  return r;
}

std::vector<double> evaluate(std::span<const Polynomial> f,
                             std::span<const double> point) {
  std::vector<double> out;
  out.reserve(f.size());
  for (const auto& fi : f) out.push_back(fi.evaluate(point));
  return out;
}

std::vector<std::string> default_labels(int nvars) {
  std::vector<std::string> labels;
  for (int i = 0; i < nvars; ++i) labels.push_back("z" + std::to_string(i + 1));
  return labels;
}

std::string to_string(const Polynomial& p, std::span<const std::string> labels,
                      int precision) {
  if (p.is_zero()) return "0";
  std::vector<std::string> fallback;
  if (labels.empty()) {
    fallback = default_labels(p.nvars());
    labels = fallback;
  }
  std::string out;
  bool first = true;
  char buf[64];
  for (const auto& [m, c] : p.terms()) {
    const double mag = std::abs(c);
    if (first) {
      if (c < 0) out += "-";
    } else {
      out += c < 0 ? " - " : " + ";
    }
    first = false;
    std::string factors;
    for (int i = 0; i < m.nvars(); ++i) {
      const int e = m[i];
      if (e == 0) continue;
      if (!factors.empty()) factors += "*";
      factors += labels[static_cast<std::size_t>(i)];
      if (e > 1) factors += "^" + std::to_string(e);
    }
    std::snprintf(buf, sizeof(buf), "%.*g", precision, mag);
    if (factors.empty()) {
      out += buf;
    } else if (mag == 1.0) {
      out += factors;
    } else {
      out += std::string(buf) + "*" + factors;
    }
  }
  return out;
}

}  // namespace csr::poly
