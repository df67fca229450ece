#include "kolmex/time_poly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kolmex {

namespace {

void trim(std::vector<int>& v) {
  while (!v.empty() && v.back() == 0) v.pop_back();
}

bool key_less(const TimePolynomial::Monomial& a, const TimePolynomial::Monomial& b) {
  if (a.theta != b.theta) return a.theta < b.theta;
  return a.delta < b.delta;
}

}  // namespace

TimePolynomial TimePolynomial::constant(double c) {
  TimePolynomial p;
  if (c != 0.0) p.terms_.push_back({c, 0, {}});
  return p;
}

TimePolynomial TimePolynomial::theta_power(int k, double c) {
  TimePolynomial p;
  if (c != 0.0) p.terms_.push_back({c, k, {}});
  return p;
}

TimePolynomial TimePolynomial::delta_power(int slot, int k, double c) {
  TimePolynomial p;
  if (c != 0.0) {
    Monomial m{c, 0, std::vector<int>(slot + 1, 0)};
    m.delta[slot] = k;
    trim(m.delta);
    p.terms_.push_back(std::move(m));
  }
  return p;
}

void TimePolynomial::canonicalize() {
  std::sort(terms_.begin(), terms_.end(), key_less);
  std::vector<Monomial> out;
  for (auto& m : terms_) {
    if (!out.empty() && out.back().theta == m.theta && out.back().delta == m.delta)
      out.back().c += m.c;
    else
      out.push_back(std::move(m));
  }
  std::erase_if(out, [](const Monomial& m) { return m.c == 0.0; });
  terms_ = std::move(out);
}

TimePolynomial TimePolynomial::operator+(const TimePolynomial& o) const {
  TimePolynomial r(*this);
  r.terms_.insert(r.terms_.end(), o.terms_.begin(), o.terms_.end());
  r.canonicalize();
  return r;
}

TimePolynomial TimePolynomial::operator*(const TimePolynomial& o) const {
  TimePolynomial r;
  r.terms_.reserve(terms_.size() * o.terms_.size());
  for (const auto& a : terms_) {
    for (const auto& b : o.terms_) {
      Monomial m;
      m.c = a.c * b.c;
      m.theta = a.theta + b.theta;
      m.delta.resize(std::max(a.delta.size(), b.delta.size()), 0);
      for (size_t j = 0; j < a.delta.size(); ++j) m.delta[j] += a.delta[j];
      for (size_t j = 0; j < b.delta.size(); ++j) m.delta[j] += b.delta[j];
      r.terms_.push_back(std::move(m));
    }
  }
  r.canonicalize();
  return r;
}

TimePolynomial TimePolynomial::operator*(double s) const {
  TimePolynomial r(*this);
  for (auto& m : r.terms_) m.c *= s;
  std::erase_if(r.terms_, [](const Monomial& m) { return m.c == 0.0; });
  return r;
}

TimePolynomial TimePolynomial::relabel_delta(int slot) const {
  TimePolynomial r;
  for (const auto& m : terms_) {
    Monomial n;
    n.c = m.c;
    n.theta = m.theta;
    if (!m.delta.empty()) {
      if (m.delta.size() > 1)
        throw std::logic_error("relabel_delta expects a single pending variable");
      n.delta.assign(slot + 1, 0);
      n.delta[slot] = m.delta[0];
      trim(n.delta);
    }
    r.terms_.push_back(std::move(n));
  }
  r.canonicalize();
  return r;
}

int TimePolynomial::top_slot() const {
  int top = -1;
  for (const auto& m : terms_) top = std::max(top, m.top_slot());
  return top;
}

TimePolynomial TimePolynomial::integrate_slot(int j) const {
  TimePolynomial r;
  for (const auto& m : terms_) {
    if (m.top_slot() > j)
      throw std::logic_error("integrate_slot: inner variables still pending");
    const int k = (m.top_slot() == j) ? m.delta[j] : 0;
    // upper limit: Theta^{k+1}
    Monomial up;
    up.c = m.c / (k + 1);
    up.theta = m.theta + k + 1;
    up.delta = m.delta;
    if (static_cast<int>(up.delta.size()) > j) up.delta.resize(j);
    trim(up.delta);
    r.terms_.push_back(std::move(up));
    // lower limit: Delta_{j-1}^{k+1} (absent for the outermost variable)
    if (j > 0) {
      Monomial lo;
      lo.c = -m.c / (k + 1);
      lo.theta = m.theta;
      lo.delta = m.delta;
      lo.delta.resize(j, 0);
      lo.delta[j - 1] += k + 1;
      r.terms_.push_back(std::move(lo));
    }
  }
  r.canonicalize();
  return r;
}

double TimePolynomial::evaluate(double theta, const std::vector<double>& deltas) const {
  double s = 0.0;
  for (const auto& m : terms_) {
    double v = m.c * std::pow(theta, m.theta);
    for (size_t j = 0; j < m.delta.size(); ++j)
      if (m.delta[j] != 0) v *= std::pow(deltas.at(j), m.delta[j]);
    s += v;
  }
  return s;
}

double TimePolynomial::max_abs_coeff() const {
  double v = 0.0;
  for (const auto& m : terms_) v = std::max(v, std::abs(m.c));
  return v;
}

TimePolynomial TimePolynomial::pruned(double tol) const {
  TimePolynomial r(*this);
  std::erase_if(r.terms_, [tol](const Monomial& m) { return std::abs(m.c) < tol; });
  return r;
}

std::string TimePolynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& m : terms_) {
    if (!first) os << " + ";
    first = false;
    os << m.c;
    if (m.theta != 0) os << "*Theta^" << m.theta;
    for (size_t j = 0; j < m.delta.size(); ++j)
      if (m.delta[j] != 0) os << "*Delta" << j + 1 << "^" << m.delta[j];
  }
  return os.str();
}

}  // namespace kolmex
