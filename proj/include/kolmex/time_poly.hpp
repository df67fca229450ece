#pragma once

#include <string>
#include <vector>

namespace kolmex {

/// Polynomial in Theta = T - t and pending time variables Delta_j = s_j - t.
/// Delta slots appear while multi-factor operator products are being built and
/// disappear once the ordered simplex integrals are carried out.
class TimePolynomial {
 public:
  struct Monomial {
    double c = 0.0;
    int theta = 0;
    std::vector<int> delta;  // delta[j] = exponent of Delta_j, trailing zeros trimmed

    int top_slot() const { return static_cast<int>(delta.size()) - 1; }
  };

  TimePolynomial() = default;

  static TimePolynomial zero() { return {}; }
  static TimePolynomial constant(double c);
  static TimePolynomial theta_power(int k, double c = 1.0);
  static TimePolynomial delta_power(int slot, int k, double c = 1.0);

  bool is_zero() const { return terms_.empty(); }
  const std::vector<Monomial>& terms() const { return terms_; }

  TimePolynomial operator+(const TimePolynomial& o) const;
  TimePolynomial operator*(const TimePolynomial& o) const;
  TimePolynomial operator*(double s) const;

  /// Relabel the single pending variable from slot 0 to `slot`.
  TimePolynomial relabel_delta(int slot) const;

  /// Integrate over Delta_j in [Delta_{j-1}, Theta] ([0, Theta] for j = 0):
  /// int Delta_j^k dDelta_j = (Theta^{k+1} - Delta_{j-1}^{k+1}) / (k+1).
  /// No monomial may involve a slot greater than j.
  TimePolynomial integrate_slot(int j) const;

  /// Highest pending slot across all monomials, -1 if none.
  int top_slot() const;

  double evaluate(double theta, const std::vector<double>& deltas = {}) const;

  /// Largest |c| among monomials.
  double max_abs_coeff() const;
  /// Drop monomials with |c| < tol.
  TimePolynomial pruned(double tol) const;

  std::string to_string() const;

 private:
  void push(Monomial m);     // accumulate, keeps canonical form
  void canonicalize();

  std::vector<Monomial> terms_;  // sorted by (theta, delta), unique
};

}  // namespace kolmex
