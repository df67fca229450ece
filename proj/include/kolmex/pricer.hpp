#pragma once

#include <optional>

#include "kolmex/gaussian_kernel.hpp"
#include "kolmex/model.hpp"
#include "kolmex/operator_algebra.hpp"

namespace kolmex {

/// Per-order expansion values at one state, plus diagnostics.
struct ExpansionResult {
  std::vector<double> orders;      // u_0 .. u_N
  std::vector<double> cumulative;  // U_0 .. U_N, U_n = U_{n-1} + u_n
  std::map<MultiIndex, double> greeks;
  std::vector<std::size_t> stencil_sizes;  // terms in each L_n stencil
  bool quadrature_converged = true;
  double payoff_exponent = 0.0;  // declared intrinsic Hoelder exponent k
  double error_order = 0.0;      // predicted exponent (N + k + 1) / 2

  double value() const { return cumulative.back(); }
};

/// Predicted short-time convergence exponent (N + k + 1) / 2.
double error_order_estimate(double payoff_exponent, int N);

/// N-th order expansion U_N = u_0 + sum_n L_n u_0 with all operators frozen at
/// the base point zbar = (t, x) (or (T, x) when base_at_final_time). The object
/// retains the operators, so frozen-base evaluations away from x and arbitrary
/// derivative queries stay cheap.
class ExpansionPricer {
 public:
  static constexpr int kMaxOrder = 4;

  ExpansionPricer(const CoefficientModel& model, PayoffSpec payoff, double t,
                  double T, Eigen::VectorXd x, int N,
                  bool base_at_final_time = false, int quad_points = 0);

  int order() const { return N_; }
  double theta() const { return theta_; }
  const Eigen::VectorXd& base_state() const { return xbar_; }
  const LeadingTerm& leading() const { return *leading_; }
  const NormalOrderedOperator& correction(int n) const { return ops_.at(n - 1); }

  /// u_n(t, x) at the base point, n = 0 .. N.
  double order_value(int n) const;
  /// Result record at the base point (no Greeks; request them separately).
  ExpansionResult result() const;

  /// D^alpha U_N with the base point frozen (the expansion's own Greeks).
  double greek(const MultiIndex& alpha) const;
  double delta() const { return greek(MultiIndex::unit(dim(), 0)); }
  double gamma() const { return greek(make_gamma_index()); }
  /// |alpha|_B > N is outside the guaranteed-order regime (still computed).
  bool greek_guaranteed(const MultiIndex& alpha) const;

  /// U_N^{(zbar)}(t, xe) for xe near the base state, operators frozen.
  double value_at(const Eigen::VectorXd& xe) const;

 private:
  int dim() const { return model_->geom().dim(); }
  /// x - e^{(t - tbar)B} x at the evaluation state; zero unless tbar = T.
  Eigen::VectorXd base_increment() const;
  MultiIndex make_gamma_index() const {
    MultiIndex m(dim());
    m[0] = 2;
    return m;
  }

  const CoefficientModel* model_;
  PayoffSpec payoff_;
  double t_, T_, theta_;
  Eigen::VectorXd xbar_;
  int N_;
  bool base_at_final_time_;
  std::vector<NormalOrderedOperator> ops_;            // L_1 .. L_N
  std::vector<std::vector<StencilEntry>> stencils_;   // evaluated at the base point
  std::optional<LeadingTerm> leading_;
};

/// One-call pricing: builds the pricer at zbar = (t, x) and returns the record
/// with the given Greeks attached.
ExpansionResult price(const CoefficientModel& model, const PayoffSpec& payoff,
                      double t, double T, const Eigen::VectorXd& x, int N,
                      const std::vector<MultiIndex>& greek_alphas = {},
                      bool base_at_final_time = false, int quad_points = 0);

}  // namespace kolmex
