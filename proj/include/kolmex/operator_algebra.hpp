#pragma once

#include <functional>
#include <map>
#include <string>

#include "kolmex/geometry.hpp"
#include "kolmex/model.hpp"
#include "kolmex/time_poly.hpp"

namespace kolmex {

/// coeff(Theta, Delta_1..Delta_h) * (x - e^{(t-tbar)B} xbar)^delta * D_x^alpha
struct OperatorTerm {
  TimePolynomial coeff;
  MultiIndex delta;
  MultiIndex alpha;
};

/// Finite sum of normal-ordered terms: all increment powers stand to the left
/// of all derivatives; no two terms share the same (delta, alpha) key.
class NormalOrderedOperator {
 public:
  explicit NormalOrderedOperator(int d) : d_(d) {}

  static NormalOrderedOperator identity(int d);
  static NormalOrderedOperator derivative(int d, const MultiIndex& alpha);
  static NormalOrderedOperator increment(int d, int j);  // multiplication by X_j

  int dim() const { return d_; }
  bool is_zero() const { return terms_.empty(); }
  size_t size() const { return terms_.size(); }
  const std::vector<OperatorTerm>& terms() const { return terms_; }

  void add_term(TimePolynomial coeff, MultiIndex delta, MultiIndex alpha);
  NormalOrderedOperator operator+(const NormalOrderedOperator& o) const;
  NormalOrderedOperator scaled(const TimePolynomial& p) const;
  NormalOrderedOperator scaled(double s) const;
  /// Move the pending time variable of every coefficient to the given slot.
  NormalOrderedOperator relabel_delta(int slot) const;
  /// Integrate every coefficient over Delta_j in [Delta_{j-1}, Theta].
  NormalOrderedOperator integrate_slot(int j) const;
  /// Drop coefficient monomials below tol * (largest coefficient magnitude).
  NormalOrderedOperator pruned(double rel_tol = 1e-15) const;

  std::string to_string() const;

 private:
  void canonicalize();
  int d_;
  std::vector<OperatorTerm> terms_;  // sorted by (delta, alpha), unique
};

/// P o Q rewritten in canonical normal order via
/// D^a o X^m = sum_{nu} binom(a,nu) (m)_nu X^{m-nu} D^{a-nu}.
NormalOrderedOperator normal_order_product(const NormalOrderedOperator& P,
                                           const NormalOrderedOperator& Q);

/// Base-point data shared by the operator builders.
struct OperatorContext {
  const BlockStructure* geom = nullptr;
  Eigen::MatrixXd a0;        // A0 at the base point, p0 x p0, spd
  Eigen::VectorXd xbar;      // spatial base point
  bool base_at_final_time = false;  // tbar = T rather than tbar = t

  OperatorContext(const BlockStructure& g, Eigen::MatrixXd a0_, Eigen::VectorXd xbar_,
                  bool at_T = false);
};

/// Matrix with entries polynomial in the pending time variable (slot 0).
using PolyMatrix = std::vector<Eigen::MatrixXd>;  // [k] = coefficient of Delta^k

/// e^{s Delta B} as an exact polynomial matrix (s = +-1).
PolyMatrix matrix_exp_poly(const BlockStructure& geom, double s);
/// Covariance C(Delta) = int_0^Delta e^{uB} A e^{uB*} du, A the p0-embedding of a0.
PolyMatrix covariance_poly(const OperatorContext& ctx);
/// e^{Delta B} M_v(Delta) = C(Delta) e^{-Delta B*}.
PolyMatrix mean_shift_poly(const OperatorContext& ctx);

/// W_i(Delta) = (e^{-Delta B*} grad)_i, i < p0.
NormalOrderedOperator w_operator(const BlockStructure& geom, int i);
/// Component j of M^{(zbar)}(Delta, x) = e^{Delta B}(x + M_v(Delta) grad),
/// written in increment variables: const + (e^{Delta B} X)_j + (C e^{-Delta B*} grad)_j.
NormalOrderedOperator m_operator(const OperatorContext& ctx, int j);
/// Component j of M^{(zbar)} - e^{(s-tbar)B} xbar (the pure increment part).
NormalOrderedOperator increment_operator(const OperatorContext& ctx, int j);

/// Jets of all coefficients at the base point, as consumed by build_G/build_L.
struct ModelJets {
  GroupPoint zbar;
  std::vector<IntrinsicJet> aij;  // p0*p0 row-major, order N
  std::vector<IntrinsicJet> ai;   // p0, order max(N-1, 0)
  int order = 0;
};
ModelJets make_model_jets(const CoefficientModel& model, const GroupPoint& zbar, int N);

/// G_n(t,s,x): Taylor increments of the coefficients with spatial arguments
/// replaced by M components, times W derivative factors; pending variable slot 0.
NormalOrderedOperator build_G(const OperatorContext& ctx, const ModelJets& jets, int n);

/// L_n(t,T,x): ordered-simplex time integrals of products of G factors; pure
/// Theta-polynomial coefficients.
NormalOrderedOperator build_L(const OperatorContext& ctx, const ModelJets& jets, int n);

/// delta = 0 terms of L as a derivative stencil; each entry is one
/// Theta-monomial. Valid once all pending variables are integrated out.
struct StencilEntry {
  int theta_power = 0;
  double coeff = 0.0;
  MultiIndex alpha;
};
std::vector<StencilEntry> evaluate_at_basepoint(const NormalOrderedOperator& L);

/// Numeric reduction at given Theta and increment vector X: alpha -> coefficient.
std::map<MultiIndex, double> reduce_operator(const NormalOrderedOperator& L, double theta,
                                             const Eigen::VectorXd& increment);

/// Apply to a function with known derivatives: sum coeff * X^delta * derivs(alpha).
double apply_operator(const NormalOrderedOperator& P, double theta,
                      const std::vector<double>& deltas, const Eigen::VectorXd& increment,
                      const std::function<double(const MultiIndex&)>& derivs);

}  // namespace kolmex
