#include "kolmex/pricer.hpp"

#include <cmath>
#include <stdexcept>

namespace kolmex {

double error_order_estimate(double payoff_exponent, int N) {
  return (N + payoff_exponent + 1.0) / 2.0;
}

ExpansionPricer::ExpansionPricer(const CoefficientModel& model, PayoffSpec payoff,
                                 double t, double T, Eigen::VectorXd x, int N,
                                 bool base_at_final_time, int quad_points)
    : model_(&model),
      payoff_(std::move(payoff)),
      t_(t),
      T_(T),
      theta_(T - t),
      xbar_(std::move(x)),
      N_(N),
      base_at_final_time_(base_at_final_time) {
  if (!(T > t)) throw std::invalid_argument("ExpansionPricer: need T > t");
  if (N < 0 || N > kMaxOrder)
    throw std::invalid_argument("ExpansionPricer: order must be in [0, 4]");
  if (xbar_.size() != model.geom().dim())
    throw std::invalid_argument("ExpansionPricer: state dimension mismatch");

  const GroupPoint zbar{base_at_final_time_ ? T_ : t_, xbar_};
  const Eigen::MatrixXd a0 = model.a0_at(zbar);
  if (N_ > 0) {
    OperatorContext ctx(model.geom(), a0, xbar_, base_at_final_time_);
    const ModelJets jets = make_model_jets(model, zbar, N_);
    for (int n = 1; n <= N_; ++n) {
      ops_.push_back(build_L(ctx, jets, n));
      stencils_.push_back(evaluate_at_basepoint(ops_.back()));
    }
  }
  leading_.emplace(model.geom(), a0, payoff_, t_, T_, quad_points);
}

double ExpansionPricer::order_value(int n) const {
  if (n < 0 || n > N_) throw std::out_of_range("order_value: n outside [0, N]");
  if (n == 0) return leading_->value(xbar_);
  // with the base point at the final time the increment of the evaluation
  // state itself, x - e^{(t-T)B} x, does not vanish
  if (base_at_final_time_) {
    double sum = 0.0;
    for (const auto& [alpha, c] : reduce_operator(ops_[n - 1], theta_, base_increment()))
      sum += c * leading_->derivative(alpha, xbar_);
    return sum;
  }
  double sum = 0.0;
  for (const auto& e : stencils_[n - 1])
    sum += e.coeff * std::pow(theta_, e.theta_power) *
           leading_->derivative(e.alpha, xbar_);
  return sum;
}

Eigen::VectorXd ExpansionPricer::base_increment() const {
  if (!base_at_final_time_) return Eigen::VectorXd::Zero(dim());
  return xbar_ - model_->geom().matrix_exp(-theta_) * xbar_;
}

ExpansionResult ExpansionPricer::result() const {
  ExpansionResult r;
  r.payoff_exponent = payoff_.holder_exponent;
  r.error_order = error_order_estimate(r.payoff_exponent, N_);
  double cum = 0.0;
  for (int n = 0; n <= N_; ++n) {
    const double un = order_value(n);
    cum += un;
    r.orders.push_back(un);
    r.cumulative.push_back(cum);
  }
  for (const auto& s : stencils_) r.stencil_sizes.push_back(s.size());
  r.quadrature_converged = leading_->quadrature_converged();
  return r;
}

double ExpansionPricer::greek(const MultiIndex& alpha) const {
  double sum = leading_->derivative(alpha, xbar_);
  const NormalOrderedOperator D =
      NormalOrderedOperator::derivative(dim(), alpha);
  const Eigen::VectorXd inc = base_increment();
  for (const auto& L : ops_)
    for (const auto& [beta, c] :
         reduce_operator(normal_order_product(D, L), theta_, inc))
      sum += c * leading_->derivative(beta, xbar_);
  return sum;
}

bool ExpansionPricer::greek_guaranteed(const MultiIndex& alpha) const {
  return alpha.blength(model_->geom().sigma()) <= N_;
}

double ExpansionPricer::value_at(const Eigen::VectorXd& xe) const {
  // increment relative to the frozen base point, transported to time t
  Eigen::VectorXd inc = xe - xbar_;
  if (base_at_final_time_) inc = xe - model_->geom().matrix_exp(-theta_) * xbar_;
  double sum = leading_->value(xe);
  for (const auto& L : ops_)
    for (const auto& [alpha, c] : reduce_operator(L, theta_, inc))
      sum += c * leading_->derivative(alpha, xe);
  return sum;
}

ExpansionResult price(const CoefficientModel& model, const PayoffSpec& payoff,
                      double t, double T, const Eigen::VectorXd& x, int N,
                      const std::vector<MultiIndex>& greek_alphas,
                      bool base_at_final_time, int quad_points) {
  ExpansionPricer pricer(model, payoff, t, T, x, N, base_at_final_time, quad_points);
  ExpansionResult r = pricer.result();
  for (const auto& alpha : greek_alphas) r.greeks[alpha] = pricer.greek(alpha);
  r.quadrature_converged = pricer.leading().quadrature_converged();
  return r;
}

}  // namespace kolmex
