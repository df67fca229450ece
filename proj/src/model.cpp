#include "kolmex/model.hpp"

#include <cmath>
#include <stdexcept>

namespace kolmex {

CoefficientModel::CoefficientModel(const BlockStructure& geom, double bound_M,
                                   double bound_mu)
    : geom_(&geom), M_(bound_M), mu_(bound_mu) {
  a_.resize(static_cast<size_t>(geom.p0()) * geom.p0());
  drift_.resize(geom.p0());
}

void CoefficientModel::set_diffusion(int i, int j, Field f, JetOracle oracle) {
  a_[static_cast<size_t>(i) * geom_->p0() + j] = {std::move(f), std::move(oracle)};
  if (i != j) a_[static_cast<size_t>(j) * geom_->p0() + i] = a_[static_cast<size_t>(i) * geom_->p0() + j];
}

void CoefficientModel::set_drift(int i, Field f, JetOracle oracle) {
  drift_[i] = {std::move(f), std::move(oracle)};
}

double CoefficientModel::diffusion(int i, int j, const GroupPoint& z) const {
  const auto& c = a_[static_cast<size_t>(i) * geom_->p0() + j];
  return c.f ? c.f(z) : 0.0;
}

double CoefficientModel::drift(int i, const GroupPoint& z) const {
  return drift_[i].f ? drift_[i].f(z) : 0.0;
}

bool CoefficientModel::has_drift(int i) const { return static_cast<bool>(drift_[i].f); }

Eigen::MatrixXd CoefficientModel::a0_at(const GroupPoint& z) const {
  const int p0 = geom_->p0();
  Eigen::MatrixXd a0(p0, p0);
  for (int i = 0; i < p0; ++i)
    for (int j = 0; j < p0; ++j) a0(i, j) = diffusion(i, j, z);
  return a0;
}

IntrinsicJet CoefficientModel::jet_of(const Coefficient& c, const GroupPoint& zbar,
                                      int order) const {
  if (!c.f) {
    IntrinsicJet zero(*geom_, zbar, order);
    for (const auto& beta : multi_indices_up_to_blength(*geom_, order))
      for (int k = 0; 2 * k + geom_->blength(beta) <= order; ++k) zero.set(k, beta, 0.0);
    return zero;
  }
  if (c.oracle) {
    IntrinsicJet jet(*geom_, zbar, order);
    for (const auto& beta : multi_indices_up_to_blength(*geom_, order))
      for (int k = 0; 2 * k + geom_->blength(beta) <= order; ++k)
        jet.set(k, beta, c.oracle(k, beta, zbar));
    return jet;
  }
  return finite_difference_jet(c.f, *geom_, zbar, order);
}

IntrinsicJet CoefficientModel::diffusion_jet(int i, int j, const GroupPoint& zbar,
                                             int order) const {
  return jet_of(a_[static_cast<size_t>(i) * geom_->p0() + j], zbar, order);
}

IntrinsicJet CoefficientModel::drift_jet(int i, const GroupPoint& zbar, int order) const {
  return jet_of(drift_[i], zbar, order);
}

void CoefficientModel::validate(const std::vector<GroupPoint>& sample_points) const {
  for (const auto& z : sample_points) {
    const Eigen::MatrixXd a0 = a0_at(z);
    if (!a0.isApprox(a0.transpose(), 1e-12))
      throw std::runtime_error("A0 not symmetric at a sample point");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a0);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo <= mu_ * M_ || hi >= M_)
      throw std::runtime_error("A0 eigenvalues leave (mu*M, M) at a sample point");
  }
}

CoefficientModel bs_asian_model(const BlockStructure& geom, double sigma) {
  if (geom.dim() != 2 || geom.p0() != 1)
    throw std::invalid_argument("bs_asian_model requires the d=2 prototype structure");
  const double s2 = sigma * sigma;
  // bounds are only used for validation on user-chosen sample sets
  CoefficientModel m(geom, 16.0 * s2, 1.0 / 64.0);
  auto field = [s2](const GroupPoint& z) { return s2 * z.x[0] * z.x[0]; };
  // a11 depends on x1 only: Y a11 = x1 d_{x2} a11 = 0, d/dx2 = 0
  auto oracle = [s2](int k, const MultiIndex& beta, const GroupPoint& zbar) -> double {
    if (k > 0 || beta[1] > 0) return 0.0;
    switch (beta[0]) {
      case 0: return s2 * zbar.x[0] * zbar.x[0];
      case 1: return 2.0 * s2 * zbar.x[0];
      case 2: return 2.0 * s2;
      default: return 0.0;
    }
  };
  m.set_diffusion(0, 0, field, oracle);
  m.set_first_block_only(true);
  return m;
}

CoefficientModel constant_model(const BlockStructure& geom, double sigma) {
  const double s2 = sigma * sigma;
  CoefficientModel m(geom, 2.0 * s2, 0.25);
  for (int i = 0; i < geom.p0(); ++i) {
    auto oracle = [s2, i](int k, const MultiIndex& beta, const GroupPoint&) -> double {
      return (k == 0 && beta.order() == 0) ? s2 : 0.0;
    };
    m.set_diffusion(i, i, [s2](const GroupPoint&) { return s2; }, oracle);
  }
  m.set_first_block_only(true);
  return m;
}

PayoffSpec fixed_strike_call(double maturity, double strike) {
  PayoffSpec p;
  p.phi = [maturity, strike](const Eigen::VectorXd& y) {
    return std::max(y[1] / maturity - strike, 0.0);
  };
  p.holder_exponent = 3.0;
  Eigen::VectorXd w(2);
  w << 0.0, 1.0 / maturity;
  p.kink = PayoffSpec::Hyperplane{w, strike};
  p.name = "fixed-call";
  return p;
}

PayoffSpec floating_strike_call(double maturity) {
  PayoffSpec p;
  p.phi = [maturity](const Eigen::VectorXd& y) {
    return std::max(y[0] - y[1] / maturity, 0.0);
  };
  p.holder_exponent = 1.0;
  Eigen::VectorXd w(2);
  w << 1.0, -1.0 / maturity;
  p.kink = PayoffSpec::Hyperplane{w, 0.0};
  p.name = "float-call";
  return p;
}

}  // namespace kolmex
