#include "kolmex/gaussian_kernel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kolmex {

namespace {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

Eigen::MatrixXd covariance_matrix(const BlockStructure& geom,
                                  const Eigen::MatrixXd& a0, double theta) {
  const int d = geom.dim();
  const int r = geom.steps();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  A.topLeftCorner(geom.p0(), geom.p0()) = a0;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k <= r; ++k)
    for (int l = 0; l <= r; ++l)
      C += geom.B_power(k) * A * geom.B_power(l).transpose() *
           std::pow(theta, k + l + 1) / (factorial(k) * factorial(l) * (k + l + 1));
  return C;
}

}  // namespace

QuadratureRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: need n >= 1");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(static_cast<double>(k));
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  QuadratureRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights = es.eigenvectors().row(0).array().square();
  return rule;
}

GaussianKernel::GaussianKernel(const BlockStructure& geom, Eigen::MatrixXd a0,
                               double t, double T)
    : geom_(&geom), theta_(T - t) {
  if (!(T > t)) throw std::invalid_argument("GaussianKernel: need T > t");
  if (a0.rows() != geom.p0() || a0.cols() != geom.p0())
    throw std::invalid_argument("GaussianKernel: a0 must be p0 x p0");
  expB_ = geom.matrix_exp(theta_);
  cov_ = covariance_matrix(geom, a0, theta_);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov_);
  const Eigen::VectorXd lam = es.eigenvalues();
  if (lam.minCoeff() <= 0.0)
    throw std::runtime_error("GaussianKernel: covariance not positive definite");
  ill_conditioned_ = lam.maxCoeff() / lam.minCoeff() > 1e12;
  cov_inv_ = es.eigenvectors() * lam.cwiseInverse().asDiagonal() *
             es.eigenvectors().transpose();
  factor_ = es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
  log_norm_ = -0.5 * geom.dim() * std::log(2.0 * std::numbers::pi) -
              0.5 * lam.array().log().sum();
}

GaussianKernel GaussianKernel::heat(const BlockStructure& geom, double lambda,
                                    double theta) {
  return GaussianKernel(
      geom, lambda * Eigen::MatrixXd::Identity(geom.p0(), geom.p0()), 0.0, theta);
}

double GaussianKernel::density(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  const Eigen::VectorXd w = y - mean(x);
  return std::exp(log_norm_ - 0.5 * w.dot(cov_inv_ * w));
}

const GaussianKernel::PolyW& GaussianKernel::poly(const MultiIndex& alpha) const {
  std::scoped_lock lock(cache_mutex_);
  auto it = cache_.find(alpha);
  if (it != cache_.end()) return it->second;

  const int d = geom_->dim();
  if (cache_.empty()) cache_[MultiIndex(d)] = {{MultiIndex(d), 1.0}};

  // build the chain of ancestors bottom-up, peeling one unit at a time
  std::vector<MultiIndex> chain{alpha};
  while (cache_.find(chain.back()) == cache_.end()) {
    MultiIndex parent = chain.back();
    for (int i = 0; i < d; ++i)
      if (parent[i] > 0) {
        --parent[i];
        break;
      }
    chain.push_back(parent);
  }
  for (auto step = chain.rbegin() + 1; step != chain.rend(); ++step) {
    MultiIndex parent = *step;
    int i = 0;
    while ((*step)[i] == (*(step - 1))[i]) ++i;
    --parent[i];
    const PolyW& p = cache_.at(parent);
    PolyW next;
    for (const auto& [kappa, c] : p) {
      for (int j = 0; j < d; ++j) {
        const double e = expB_(j, i);
        if (e == 0.0) continue;
        // -d_{w_j} P
        if (kappa[j] > 0) {
          MultiIndex down = kappa;
          --down[j];
          next[down] -= e * c * kappa[j];
        }
        // (C^{-1} w)_j P
        for (int k = 0; k < d; ++k) {
          const double cij = cov_inv_(j, k);
          if (cij == 0.0) continue;
          next[kappa + MultiIndex::unit(d, k)] += e * c * cij;
        }
      }
    }
    std::erase_if(next, [](const auto& kv) { return kv.second == 0.0; });
    cache_[*step] = std::move(next);
  }
  return cache_.at(alpha);
}

double GaussianKernel::hermite_factor(const MultiIndex& alpha,
                                      const Eigen::VectorXd& w) const {
  double sum = 0.0;
  for (const auto& [kappa, c] : poly(alpha)) sum += c * kappa.monomial(w);
  return sum;
}

double GaussianKernel::derivative(const MultiIndex& alpha, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& y) const {
  return hermite_factor(alpha, y - mean(x)) * density(x, y);
}

LeadingTerm::LeadingTerm(const BlockStructure& geom, Eigen::MatrixXd a0,
                         PayoffSpec payoff, double t, double T, int quad_points)
    : kernel_(geom, std::move(a0), t, T),
      payoff_(std::move(payoff)),
      closed_form_(payoff_.kink.has_value()) {
  if (!closed_form_) {
    int q = quad_points;
    if (q <= 0) q = geom.dim() == 2 ? 64 : (geom.dim() == 3 ? 24 : 12);
    rule_ = gauss_hermite(q);
    rule2_ = gauss_hermite(2 * q);
  }
}

double LeadingTerm::value(const Eigen::VectorXd& x) const {
  return derivative(MultiIndex(kernel_.geom().dim()), x);
}

double LeadingTerm::derivative(const MultiIndex& alpha, const Eigen::VectorXd& x) const {
  if (closed_form_) return closed_form_derivative(alpha, x);
  const double coarse = quadrature_derivative(alpha, x, rule_);
  const double fine = quadrature_derivative(alpha, x, rule2_);
  const double scale = std::max(std::abs(coarse), std::abs(fine));
  // absolute floor keeps roundoff on exactly-zero results from tripping the flag
  if (std::abs(fine - coarse) > std::max(1e-6 * scale, 1e-9)) quad_converged_ = false;
  return fine;
}

double LeadingTerm::closed_form_derivative(const MultiIndex& alpha,
                                           const Eigen::VectorXd& x) const {
  const auto& kink = *payoff_.kink;
  const Eigen::VectorXd g = kernel_.exp_thetaB().transpose() * kink.w;
  const double mu = g.dot(x);
  const double v = kink.w.dot(kernel_.covariance() * kink.w);
  if (v <= 0.0)
    throw std::runtime_error("LeadingTerm: degenerate variance along the payoff kink");
  const double sq = std::sqrt(v);
  const double zeta = (mu - kink.K) / sq;

  const int m = alpha.order();
  double fm;  // m-th derivative of F(mu) = (mu - K) Phi(zeta) + sq * pdf(zeta)
  if (m == 0)
    fm = (mu - kink.K) * normal_cdf(zeta) + sq * normal_pdf(zeta);
  else if (m == 1)
    fm = normal_cdf(zeta);
  else {
    // F^{(m)} = (-1)^m He_{m-2}(zeta) pdf(zeta) / v^{(m-1)/2}
    double he_prev = 0.0, he = 1.0;  // He_0
    for (int k = 0; k < m - 2; ++k) {
      const double next = zeta * he - k * he_prev;
      he_prev = he;
      he = next;
    }
    fm = (m % 2 == 0 ? 1.0 : -1.0) * he * normal_pdf(zeta) /
         std::pow(sq, m - 1);
  }
  return alpha.monomial(g) * fm;
}

double LeadingTerm::quadrature_derivative(const MultiIndex& alpha,
                                          const Eigen::VectorXd& x,
                                          const QuadratureRule& rule) const {
  const int d = kernel_.geom().dim();
  const int q = static_cast<int>(rule.nodes.size());
  const Eigen::VectorXd m = kernel_.mean(x);
  const Eigen::MatrixXd& F = kernel_.factor();
  const bool identity_factor = alpha.order() == 0;

  std::vector<int> idx(d, 0);
  Eigen::VectorXd eta(d), w(d), y(d);
  double sum = 0.0;
  for (;;) {
    double weight = 1.0;
    for (int j = 0; j < d; ++j) {
      eta[j] = rule.nodes[idx[j]];
      weight *= rule.weights[idx[j]];
    }
    w = F * eta;
    y = m + w;
    double f = payoff_.phi(y);
    if (!identity_factor) f *= kernel_.hermite_factor(alpha, w);
    sum += weight * f;
    int j = 0;
    while (j < d && ++idx[j] == q) idx[j++] = 0;
    if (j == d) break;
  }
  return sum;
}

}  // namespace kolmex
