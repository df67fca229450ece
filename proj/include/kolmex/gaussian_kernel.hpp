#pragma once

#include <atomic>
#include <map>
#include <mutex>

#include "kolmex/geometry.hpp"
#include "kolmex/model.hpp"

namespace kolmex {

/// Probabilists' Gauss-Hermite rule: integrates against the standard normal
/// density, sum of weights = 1.
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};
QuadratureRule gauss_hermite(int n);

/// Leading-order Gaussian kernel: density in y with mean e^{theta B} x and
/// covariance C(theta) = int_0^theta e^{uB} A e^{uB*} du, A the p0-embedding
/// of the frozen diffusion matrix a0. Immutable after construction; the
/// derivative-polynomial cache is guarded internally.
class GaussianKernel {
 public:
  GaussianKernel(const BlockStructure& geom, Eigen::MatrixXd a0, double t, double T);

  /// Constant-coefficient heat-type kernel: the special case a0 = lambda I.
  static GaussianKernel heat(const BlockStructure& geom, double lambda, double theta);

  const BlockStructure& geom() const { return *geom_; }
  double theta() const { return theta_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  const Eigen::MatrixXd& exp_thetaB() const { return expB_; }
  /// F with C = F F^T (eigenfactorization, stable for tiny theta).
  const Eigen::MatrixXd& factor() const { return factor_; }
  /// Eigenvalue condition estimate of C exceeds 1e12.
  bool ill_conditioned() const { return ill_conditioned_; }

  Eigen::VectorXd mean(const Eigen::VectorXd& x) const { return expB_ * x; }

  double density(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;

  /// D_x^alpha Gamma0(t,x;T,y), exact: the Hermite-type polynomial P_alpha in
  /// w = y - m(x) is generated by the recursion
  ///   P_{alpha+e_i} = sum_j (e^{theta B})_{ji} (-d_{w_j} P + (C^{-1}w)_j P)
  /// and multiplies the density.
  double derivative(const MultiIndex& alpha, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& y) const;

  /// P_alpha evaluated at a given w (used by quadrature integration).
  double hermite_factor(const MultiIndex& alpha, const Eigen::VectorXd& w) const;

 private:
  using PolyW = std::map<MultiIndex, double>;  // polynomial in w
  const PolyW& poly(const MultiIndex& alpha) const;

  const BlockStructure* geom_;
  double theta_;
  Eigen::MatrixXd expB_;        // e^{theta B}
  Eigen::MatrixXd cov_;         // C(theta)
  Eigen::MatrixXd cov_inv_;     // Q Lambda^{-1} Q^T
  Eigen::MatrixXd factor_;      // Q Lambda^{1/2}
  double log_norm_;             // -(d/2) log(2 pi) - (1/2) log det C
  bool ill_conditioned_ = false;

  mutable std::mutex cache_mutex_;
  mutable std::map<MultiIndex, PolyW> cache_;
};

/// Leading term u0(t,x) = int Gamma0(t,x;T,y) phi(y) dy and its x-derivatives.
/// Hyperplane payoffs (w.y - K)^+ use the closed Bachelier-type form; anything
/// else falls back to tensor Gauss-Hermite quadrature with a doubling check.
class LeadingTerm {
 public:
  LeadingTerm(const BlockStructure& geom, Eigen::MatrixXd a0, PayoffSpec payoff,
              double t, double T, int quad_points = 0);  // 0 = dimension default

  const GaussianKernel& kernel() const { return kernel_; }
  bool closed_form() const { return closed_form_; }
  /// False once a doubling of the quadrature order moved some result by more
  /// than 1e-6 relative.
  bool quadrature_converged() const { return quad_converged_; }

  double value(const Eigen::VectorXd& x) const;
  /// D^alpha u0(t, x).
  double derivative(const MultiIndex& alpha, const Eigen::VectorXd& x) const;

 private:
  double closed_form_derivative(const MultiIndex& alpha, const Eigen::VectorXd& x) const;
  double quadrature_derivative(const MultiIndex& alpha, const Eigen::VectorXd& x,
                               const QuadratureRule& rule) const;

  GaussianKernel kernel_;
  PayoffSpec payoff_;
  bool closed_form_;
  QuadratureRule rule_, rule2_;  // base and doubled orders
  mutable std::atomic<bool> quad_converged_ = true;
};

}  // namespace kolmex
