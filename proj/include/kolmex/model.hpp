#pragma once

#include <functional>
#include <optional>
#include <string>

#include "kolmex/geometry.hpp"
#include "kolmex/taylor.hpp"

namespace kolmex {

/// Diffusion coefficients a_ij (i,j <= p0) and drifts a_i of a Kolmogorov
/// operator, with an intrinsic-derivative oracle per coefficient. Closed-form
/// oracles take precedence; coefficients without one fall back to finite
/// differences.
class CoefficientModel {
 public:
  using Field = std::function<double(const GroupPoint&)>;
  /// (k, beta, zbar) -> Y^k d^beta value at zbar.
  using JetOracle = std::function<double(int, const MultiIndex&, const GroupPoint&)>;

  CoefficientModel(const BlockStructure& geom, double bound_M, double bound_mu);

  const BlockStructure& geom() const { return *geom_; }
  int p0() const { return geom_->p0(); }
  double bound_M() const { return M_; }
  double bound_mu() const { return mu_; }

  void set_diffusion(int i, int j, Field f, JetOracle oracle = nullptr);
  void set_drift(int i, Field f, JetOracle oracle = nullptr);

  /// Coefficients depend only on the first p0 variables (enables the small-M
  /// form of the error bound).
  void set_first_block_only(bool v) { first_block_only_ = v; }
  bool first_block_only() const { return first_block_only_; }

  double diffusion(int i, int j, const GroupPoint& z) const;
  double drift(int i, const GroupPoint& z) const;
  bool has_drift(int i) const;
  /// Direct handle on a coefficient field (may be empty); lets hot loops skip
  /// the per-call index arithmetic.
  const Field& diffusion_field(int i, int j) const {
    return a_[static_cast<size_t>(i) * geom_->p0() + j].f;
  }

  Eigen::MatrixXd a0_at(const GroupPoint& z) const;

  IntrinsicJet diffusion_jet(int i, int j, const GroupPoint& zbar, int order) const;
  IntrinsicJet drift_jet(int i, const GroupPoint& zbar, int order) const;

  /// A0 symmetric with eigenvalues in (mu*M, M) at the given points.
  void validate(const std::vector<GroupPoint>& sample_points) const;

 private:
  struct Coefficient {
    Field f;
    JetOracle oracle;
  };
  IntrinsicJet jet_of(const Coefficient& c, const GroupPoint& zbar, int order) const;

  const BlockStructure* geom_;
  double M_, mu_;
  bool first_block_only_ = false;
  std::vector<Coefficient> a_;      // p0*p0, row-major; a_ij
  std::vector<Coefficient> drift_;  // p0; a_i
};

/// Payoff with declared intrinsic Hoelder exponent; the optional hyperplane
/// descriptor enables closed-form leading-term evaluation for
/// phi(y) = (w.y - K)^+.
struct PayoffSpec {
  std::function<double(const Eigen::VectorXd&)> phi;
  double holder_exponent = 0.0;  // k in [0, 2r+1]
  struct Hyperplane {
    Eigen::VectorXd w;
    double K = 0.0;
  };
  std::optional<Hyperplane> kink;
  std::string name;
};

// shipped models (d = 2 averaged-diffusion prototype)

/// a11(t,x) = sigma^2 x1^2, Black-Scholes arithmetic Asian dynamics.
CoefficientModel bs_asian_model(const BlockStructure& geom, double sigma);
/// a11 = sigma^2 constant (Bachelier dynamics): the expansion is exact.
CoefficientModel constant_model(const BlockStructure& geom, double sigma);

// shipped payoffs

/// (y2 / T - K)^+, C^3_B.
PayoffSpec fixed_strike_call(double maturity, double strike);
/// (y1 - y2 / T)^+, C^1_{B,loc}.
PayoffSpec floating_strike_call(double maturity);

}  // namespace kolmex
