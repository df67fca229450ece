#include "kolmex/verify.hpp"

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "kolmex/gaussian_kernel.hpp"
#include "kolmex/mc.hpp"
#include "kolmex/operator_algebra.hpp"
#include "kolmex/taylor.hpp"

namespace kolmex {

namespace {

CheckResult make(const std::string& suite, const std::string& name, double observed,
                 double bound, bool pass_if_below = true) {
  CheckResult r;
  r.suite = suite;
  r.name = name;
  r.observed = observed;
  r.pass = pass_if_below ? (observed < bound) : (observed > bound);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s %g", pass_if_below ? "<" : ">", bound);
  r.criterion = buf;
  return r;
}

GroupPoint random_point(const BlockStructure& geom, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GroupPoint z{u(rng), Eigen::VectorXd(geom.dim())};
  for (int i = 0; i < geom.dim(); ++i) z.x[i] = u(rng);
  return z;
}

/// diag(lambda^{sigma_j}) as a matrix, the spatial dilation D_0(lambda).
Eigen::MatrixXd dilation_matrix(const BlockStructure& geom, double lambda) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(geom.dim(), geom.dim());
  for (int i = 0; i < geom.dim(); ++i) D(i, i) = std::pow(lambda, geom.sigma()[i]);
  return D;
}

Eigen::MatrixXd covariance_matrix(const OperatorContext& ctx, double theta) {
  auto C = covariance_poly(ctx);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(ctx.geom->dim(), ctx.geom->dim());
  double p = 1.0;
  for (const auto& ck : C) {
    out += p * ck;
    p *= theta;
  }
  return out;
}

}  // namespace

std::vector<CheckResult> verify_geometry() {
  std::vector<CheckResult> out;
  std::mt19937 rng(11);
  std::vector<BlockStructure> geoms{BlockStructure::asian_prototype(),
                                    BlockStructure::chain(3)};

  double worst = 0.0;
  for (const auto& geom : geoms)
    for (int trial = 0; trial < 200; ++trial) {
      const auto z = random_point(geom, rng), w = random_point(geom, rng);
      const auto e = geom.compose(z, geom.inverse(z));
      worst = std::max(worst, std::abs(e.t) + e.x.norm());
      const auto back = geom.compose(geom.compose(z, w), geom.inverse(w));
      worst = std::max(worst, std::abs(back.t - z.t) + (back.x - z.x).norm());
    }
  out.push_back(make("geometry", "group inverse/compose round-trip", worst, 1e-12));

  worst = 0.0;
  for (const auto& geom : geoms)
    for (double lambda : {0.3, 1.7, 4.0})
      for (int trial = 0; trial < 100; ++trial) {
        const auto z = random_point(geom, rng);
        const double lhs = geom.homogeneous_norm(geom.dilate(lambda, z));
        const double rhs = lambda * geom.homogeneous_norm(z);
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, rhs));
      }
  out.push_back(make("geometry", "dilation homogeneity of the norm", worst, 1e-12));

  worst = 0.0;
  for (const auto& geom : geoms)
    for (double s : {-0.7, 0.4})
      for (double t : {0.9, 2.2}) {
        const Eigen::MatrixXd lhs = geom.matrix_exp(s + t);
        const Eigen::MatrixXd rhs = geom.matrix_exp(s) * geom.matrix_exp(t);
        worst = std::max(worst, (lhs - rhs).norm());
      }
  out.push_back(make("geometry", "matrix-exponential semigroup", worst, 1e-12));

  // C(Delta) = D0(sqrt(Delta)) C(1) D0(sqrt(Delta)) and
  // e^{Delta B} = D0(sqrt(Delta)) e^{B} D0(1/sqrt(Delta))
  worst = 0.0;
  for (const auto& geom : geoms) {
    Eigen::MatrixXd a0 = Eigen::MatrixXd::Identity(geom.p0(), geom.p0()) * 0.16;
    Eigen::VectorXd xbar = Eigen::VectorXd::Zero(geom.dim());
    OperatorContext ctx(geom, a0, xbar);
    const Eigen::MatrixXd C1 = covariance_matrix(ctx, 1.0);
    const Eigen::MatrixXd E1 = geom.matrix_exp(1.0);
    for (double delta : {0.1, 1.0, 2.5}) {
      const Eigen::MatrixXd D = dilation_matrix(geom, std::sqrt(delta));
      const Eigen::MatrixXd Dinv = dilation_matrix(geom, 1.0 / std::sqrt(delta));
      worst = std::max(worst, (covariance_matrix(ctx, delta) - D * C1 * D).norm());
      worst = std::max(worst, (geom.matrix_exp(delta) - D * E1 * Dinv).norm());
    }
  }
  out.push_back(make("geometry", "covariance and exponential homogeneity", worst, 1e-12));
  return out;
}

std::vector<CheckResult> verify_kernel() {
  std::vector<CheckResult> out;
  auto geom = BlockStructure::asian_prototype();
  Eigen::MatrixXd a0(1, 1);
  a0 << 0.09;
  const double theta = 0.4;
  GaussianKernel K(geom, a0, 0.0, theta);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-0.5, 0.5);

  // grad_x Gamma = -e^{theta B*} grad_y Gamma, y-gradient by the mean-shift
  // identity grad_y Gamma = -C^{-1}(y - e^{theta B} x) Gamma (exact Gaussian)
  const Eigen::MatrixXd Cinv = K.covariance().inverse();
  const Eigen::MatrixXd Et = geom.matrix_exp(theta).transpose();
  double worst_grad = 0.0, worst_poly = 0.0;
  const Eigen::MatrixXd shift = K.covariance() * geom.matrix_exp(-theta).transpose();
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd x(2), y(2);
    x << 1.0 + u(rng), u(rng);
    y = K.mean(x) + Eigen::VectorXd::NullaryExpr(2, [&](int) { return 0.3 * u(rng); });
    const double g = K.density(x, y);
    Eigen::VectorXd grad_x(2), grad_y(2);
    for (int i = 0; i < 2; ++i) grad_x[i] = K.derivative(MultiIndex::unit(2, i), x, y);
    grad_y = -Cinv * (y - K.mean(x)) * g;
    const Eigen::VectorXd rhs = -Et * grad_y;
    worst_grad =
        std::max(worst_grad, (grad_x - rhs).norm() / std::max(1.0, grad_x.norm()));
    // y_j Gamma = (M(theta, x) Gamma)_j with M = e^{theta B}(x + M_v grad)
    for (int j = 0; j < 2; ++j) {
      const double mj = K.mean(x)[j] * g + shift.row(j).dot(grad_x);
      worst_poly = std::max(worst_poly, std::abs(y[j] * g - mj) / std::max(1.0, g));
    }
  }
  out.push_back(make("kernel", "gradient symmetry at 1000 random points", worst_grad, 1e-8));
  out.push_back(make("kernel", "y*Gamma = M*Gamma at 1000 random points", worst_poly, 1e-8));

  // heat-kernel dilation homogeneity Gamma(dil_lambda z) = lambda^{-Q} Gamma(z)
  double worst_hom = 0.0;
  for (int d : {2, 3}) {
    auto g = (d == 2) ? BlockStructure::asian_prototype() : BlockStructure::chain(d);
    for (double lambda : {0.5, 2.0}) {
      GaussianKernel base = GaussianKernel::heat(g, 1.0, 0.7);
      GaussianKernel scaled = GaussianKernel::heat(g, 1.0, lambda * lambda * 0.7);
      Eigen::VectorXd y = Eigen::VectorXd::Constant(g.dim(), 0.3);
      Eigen::VectorXd x = Eigen::VectorXd::Zero(g.dim());
      const double lhs = scaled.density(x, g.dilate_spatial(lambda, y));
      const double rhs = std::pow(lambda, -g.homogeneous_dim()) * base.density(x, y);
      worst_hom = std::max(worst_hom, std::abs(lhs - rhs) / std::max(1e-300, rhs));
    }
  }
  // relative residual of a ratio of exponentials; slightly above 1e-12 noise
  out.push_back(make("kernel", "heat-kernel dilation homogeneity", worst_hom, 1e-10));
  return out;
}

std::vector<CheckResult> verify_algebra() {
  std::vector<CheckResult> out;
  const double sigma = 0.3, x1 = 2.0, x2 = 0.7;
  auto geom = BlockStructure::asian_prototype();
  auto model = bs_asian_model(geom, sigma);
  GroupPoint zbar{0.0, Eigen::VectorXd(2)};
  zbar.x << x1, x2;
  Eigen::MatrixXd a0(1, 1);
  a0 << sigma * sigma * x1 * x1;
  OperatorContext ctx(geom, a0, zbar.x);
  auto jets = make_model_jets(model, zbar, 4);

  // canonical-form bounds: |alpha| <= 3n, |delta|_B <= n,
  // Theta-exponent = (n + |alpha|_B - |delta|_B)/2 >= 0, no pending slots
  bool structural_ok = true;
  int checked = 0;
  for (int n = 1; n <= 4; ++n) {
    auto L = build_L(ctx, jets, n);
    for (const auto& t : L.terms()) {
      ++checked;
      const int ao = t.alpha.order();
      const int ab = t.alpha.blength(geom.sigma());
      const int db = t.delta.blength(geom.sigma());
      if (ao < 1 || ao > 3 * n || db > n) structural_ok = false;
      if ((n + ab - db) % 2 != 0 || (n + ab - db) / 2 < 0) structural_ok = false;
      if (t.coeff.top_slot() != -1) structural_ok = false;
      for (const auto& m : t.coeff.terms())
        if (m.theta != (n + ab - db) / 2) structural_ok = false;
    }
  }
  CheckResult st;
  st.suite = "algebra";
  st.name = "canonical-form bounds for L_1..L_4";
  st.pass = structural_ok && checked > 0;
  st.observed = checked;
  st.criterion = "all terms inside J_n";
  out.push_back(st);

  // machine-built L_1 against the hand-expanded first-order operator
  const double abar = sigma * sigma * x1 * x1;
  const double c1 = 2.0 * sigma * sigma * x1;
  std::map<std::pair<MultiIndex, MultiIndex>, std::pair<int, double>> expected = {
      {{MultiIndex{0, 0}, MultiIndex{3, 0}}, {2, abar * c1 / 4.0}},
      {{MultiIndex{0, 0}, MultiIndex{2, 1}}, {3, -abar * c1 * 5.0 / 12.0}},
      {{MultiIndex{0, 0}, MultiIndex{1, 2}}, {4, abar * c1 / 4.0}},
      {{MultiIndex{0, 0}, MultiIndex{0, 3}}, {5, -abar * c1 / 20.0}},
      {{MultiIndex{1, 0}, MultiIndex{2, 0}}, {1, c1 / 2.0}},
      {{MultiIndex{1, 0}, MultiIndex{1, 1}}, {2, -c1 / 2.0}},
      {{MultiIndex{1, 0}, MultiIndex{0, 2}}, {3, c1 / 6.0}},
  };
  auto L1 = build_L(ctx, make_model_jets(model, zbar, 1), 1);
  double worst = (L1.size() == expected.size()) ? 0.0 : 1.0;
  for (const auto& t : L1.terms()) {
    auto it = expected.find({t.delta, t.alpha});
    if (it == expected.end() || t.coeff.terms().size() != 1) {
      worst = 1.0;
      break;
    }
    const auto& m = t.coeff.terms()[0];
    if (m.theta != it->second.first) worst = 1.0;
    worst = std::max(worst, std::abs(m.c - it->second.second) / std::abs(it->second.second));
  }
  out.push_back(make("algebra", "L_1 matches the hand-expanded stencil", worst, 1e-12));

  // constant coefficients: every correction operator is identically zero
  auto cmodel = constant_model(geom, 0.4);
  GroupPoint z0{0.0, Eigen::VectorXd(2)};
  z0.x << 1.0, 0.0;
  Eigen::MatrixXd ca0(1, 1);
  ca0 << 0.16;
  OperatorContext cctx(geom, ca0, z0.x);
  auto cjets = make_model_jets(cmodel, z0, 4);
  double nonzero = 0.0;
  for (int n = 1; n <= 4; ++n)
    if (!build_L(cctx, cjets, n).is_zero()) nonzero += 1.0;
  out.push_back(make("algebra", "L_n vanishes for constant coefficients", nonzero, 0.5));
  return out;
}

std::vector<CheckResult> verify_taylor() {
  std::vector<CheckResult> out;
  auto geom = BlockStructure::asian_prototype();
  auto f = [](const GroupPoint& z) {
    return std::sin(z.x[0]) * std::exp(z.t) + 0.5 * z.x[1] * z.x[1];
  };
  // analytic intrinsic derivatives of f at the base point (Y = d_t + x1 d_2)
  GroupPoint zeta{0.3, Eigen::VectorXd(2)};
  zeta.x << 1.1, 0.4;
  const double et = std::exp(zeta.t), s = std::sin(zeta.x[0]), c = std::cos(zeta.x[0]);
  auto jet_of_order = [&](int n) {
    IntrinsicJet jet(geom, zeta, n);
    jet.set(0, MultiIndex{0, 0}, s * et + 0.5 * zeta.x[1] * zeta.x[1]);
    if (n >= 1) jet.set(0, MultiIndex{1, 0}, c * et);
    if (n >= 2) {
      jet.set(0, MultiIndex{2, 0}, -s * et);
      jet.set(1, MultiIndex{0, 0}, s * et + zeta.x[0] * zeta.x[1]);  // Yf
    }
    if (n >= 3) {
      jet.set(0, MultiIndex{3, 0}, -c * et);
      jet.set(0, MultiIndex{0, 1}, zeta.x[1]);
      jet.set(1, MultiIndex{1, 0}, c * et);  // Y d_1 f = Y(cos(x1) e^t)
    }
    return jet;
  };
  GroupPoint w{0.8, Eigen::VectorXd(2)};
  w.x << 0.9, -0.6;
  for (int n = 1; n <= 3; ++n) {
    auto jet = jet_of_order(n);
    std::vector<double> lx, ly;
    for (double lambda : {0.2, 0.1, 0.05, 0.025}) {
      const GroupPoint z = geom.compose(zeta, geom.dilate(lambda, w));
      const double rem = std::abs(f(z) - taylor_eval(jet, z));
      lx.push_back(std::log(lambda));
      ly.push_back(std::log(std::max(rem, 1e-300)));
    }
    const double slope = fit_slope(lx, ly);
    out.push_back(make("taylor", "remainder slope for T_" + std::to_string(n), slope,
                       n + 0.9, /*pass_if_below=*/false));
  }
  return out;
}

std::vector<CheckResult> verify_suite(const std::string& suite) {
  if (suite == "geometry") return verify_geometry();
  if (suite == "kernel") return verify_kernel();
  if (suite == "algebra") return verify_algebra();
  if (suite == "taylor") return verify_taylor();
  if (suite == "all") {
    std::vector<CheckResult> out;
    for (const char* s : {"geometry", "kernel", "algebra", "taylor"})
      for (auto& r : verify_suite(s)) out.push_back(std::move(r));
    return out;
  }
  throw std::invalid_argument("unknown verify suite: " + suite);
}

}  // namespace kolmex
