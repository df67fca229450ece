#include "kolmex/taylor.hpp"

#include <cmath>
#include <stdexcept>

namespace kolmex {

IntrinsicJet::IntrinsicJet(const BlockStructure& geom, GroupPoint base, int order)
    : geom_(&geom), base_(std::move(base)), order_(order) {
  if (order < 0) throw std::invalid_argument("jet order must be >= 0");
}

void IntrinsicJet::set(int k, const MultiIndex& beta, double value) {
  if (2 * k + geom_->blength(beta) > order_)
    throw std::invalid_argument("jet key exceeds jet order");
  coeffs_[{k, beta}] = value;
}

double IntrinsicJet::get(int k, const MultiIndex& beta) const {
  auto it = coeffs_.find({k, beta});
  return it == coeffs_.end() ? 0.0 : it->second;
}

std::vector<IntrinsicJet::Key> IntrinsicJet::keys_of_grade(int grade) const {
  std::vector<Key> out;
  for (const auto& beta : multi_indices_up_to_blength(*geom_, grade)) {
    const int rem = grade - geom_->blength(beta);
    if (rem >= 0 && rem % 2 == 0) out.push_back({rem / 2, beta});
  }
  return out;
}

std::vector<MultiIndex> multi_indices_up_to_blength(const BlockStructure& geom, int bound) {
  std::vector<MultiIndex> out;
  MultiIndex cur(geom.dim());
  const auto& sigma = geom.sigma();
  std::function<void(int, int)> rec = [&](int j, int budget) {
    if (j == geom.dim()) {
      out.push_back(cur);
      return;
    }
    for (int b = 0; b * sigma[j] <= budget; ++b) {
      cur[j] = b;
      rec(j + 1, budget - b * sigma[j]);
    }
    cur[j] = 0;
  };
  rec(0, bound);
  return out;
}

double taylor_eval(const IntrinsicJet& jet, const GroupPoint& z) {
  const auto& geom = jet.geom();
  const auto& zeta = jet.base();
  const double dt = z.t - zeta.t;
  const Eigen::VectorXd inc = z.x - geom.matrix_exp(dt) * zeta.x;

  double sum = 0.0;
  for (const auto& [key, value] : jet.coeffs()) {
    const auto& [k, beta] = key;
    double kfact = 1.0;
    for (int i = 2; i <= k; ++i) kfact *= i;
    sum += value / (kfact * beta.factorial()) * std::pow(dt, k) * beta.monomial(inc);
  }
  return sum;
}

double taylor_increment(const IntrinsicJet& jet_n, const IntrinsicJet& jet_prev,
                        const GroupPoint& z) {
  if (jet_n.base().t != jet_prev.base().t || jet_n.base().x != jet_prev.base().x)
    throw std::invalid_argument("taylor_increment: base points differ");
  return taylor_eval(jet_n, z) - taylor_eval(jet_prev, z);
}

namespace {

// Y^k d^beta f at z by nested central differences, step h per level.
double fd_derivative(const std::function<double(const GroupPoint&)>& f,
                     const BlockStructure& geom, const GroupPoint& z, int k,
                     MultiIndex beta, double h) {
  if (k > 0) {
    const auto lower = [&](const GroupPoint& w) {
      return fd_derivative(f, geom, w, k - 1, beta, h);
    };
    const GroupPoint zp{z.t + h, geom.matrix_exp(h) * z.x};
    const GroupPoint zm{z.t - h, geom.matrix_exp(-h) * z.x};
    return (lower(zp) - lower(zm)) / (2.0 * h);
  }
  for (int i = 0; i < beta.dim(); ++i) {
    if (beta[i] > 0) {
      beta[i] -= 1;
      const auto lower = [&](const GroupPoint& w) {
        return fd_derivative(f, geom, w, 0, beta, h);
      };
      GroupPoint zp = z, zm = z;
      zp.x[i] += h;
      zm.x[i] -= h;
      return (lower(zp) - lower(zm)) / (2.0 * h);
    }
  }
  return f(z);
}

}  // namespace

IntrinsicJet finite_difference_jet(const std::function<double(const GroupPoint&)>& f,
                                   const BlockStructure& geom, const GroupPoint& zeta,
                                   int n) {
  if (n > 4)
    throw std::invalid_argument("finite_difference_jet: order > 4 not supported");
  IntrinsicJet jet(geom, zeta, n);
  const double scale = std::max(1.0, geom.homogeneous_norm(zeta));
  constexpr double eps = 2.2e-16;
  for (const auto& beta : multi_indices_up_to_blength(geom, n)) {
    const int bl = geom.blength(beta);
    for (int k = 0; 2 * k + bl <= n; ++k) {
      // differencing depth m; step balances h^2 truncation vs eps/h^m noise
      const int m = k + beta.order();
      const double h = (m == 0) ? 1.0 : scale * std::pow(eps, 1.0 / (m + 2));
      jet.set(k, beta, fd_derivative(f, geom, zeta, k, beta, h));
    }
  }
  return jet;
}

}  // namespace kolmex
