#include "kolmex/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace kolmex {

int MultiIndex::order() const {
  int s = 0;
  for (int e : entries_) s += e;
  return s;
}

int MultiIndex::blength(const std::vector<int>& sigma) const {
  int s = 0;
  for (size_t j = 0; j < entries_.size(); ++j) s += sigma[j] * entries_[j];
  return s;
}

MultiIndex MultiIndex::operator+(const MultiIndex& o) const {
  MultiIndex r(*this);
  for (size_t j = 0; j < entries_.size(); ++j) r.entries_[j] += o.entries_[j];
  return r;
}

MultiIndex MultiIndex::operator-(const MultiIndex& o) const {
  MultiIndex r(*this);
  for (size_t j = 0; j < entries_.size(); ++j) r.entries_[j] -= o.entries_[j];
  return r;
}

bool MultiIndex::leq(const MultiIndex& o) const {
  for (size_t j = 0; j < entries_.size(); ++j)
    if (entries_[j] > o.entries_[j]) return false;
  return true;
}

double MultiIndex::factorial() const {
  double f = 1.0;
  for (int e : entries_)
    for (int k = 2; k <= e; ++k) f *= k;
  return f;
}

double MultiIndex::monomial(const Eigen::VectorXd& x) const {
  double v = 1.0;
  for (size_t j = 0; j < entries_.size(); ++j)
    for (int k = 0; k < entries_[j]; ++k) v *= x[static_cast<int>(j)];
  return v;
}

double binom_prod(const MultiIndex& a, const MultiIndex& n) {
  double v = 1.0;
  for (int j = 0; j < a.dim(); ++j) {
    int aj = a[j], nj = n[j];
    double b = 1.0;
    for (int k = 0; k < nj; ++k) b = b * (aj - k) / (k + 1);
    v *= b;
  }
  return v;
}

double falling_prod(const MultiIndex& a, const MultiIndex& n) {
  double v = 1.0;
  for (int j = 0; j < a.dim(); ++j)
    for (int k = 0; k < n[j]; ++k) v *= a[j] - k;
  return v;
}

BlockStructure::BlockStructure(int p0, std::vector<Eigen::MatrixXd> blocks) {
  if (p0 < 1) throw std::invalid_argument("p0 must be >= 1");
  p_.push_back(p0);
  for (const auto& Bj : blocks) p_.push_back(static_cast<int>(Bj.rows()));

  const int r = static_cast<int>(blocks.size());
  d_ = 0;
  for (int pj : p_) d_ += pj;

  for (int j = 1; j <= r; ++j) {
    const auto& Bj = blocks[j - 1];
    if (Bj.cols() != p_[j - 1])
      throw std::invalid_argument("block B_j must have p_{j-1} columns");
    if (p_[j] > p_[j - 1])
      throw std::invalid_argument("block sizes must be non-increasing");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Bj);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 1e-10 * sv(0))
      throw std::invalid_argument("block B_j must have full rank p_j");
  }

  B_ = Eigen::MatrixXd::Zero(d_, d_);
  int row = p_[0];
  int col = 0;
  for (int j = 1; j <= r; ++j) {
    B_.block(row, col, p_[j], p_[j - 1]) = blocks[j - 1];
    col += p_[j - 1];
    row += p_[j];
  }

  sigma_.resize(d_);
  int idx = 0;
  for (size_t j = 0; j < p_.size(); ++j)
    for (int i = 0; i < p_[j]; ++i) sigma_[idx++] = 2 * static_cast<int>(j) + 1;

  B_pow_.push_back(Eigen::MatrixXd::Identity(d_, d_));
  for (int k = 1; k <= r + 1; ++k) B_pow_.push_back(B_pow_.back() * B_);
  if (!B_pow_.back().isZero(0.0))
    throw std::invalid_argument("assembled B must satisfy B^{r+1} = 0");
}

BlockStructure BlockStructure::asian_prototype() {
  Eigen::MatrixXd b1(1, 1);
  b1 << 1.0;
  return BlockStructure(1, {b1});
}

BlockStructure BlockStructure::chain(int d) {
  Eigen::MatrixXd b1(1, 1);
  b1 << 1.0;
  return BlockStructure(1, std::vector<Eigen::MatrixXd>(d - 1, b1));
}

int BlockStructure::homogeneous_dim() const {
  int q = 0;
  for (int s : sigma_) q += s;
  return q;
}

const Eigen::MatrixXd& BlockStructure::B_power(int k) const {
  static const Eigen::MatrixXd zero = Eigen::MatrixXd();
  if (k < static_cast<int>(B_pow_.size())) return B_pow_[k];
  return B_pow_.back();  // zero matrix for k >= r+1
}

Eigen::MatrixXd BlockStructure::matrix_exp(double t) const {
  Eigen::MatrixXd E = Eigen::MatrixXd::Identity(d_, d_);
  double c = 1.0;
  for (int k = 1; k <= steps(); ++k) {
    c *= t / k;
    E += c * B_pow_[k];
  }
  return E;
}

GroupPoint BlockStructure::compose(const GroupPoint& z, const GroupPoint& w) const {
  return {z.t + w.t, matrix_exp(w.t) * z.x + w.x};
}

GroupPoint BlockStructure::inverse(const GroupPoint& z) const {
  return {-z.t, -(matrix_exp(-z.t) * z.x)};
}

Eigen::VectorXd BlockStructure::dilate_spatial(double lambda, const Eigen::VectorXd& x) const {
  if (lambda <= 0.0) throw std::invalid_argument("dilation parameter must be positive");
  Eigen::VectorXd y(d_);
  for (int j = 0; j < d_; ++j) y[j] = std::pow(lambda, sigma_[j]) * x[j];
  return y;
}

GroupPoint BlockStructure::dilate(double lambda, const GroupPoint& z) const {
  return {lambda * lambda * z.t, dilate_spatial(lambda, z.x)};
}

double BlockStructure::spatial_norm(const Eigen::VectorXd& x) const {
  double s = 0.0;
  for (int j = 0; j < d_; ++j) s += std::pow(std::abs(x[j]), 1.0 / sigma_[j]);
  return s;
}

double BlockStructure::homogeneous_norm(const GroupPoint& z) const {
  return std::sqrt(std::abs(z.t)) + spatial_norm(z.x);
}

}  // namespace kolmex
