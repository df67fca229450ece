#pragma once

#include <Eigen/Dense>
#include <compare>
#include <vector>

namespace kolmex {

/// Multi-index in N_0^d with Euclidean height |beta| and B-length |beta|_B.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(int d) : entries_(d, 0) {}
  MultiIndex(std::initializer_list<int> e) : entries_(e) {}
  explicit MultiIndex(std::vector<int> e) : entries_(std::move(e)) {}

  static MultiIndex unit(int d, int i) {
    MultiIndex m(d);
    m.entries_[i] = 1;
    return m;
  }

  int dim() const { return static_cast<int>(entries_.size()); }
  int operator[](int i) const { return entries_[i]; }
  int& operator[](int i) { return entries_[i]; }

  /// Euclidean height |beta|.
  int order() const;
  /// B-length |beta|_B = sum sigma_j beta_j.
  int blength(const std::vector<int>& sigma) const;

  MultiIndex operator+(const MultiIndex& o) const;
  MultiIndex operator-(const MultiIndex& o) const;  // requires o <= *this
  bool leq(const MultiIndex& o) const;              // componentwise

  /// prod beta_j!
  double factorial() const;
  /// x^beta for a vector x.
  double monomial(const Eigen::VectorXd& x) const;

  auto operator<=>(const MultiIndex&) const = default;

 private:
  std::vector<int> entries_;
};

/// prod binom(a_j, n_j)
double binom_prod(const MultiIndex& a, const MultiIndex& n);
/// prod a_j! / (a_j - n_j)!   (falling factorial, n <= a)
double falling_prod(const MultiIndex& a, const MultiIndex& n);

/// Point (t, x) of the homogeneous group G_B.
struct GroupPoint {
  double t = 0.0;
  Eigen::VectorXd x;

  GroupPoint() = default;
  GroupPoint(double t_, Eigen::VectorXd x_) : t(t_), x(std::move(x_)) {}
};

/// The block matrix B of a Kolmogorov operator together with the geometry it
/// induces: dilations, group law, homogeneous norm, exact matrix exponential.
///
/// B has sub-diagonal blocks B_1, ..., B_r with B_j of shape p_j x p_{j-1},
/// p_0 >= p_1 >= ... >= p_r >= 1, and is nilpotent of step r+1.
class BlockStructure {
 public:
  /// blocks[j-1] = B_j. p0 is the size of the diffused block.
  BlockStructure(int p0, std::vector<Eigen::MatrixXd> blocks);

  /// d = 2 prototype of the averaged diffusion: B = [[0,0],[1,0]].
  static BlockStructure asian_prototype();
  /// chain structure p = (1,1,...,1) with unit blocks, d = r+1 coordinates.
  static BlockStructure chain(int d);

  int dim() const { return d_; }
  int p0() const { return p_[0]; }
  int steps() const { return static_cast<int>(p_.size()) - 1; }  // r
  const std::vector<int>& block_sizes() const { return p_; }
  const std::vector<int>& sigma() const { return sigma_; }
  /// homogeneous dimension Q = sum sigma_j (spatial part)
  int homogeneous_dim() const;

  const Eigen::MatrixXd& B() const { return B_; }
  /// B^k, exact (zero for k > r).
  const Eigen::MatrixXd& B_power(int k) const;

  /// e^{tB} = sum_{k<=r} (tB)^k / k!, exact polynomial in t.
  Eigen::MatrixXd matrix_exp(double t) const;

  // group operations
  GroupPoint compose(const GroupPoint& z, const GroupPoint& w) const;
  GroupPoint inverse(const GroupPoint& z) const;

  // anisotropic dilations
  Eigen::VectorXd dilate_spatial(double lambda, const Eigen::VectorXd& x) const;
  GroupPoint dilate(double lambda, const GroupPoint& z) const;

  /// [x]_B = sum |x_j|^{1/sigma_j}
  double spatial_norm(const Eigen::VectorXd& x) const;
  /// ||(t,x)||_B = |t|^{1/2} + [x]_B
  double homogeneous_norm(const GroupPoint& z) const;

  int blength(const MultiIndex& beta) const { return beta.blength(sigma_); }

 private:
  std::vector<int> p_;
  std::vector<int> sigma_;
  int d_ = 0;
  Eigen::MatrixXd B_;
  std::vector<Eigen::MatrixXd> B_pow_;  // B^0 .. B^{r+1}
};

}  // namespace kolmex
