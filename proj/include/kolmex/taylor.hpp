#pragma once

#include <functional>
#include <map>
#include <utility>

#include "kolmex/geometry.hpp"

namespace kolmex {

/// Intrinsic derivative data Y^k d^beta f at a base point, graded by
/// 2k + |beta|_B <= order.
class IntrinsicJet {
 public:
  using Key = std::pair<int, MultiIndex>;  // (k, beta)

  IntrinsicJet(const BlockStructure& geom, GroupPoint base, int order);

  const GroupPoint& base() const { return base_; }
  int order() const { return order_; }
  const BlockStructure& geom() const { return *geom_; }
  const std::map<Key, double>& coeffs() const { return coeffs_; }

  /// Rejects keys with 2k + |beta|_B > order.
  void set(int k, const MultiIndex& beta, double value);
  double get(int k, const MultiIndex& beta) const;  // 0 for absent keys

  double value() const { return get(0, MultiIndex(geom_->dim())); }

  /// All keys with 2k + |beta|_B == grade, in deterministic order.
  std::vector<Key> keys_of_grade(int grade) const;

 private:
  const BlockStructure* geom_;
  GroupPoint base_;
  int order_;
  std::map<Key, double> coeffs_;
};

/// All multi-indices beta in N_0^d with |beta|_B <= bound, graded listing.
std::vector<MultiIndex> multi_indices_up_to_blength(const BlockStructure& geom, int bound);

/// T_n(f, zeta)(z) = sum 1/(k! beta!) Y^k d^beta f(zeta) (t-s)^k (x - e^{(t-s)B} xi)^beta.
double taylor_eval(const IntrinsicJet& jet, const GroupPoint& z);

/// T_n - T_{n-1}: requires matching base points and orders n, n-1.
double taylor_increment(const IntrinsicJet& jet_n, const IntrinsicJet& jet_prev,
                        const GroupPoint& z);

/// Central finite-difference jet of f at zeta, order n <= 4. Spatial
/// derivatives are nested central differences; Y is differenced along the
/// integral curve e^{delta Y}(t,x) = (t+delta, e^{delta B}x). The step per
/// coefficient balances truncation against roundoff for its total
/// differencing depth.
IntrinsicJet finite_difference_jet(const std::function<double(const GroupPoint&)>& f,
                                   const BlockStructure& geom, const GroupPoint& zeta,
                                   int n);

}  // namespace kolmex
