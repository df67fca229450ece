#include "kolmex/operator_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kolmex {

namespace {

bool key_less(const OperatorTerm& a, const OperatorTerm& b) {
  if (a.delta != b.delta) return a.delta < b.delta;
  return a.alpha < b.alpha;
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// (s - tbar)^k as a polynomial in Delta (slot 0) and Theta.
TimePolynomial time_shift_power(const OperatorContext& ctx, int k) {
  if (!ctx.base_at_final_time) return TimePolynomial::delta_power(0, k);
  // s - T = Delta - Theta
  TimePolynomial p;
  double binom = 1.0;
  for (int i = 0; i <= k; ++i) {
    const double sign = ((k - i) % 2 == 0) ? 1.0 : -1.0;
    p = p + TimePolynomial::delta_power(0, i, sign * binom) *
                TimePolynomial::theta_power(k - i);
    binom = binom * (k - i) / (i + 1);
  }
  return p;
}

TimePolynomial poly_entry(const PolyMatrix& m, int i, int j) {
  TimePolynomial p;
  for (size_t k = 0; k < m.size(); ++k)
    if (m[k](i, j) != 0.0) p = p + TimePolynomial::delta_power(0, static_cast<int>(k), m[k](i, j));
  return p;
}

}  // namespace

NormalOrderedOperator NormalOrderedOperator::identity(int d) {
  NormalOrderedOperator op(d);
  op.add_term(TimePolynomial::constant(1.0), MultiIndex(d), MultiIndex(d));
  return op;
}

NormalOrderedOperator NormalOrderedOperator::derivative(int d, const MultiIndex& alpha) {
  NormalOrderedOperator op(d);
  op.add_term(TimePolynomial::constant(1.0), MultiIndex(d), alpha);
  return op;
}

NormalOrderedOperator NormalOrderedOperator::increment(int d, int j) {
  NormalOrderedOperator op(d);
  op.add_term(TimePolynomial::constant(1.0), MultiIndex::unit(d, j), MultiIndex(d));
  return op;
}

void NormalOrderedOperator::add_term(TimePolynomial coeff, MultiIndex delta,
                                     MultiIndex alpha) {
  if (coeff.is_zero()) return;
  terms_.push_back({std::move(coeff), std::move(delta), std::move(alpha)});
  canonicalize();
}

void NormalOrderedOperator::canonicalize() {
  std::sort(terms_.begin(), terms_.end(), key_less);
  std::vector<OperatorTerm> out;
  for (auto& t : terms_) {
    if (!out.empty() && out.back().delta == t.delta && out.back().alpha == t.alpha)
      out.back().coeff = out.back().coeff + t.coeff;
    else
      out.push_back(std::move(t));
  }
  std::erase_if(out, [](const OperatorTerm& t) { return t.coeff.is_zero(); });
  terms_ = std::move(out);
}

NormalOrderedOperator NormalOrderedOperator::operator+(const NormalOrderedOperator& o) const {
  NormalOrderedOperator r(*this);
  r.terms_.insert(r.terms_.end(), o.terms_.begin(), o.terms_.end());
  r.canonicalize();
  return r;
}

NormalOrderedOperator NormalOrderedOperator::scaled(const TimePolynomial& p) const {
  NormalOrderedOperator r(d_);
  for (const auto& t : terms_) r.terms_.push_back({t.coeff * p, t.delta, t.alpha});
  r.canonicalize();
  return r;
}

NormalOrderedOperator NormalOrderedOperator::scaled(double s) const {
  return scaled(TimePolynomial::constant(s));
}

NormalOrderedOperator NormalOrderedOperator::relabel_delta(int slot) const {
  NormalOrderedOperator r(d_);
  for (const auto& t : terms_)
    r.terms_.push_back({t.coeff.relabel_delta(slot), t.delta, t.alpha});
  r.canonicalize();
  return r;
}

NormalOrderedOperator NormalOrderedOperator::integrate_slot(int j) const {
  NormalOrderedOperator r(d_);
  for (const auto& t : terms_)
    r.terms_.push_back({t.coeff.integrate_slot(j), t.delta, t.alpha});
  r.canonicalize();
  return r;
}

NormalOrderedOperator NormalOrderedOperator::pruned(double rel_tol) const {
  double max_c = 0.0;
  for (const auto& t : terms_) max_c = std::max(max_c, t.coeff.max_abs_coeff());
  NormalOrderedOperator r(d_);
  for (const auto& t : terms_) {
    auto c = t.coeff.pruned(rel_tol * max_c);
    if (!c.is_zero()) r.terms_.push_back({std::move(c), t.delta, t.alpha});
  }
  return r;
}

std::string NormalOrderedOperator::to_string() const {
  if (terms_.empty()) return "0\n";
  std::ostringstream os;
  for (const auto& t : terms_) {
    os << "(" << t.coeff.to_string() << ")";
    for (int j = 0; j < d_; ++j)
      if (t.delta[j] != 0) os << " * X" << j + 1 << "^" << t.delta[j];
    for (int j = 0; j < d_; ++j)
      if (t.alpha[j] != 0) os << " * D" << j + 1 << "^" << t.alpha[j];
    os << "\n";
  }
  return os.str();
}

NormalOrderedOperator normal_order_product(const NormalOrderedOperator& P,
                                           const NormalOrderedOperator& Q) {
  if (P.dim() != Q.dim()) throw std::invalid_argument("operator dimensions differ");
  const int d = P.dim();
  NormalOrderedOperator r(d);
  std::vector<OperatorTerm> acc;
  for (const auto& p : P.terms()) {
    for (const auto& q : Q.terms()) {
      // commute D^{p.alpha} past X^{q.delta}
      MultiIndex nu(d);
      MultiIndex bound(d);
      for (int j = 0; j < d; ++j) bound[j] = std::min(p.alpha[j], q.delta[j]);
      // iterate nu over 0..bound componentwise
      for (;;) {
        const double c = binom_prod(p.alpha, nu) * falling_prod(q.delta, nu);
        acc.push_back({p.coeff * q.coeff * c, p.delta + (q.delta - nu),
                       (p.alpha - nu) + q.alpha});
        int j = 0;
        while (j < d) {
          if (nu[j] < bound[j]) {
            ++nu[j];
            break;
          }
          nu[j] = 0;
          ++j;
        }
        if (j == d) break;
      }
    }
  }
  for (auto& t : acc) r.add_term(std::move(t.coeff), std::move(t.delta), std::move(t.alpha));
  return r;
}

OperatorContext::OperatorContext(const BlockStructure& g, Eigen::MatrixXd a0_,
                                 Eigen::VectorXd xbar_, bool at_T)
    : geom(&g), a0(std::move(a0_)), xbar(std::move(xbar_)), base_at_final_time(at_T) {
  if (!a0.isApprox(a0.transpose(), 1e-12))
    throw std::invalid_argument("A0 must be symmetric");
}

PolyMatrix matrix_exp_poly(const BlockStructure& geom, double s) {
  PolyMatrix m;
  double c = 1.0;
  for (int k = 0; k <= geom.steps(); ++k) {
    if (k > 0) c *= s / k;
    m.push_back(c * geom.B_power(k));
  }
  return m;
}

PolyMatrix covariance_poly(const OperatorContext& ctx) {
  const auto& geom = *ctx.geom;
  const int d = geom.dim();
  const int r = geom.steps();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  A.topLeftCorner(geom.p0(), geom.p0()) = ctx.a0;
  PolyMatrix m(2 * r + 2, Eigen::MatrixXd::Zero(d, d));
  for (int k = 0; k <= r; ++k)
    for (int l = 0; l <= r; ++l)
      m[k + l + 1] += geom.B_power(k) * A * geom.B_power(l).transpose() /
                      (factorial(k) * factorial(l) * (k + l + 1));
  while (m.size() > 1 && m.back().isZero(0.0)) m.pop_back();
  return m;
}

PolyMatrix mean_shift_poly(const OperatorContext& ctx) {
  const PolyMatrix C = covariance_poly(ctx);
  const PolyMatrix Em = matrix_exp_poly(*ctx.geom, -1.0);  // e^{-Delta B}
  // C(Delta) * e^{-Delta B*}
  const int d = ctx.geom->dim();
  PolyMatrix out(C.size() + Em.size() - 1, Eigen::MatrixXd::Zero(d, d));
  for (size_t a = 0; a < C.size(); ++a)
    for (size_t b = 0; b < Em.size(); ++b) out[a + b] += C[a] * Em[b].transpose();
  while (out.size() > 1 && out.back().isZero(0.0)) out.pop_back();
  return out;
}

NormalOrderedOperator w_operator(const BlockStructure& geom, int i) {
  if (i >= geom.p0()) throw std::invalid_argument("w_operator: i must be < p0");
  const PolyMatrix E = matrix_exp_poly(geom, -1.0);  // e^{-Delta B}
  const int d = geom.dim();
  NormalOrderedOperator op(d);
  // (e^{-Delta B*})_{ij} = (e^{-Delta B})_{ji}
  for (int j = 0; j < d; ++j) {
    TimePolynomial p = poly_entry(E, j, i);
    if (!p.is_zero()) op.add_term(std::move(p), MultiIndex(d), MultiIndex::unit(d, j));
  }
  return op;
}

NormalOrderedOperator increment_operator(const OperatorContext& ctx, int j) {
  const auto& geom = *ctx.geom;
  const int d = geom.dim();
  const PolyMatrix E = matrix_exp_poly(geom, 1.0);
  const PolyMatrix S = mean_shift_poly(ctx);
  NormalOrderedOperator op(d);
  for (int k = 0; k < d; ++k) {
    TimePolynomial px = poly_entry(E, j, k);
    if (!px.is_zero()) op.add_term(std::move(px), MultiIndex::unit(d, k), MultiIndex(d));
    TimePolynomial pd = poly_entry(S, j, k);
    if (!pd.is_zero()) op.add_term(std::move(pd), MultiIndex(d), MultiIndex::unit(d, k));
  }
  return op;
}

NormalOrderedOperator m_operator(const OperatorContext& ctx, int j) {
  const auto& geom = *ctx.geom;
  const int d = geom.dim();
  NormalOrderedOperator op = increment_operator(ctx, j);
  // constant part (e^{(s - tbar)B} xbar)_j
  TimePolynomial c;
  for (int k = 0; k <= geom.steps(); ++k) {
    const double v = (geom.B_power(k) * ctx.xbar)(j) / factorial(k);
    if (v != 0.0) c = c + time_shift_power(ctx, k) * v;
  }
  if (!c.is_zero()) op.add_term(std::move(c), MultiIndex(d), MultiIndex(d));
  return op;
}

ModelJets make_model_jets(const CoefficientModel& model, const GroupPoint& zbar, int N) {
  ModelJets jets;
  jets.zbar = zbar;
  jets.order = N;
  const int p0 = model.p0();
  for (int i = 0; i < p0; ++i)
    for (int j = 0; j < p0; ++j)
      jets.aij.push_back(model.diffusion_jet(i, j, zbar, N));
  for (int i = 0; i < p0; ++i)
    jets.ai.push_back(model.drift_jet(i, zbar, std::max(N - 1, 0)));
  return jets;
}

namespace {

// Taylor increment of grade exactly `grade`, with spatial arguments replaced by
// the M-components: sum over 2k + |beta|_B = grade of
//   Y^k d^beta f(zbar) / (k! beta!) * (s - tbar)^k * N(Delta)^beta.
NormalOrderedOperator taylor_increment_operator(
    const OperatorContext& ctx, const IntrinsicJet& jet, int grade,
    const std::vector<NormalOrderedOperator>& inc_ops) {
  const auto& geom = *ctx.geom;
  const int d = geom.dim();
  NormalOrderedOperator sum(d);
  if (grade < 0) return sum;
  for (const auto& [k, beta] : jet.keys_of_grade(grade)) {
    const double v = jet.get(k, beta);
    if (v == 0.0) continue;
    NormalOrderedOperator op = NormalOrderedOperator::identity(d);
    for (int m = 0; m < d; ++m)
      for (int c = 0; c < beta[m]; ++c) op = normal_order_product(op, inc_ops[m]);
    op = op.scaled(time_shift_power(ctx, k) * (v / (factorial(k) * beta.factorial())));
    sum = sum + op;
  }
  return sum;
}

}  // namespace

NormalOrderedOperator build_G(const OperatorContext& ctx, const ModelJets& jets, int n) {
  if (n < 1 || n > jets.order)
    throw std::invalid_argument("build_G: order outside available jets");
  const auto& geom = *ctx.geom;
  const int d = geom.dim();
  const int p0 = geom.p0();

  std::vector<NormalOrderedOperator> inc_ops;
  for (int j = 0; j < d; ++j) inc_ops.push_back(increment_operator(ctx, j));
  std::vector<NormalOrderedOperator> w_ops;
  for (int i = 0; i < p0; ++i) w_ops.push_back(w_operator(geom, i));

  NormalOrderedOperator G(d);
  for (int i = 0; i < p0; ++i) {
    for (int j = 0; j < p0; ++j) {
      const auto inc =
          taylor_increment_operator(ctx, jets.aij[static_cast<size_t>(i) * p0 + j], n, inc_ops);
      if (inc.is_zero()) continue;
      auto term = normal_order_product(inc, normal_order_product(w_ops[i], w_ops[j]));
      G = G + term.scaled(0.5);
    }
  }
  for (int i = 0; i < p0; ++i) {
    const auto inc = taylor_increment_operator(ctx, jets.ai[i], n - 1, inc_ops);
    if (inc.is_zero()) continue;
    G = G + normal_order_product(inc, w_ops[i]);
  }
  return G.pruned();
}

namespace {

void compositions_of(int n, int h, std::vector<int>& cur,
                     std::vector<std::vector<int>>& out) {
  if (h == 1) {
    if (n >= 1) {
      cur.push_back(n);
      out.push_back(cur);
      cur.pop_back();
    }
    return;
  }
  for (int first = 1; first <= n - (h - 1); ++first) {
    cur.push_back(first);
    compositions_of(n - first, h - 1, cur, out);
    cur.pop_back();
  }
}

}  // namespace

NormalOrderedOperator build_L(const OperatorContext& ctx, const ModelJets& jets, int n) {
  if (n < 1 || n > jets.order)
    throw std::invalid_argument("build_L: order outside available jets");
  const int d = ctx.geom->dim();

  std::vector<NormalOrderedOperator> G;  // G[m-1] = G_m
  for (int m = 1; m <= n; ++m) G.push_back(build_G(ctx, jets, m));

  NormalOrderedOperator L(d);
  for (int h = 1; h <= n; ++h) {
    std::vector<std::vector<int>> tuples;
    std::vector<int> cur;
    compositions_of(n, h, cur, tuples);
    for (const auto& tuple : tuples) {
      NormalOrderedOperator P = G[tuple[0] - 1];  // slot 0 already
      for (int j = 1; j < h; ++j)
        P = normal_order_product(P, G[tuple[j] - 1].relabel_delta(j)).pruned();
      for (int j = h - 1; j >= 0; --j) P = P.integrate_slot(j);
      L = L + P;
    }
  }
  return L.pruned();
}

std::vector<StencilEntry> evaluate_at_basepoint(const NormalOrderedOperator& L) {
  std::vector<StencilEntry> out;
  const MultiIndex zero(L.dim());
  for (const auto& t : L.terms()) {
    if (t.delta != zero) continue;
    if (t.coeff.top_slot() >= 0)
      throw std::logic_error("evaluate_at_basepoint: pending time variables remain");
    for (const auto& m : t.coeff.terms())
      out.push_back({m.theta, m.c, t.alpha});
  }
  return out;
}

std::map<MultiIndex, double> reduce_operator(const NormalOrderedOperator& L, double theta,
                                             const Eigen::VectorXd& increment) {
  std::map<MultiIndex, double> out;
  for (const auto& t : L.terms()) {
    if (t.coeff.top_slot() >= 0)
      throw std::logic_error("reduce_operator: pending time variables remain");
    const double c = t.coeff.evaluate(theta) * t.delta.monomial(increment);
    if (c != 0.0) out[t.alpha] += c;
  }
  return out;
}

double apply_operator(const NormalOrderedOperator& P, double theta,
                      const std::vector<double>& deltas, const Eigen::VectorXd& increment,
                      const std::function<double(const MultiIndex&)>& derivs) {
  double sum = 0.0;
  for (const auto& t : P.terms())
    sum += t.coeff.evaluate(theta, deltas) * t.delta.monomial(increment) * derivs(t.alpha);
  return sum;
}

}  // namespace kolmex
