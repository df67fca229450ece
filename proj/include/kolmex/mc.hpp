#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "kolmex/model.hpp"

namespace kolmex {

struct McConfig {
  long paths = 100000;
  int steps_per_unit = 200;  // Euler steps per unit of time (at least 1 step total)
  std::uint64_t seed = 42;
  bool antithetic = true;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long paths = 0;
};

/// Euler scheme for the averaged diffusion: the first p0 coordinates receive
/// the diffusion increment chol(a0) sqrt(h) Z, all coordinates receive the
/// drift B x h (left endpoint). Deterministic for fixed config: streams are
/// keyed by (seed, path index), reduction is in fixed chunk order regardless
/// of the number of worker threads.
McEstimate simulate_price(const CoefficientModel& model, const PayoffSpec& payoff,
                          double t, double T, const Eigen::VectorXd& x,
                          const McConfig& cfg);

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

struct ConvergenceRow {
  double theta = 0.0;
  int N = 0;
  double expansion = 0.0;  // U_N
  double mc_mean = 0.0;
  double mc_std_error = 0.0;
  double error = 0.0;  // |U_N - mc_mean|
  bool noise_dominated = false;  // |error| < 3 * stderr, excluded from the fit
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  std::map<int, double> slopes;           // N -> fitted log-log slope
  std::map<int, int> points_in_fit;       // N -> rows entering the fit
};

/// |U_N - MC| against theta for each requested order. The final time T is held
/// fixed and t = T - theta varies, so the payoff family keeps a uniform
/// intrinsic Hoelder norm; the strike may still track theta (fixed normalized
/// moneyness), hence the payoff factory.
ConvergenceTable convergence_table(
    const CoefficientModel& model,
    const std::function<PayoffSpec(double theta)>& payoff_for_theta,
    double final_time, const std::vector<double>& thetas, const McConfig& cfg,
    const std::vector<int>& orders, const Eigen::VectorXd& x,
    bool base_at_final_time = false);

/// Slope of |U_{N+1} - U_N| against theta (no MC involved), same grid.
std::map<int, double> self_consistency_slopes(
    const CoefficientModel& model,
    const std::function<PayoffSpec(double theta)>& payoff_for_theta,
    double final_time, const std::vector<double>& thetas,
    const std::vector<int>& orders, const Eigen::VectorXd& x,
    bool base_at_final_time = false);

}  // namespace kolmex
