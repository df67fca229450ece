#include "kolmex/mc.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "kolmex/pricer.hpp"

namespace kolmex {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct ChunkSums {
  double sum = 0.0;
  double sumsq = 0.0;
};

/// Prototype fast path (d = 2, p0 = 1, no drift): plain scalar arithmetic with
/// everything the step loop touches held in locals.
double run_sample_prototype(const CoefficientModel& model, const PayoffSpec& payoff,
                            double t, double s10, double s20, int steps, double h,
                            double sqh, bool antithetic, const double* z,
                            GroupPoint& z_now) {
  const int branches = antithetic ? 2 : 1;
  const CoefficientModel::Field& a11 = model.diffusion_field(0, 0);
  if (!a11) throw std::runtime_error("simulate_price: missing diffusion coefficient");
  double* xs = z_now.x.data();
  double acc = 0.0;
  for (int b = 0; b < branches; ++b) {
    const double sign = b == 0 ? 1.0 : -1.0;
    double s1 = s10, s2 = s20;
    double time = t;
    for (int k = 0; k < steps; ++k) {
      z_now.t = time;
      xs[0] = s1;
      xs[1] = s2;
      const double a = a11(z_now);
      if (!(a >= 0.0))
        throw std::runtime_error("simulate_price: negative diffusion on path");
      s2 += s1 * h;  // left-endpoint update of the averaged coordinate
      s1 += std::sqrt(a) * sqh * sign * z[k];
      time += h;
    }
    if (!std::isfinite(s1) || !std::isfinite(s2))
      throw std::runtime_error("simulate_price: non-finite path state");
    xs[0] = s1;
    xs[1] = s2;
    acc += payoff.phi(z_now.x);
  }
  return acc / branches;
}

}  // namespace

McEstimate simulate_price(const CoefficientModel& model, const PayoffSpec& payoff,
                          double t, double T, const Eigen::VectorXd& x,
                          const McConfig& cfg) {
  if (!(T > t)) throw std::invalid_argument("simulate_price: need T > t");
  if (cfg.paths < 2 || cfg.steps_per_unit < 1)
    throw std::invalid_argument("simulate_price: need paths >= 2, steps >= 1");

  const auto& geom = model.geom();
  const int d = geom.dim();
  const int p0 = geom.p0();
  const double horizon = T - t;
  const int steps = std::max(1, static_cast<int>(std::ceil(horizon * cfg.steps_per_unit)));
  const double h = horizon / steps;
  const double sqh = std::sqrt(h);

  // samples are per-path, or per antithetic pair average
  const long samples = cfg.antithetic ? (cfg.paths + 1) / 2 : cfg.paths;
  const long chunk_size = 4096;
  const long chunks = (samples + chunk_size - 1) / chunk_size;
  std::vector<ChunkSums> partial(chunks);

  const bool scalar_diffusion = (p0 == 1);
  const bool any_drift = [&] {
    for (int i = 0; i < p0; ++i)
      if (model.has_drift(i)) return true;
    return false;
  }();
  const Eigen::MatrixXd& B = geom.B();
  const double inv_sqh = sqh / h;  // diffusion enters scaled by sqrt(h)/h

  // all buffers preallocated: the step loop must not touch the heap
  auto run_sample = [&](long index, std::mt19937_64& rng, Eigen::MatrixXd& z,
                        GroupPoint& z_now, Eigen::VectorXd& bstate) {
    std::normal_distribution<double> normal;
    const int branches = cfg.antithetic ? 2 : 1;
    // draw the increments once, reuse (negated) for the antithetic branch
    for (int k = 0; k < steps; ++k)
      for (int i = 0; i < p0; ++i) z(i, k) = normal(rng);
    double acc = 0.0;
    if (d == 2 && scalar_diffusion && !any_drift)
      return run_sample_prototype(model, payoff, t, x[0], x[1], steps, h, sqh,
                                  cfg.antithetic, z.data(), z_now);
    for (int b = 0; b < branches; ++b) {
      const double sign = b == 0 ? 1.0 : -1.0;
      z_now.t = t;
      z_now.x = x;
      Eigen::VectorXd& state = z_now.x;
      for (int k = 0; k < steps; ++k) {
        bstate.noalias() = B * state;
        if (scalar_diffusion) {
          const double a = model.diffusion(0, 0, z_now);
          if (!(a >= 0.0))
            throw std::runtime_error("simulate_price: negative diffusion on path");
          bstate[0] += std::sqrt(a) * inv_sqh * sign * z(0, k);
        } else {
          Eigen::LLT<Eigen::MatrixXd> llt(model.a0_at(z_now));
          if (llt.info() != Eigen::Success)
            throw std::runtime_error("simulate_price: diffusion matrix not SPD on path");
          bstate.head(p0) += llt.matrixL() * (sign * sqh / h * z.col(k));
        }
        if (any_drift)
          for (int i = 0; i < p0; ++i)
            if (model.has_drift(i)) bstate[i] += model.drift(i, z_now);
        state += h * bstate;
        z_now.t += h;
      }
      if (!state.allFinite())
        throw std::runtime_error("simulate_price: non-finite path state");
      acc += payoff.phi(state);
    }
    return acc / branches;
  };

  auto run_chunk = [&](long c) {
    const long begin = c * chunk_size;
    const long end = std::min(begin + chunk_size, samples);
    Eigen::MatrixXd z(p0, steps);
    GroupPoint z_now{t, x};
    Eigen::VectorXd bstate(d);
    ChunkSums s;
    for (long i = begin; i < end; ++i) {
      std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(i))));
      const double v = run_sample(i, rng, z, z_now, bstate);
      s.sum += v;
      s.sumsq += v * v;
    }
    partial[c] = s;
  };

  const unsigned workers =
      std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                         static_cast<unsigned>(chunks));
  if (workers <= 1) {
    for (long c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    std::atomic<long> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    for (unsigned wId = 0; wId < workers; ++wId)
      pool.emplace_back([&] {
        try {
          for (long c = next++; c < chunks; c = next++) run_chunk(c);
        } catch (...) {
          std::scoped_lock lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }

  double sum = 0.0, sumsq = 0.0;
  for (const auto& s : partial) {
    sum += s.sum;
    sumsq += s.sumsq;
  }
  McEstimate est;
  est.mean = sum / samples;
  const double var = std::max(0.0, sumsq / samples - est.mean * est.mean);
  est.std_error = std::sqrt(var / samples);
  est.paths = cfg.antithetic ? 2 * samples : samples;
  return est;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_slope: need two or more matched points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceTable convergence_table(
    const CoefficientModel& model,
    const std::function<PayoffSpec(double theta)>& payoff_for_theta,
    double final_time, const std::vector<double>& thetas, const McConfig& cfg,
    const std::vector<int>& orders, const Eigen::VectorXd& x,
    bool base_at_final_time) {
  ConvergenceTable table;
  std::map<int, std::vector<double>> lx, ly;
  for (double theta : thetas) {
    if (!(theta > 0.0 && theta <= final_time))
      throw std::invalid_argument("theta must lie in (0, final_time]");
    const double t = final_time - theta;
    const PayoffSpec payoff = payoff_for_theta(theta);
    const McEstimate mc =
        simulate_price(model, payoff, t, final_time, x, cfg);
    for (int N : orders) {
      ExpansionResult r =
          price(model, payoff, t, final_time, x, N, {}, base_at_final_time);
      ConvergenceRow row;
      row.theta = theta;
      row.N = N;
      row.expansion = r.value();
      row.mc_mean = mc.mean;
      row.mc_std_error = mc.std_error;
      row.error = std::abs(r.value() - mc.mean);
      row.noise_dominated = row.error < 3.0 * mc.std_error;
      table.rows.push_back(row);
      if (!row.noise_dominated) {
        lx[N].push_back(std::log(theta));
        ly[N].push_back(std::log(row.error));
      }
    }
  }
  for (int N : orders) {
    table.points_in_fit[N] = static_cast<int>(lx[N].size());
    if (lx[N].size() >= 2) table.slopes[N] = fit_slope(lx[N], ly[N]);
  }
  return table;
}

std::map<int, double> self_consistency_slopes(
    const CoefficientModel& model,
    const std::function<PayoffSpec(double theta)>& payoff_for_theta,
    double final_time, const std::vector<double>& thetas,
    const std::vector<int>& orders, const Eigen::VectorXd& x,
    bool base_at_final_time) {
  std::map<int, std::vector<double>> lx, ly;
  for (double theta : thetas) {
    if (!(theta > 0.0 && theta <= final_time))
      throw std::invalid_argument("theta must lie in (0, final_time]");
    const double t = final_time - theta;
    const PayoffSpec payoff = payoff_for_theta(theta);
    for (int N : orders) {
      ExpansionResult r = price(model, payoff, t, final_time, x, N + 1, {},
                                base_at_final_time);
      const double diff = std::abs(r.cumulative[N + 1] - r.cumulative[N]);
      if (diff > 0.0) {
        lx[N].push_back(std::log(theta));
        ly[N].push_back(std::log(diff));
      }
    }
  }
  std::map<int, double> slopes;
  for (int N : orders)
    if (lx[N].size() >= 2) slopes[N] = fit_slope(lx[N], ly[N]);
  return slopes;
}

}  // namespace kolmex
