// kolmex command-line harness: price / converge / verify / mc.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 convergence-slope failure, 5 identity-suite failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kolmex/mc.hpp"
#include "kolmex/pricer.hpp"
#include "kolmex/verify.hpp"

namespace {

using json = nlohmann::json;
using namespace kolmex;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitSlope = 4;
constexpr int kExitIdentity = 5;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// 17 significant digits: reruns with the same config byte-identical.
std::string f17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string json_str(const std::string& s) {
  return json(s).dump();  // proper escaping
}

/// All experiment settings after merging config file and CLI flags.
struct Experiment {
  std::string model_id = "bs-asian";
  double sigma = 0.3;
  std::string payoff_id = "fixed-call";
  std::optional<double> strike;
  std::optional<double> maturity;  // final time T
  double t = 0.0;
  double s0 = 1.0;
  double a0 = 0.0;
  int N = 2;
  std::vector<int> orders;
  std::vector<double> thetas;
  bool base_at_final_time = false;
  int quad_points = 0;
  // mc
  McConfig mc;
  // converge
  bool self_consistency = false;
  std::optional<double> fix_moneyness;  // strike at fixed normalized moneyness
  // output
  std::string format = "json";
  std::string output_path;
};

/// Flags shared by price / converge / mc; each records whether the user set
/// it so config-file values are only overridden explicitly.
struct ExperimentFlags {
  Experiment v;
  std::string config_path;
  CLI::App* cmd = nullptr;
  double strike_flag = 0.0, maturity_flag = 0.0;
  double moneyness_flag = 0.0;

  void attach(CLI::App* c, bool with_mc) {
    cmd = c;
    c->add_option("--config", config_path, "JSON config file; flags override");
    c->add_option("--model", v.model_id, "model id: bs-asian | constant");
    c->add_option("--sigma", v.sigma, "model volatility parameter");
    c->add_option("--payoff", v.payoff_id, "payoff id: fixed-call | float-call");
    c->add_option("--strike", strike_flag, "strike K (fixed-call)");
    c->add_option("--T", maturity_flag, "final time T");
    c->add_option("--t", v.t, "evaluation time t");
    c->add_option("--s0", v.s0, "spot state x1");
    c->add_option("--a0", v.a0, "integrated state x2");
    c->add_option("--base-at-final-time", v.base_at_final_time,
                  "freeze coefficients at (T, x) instead of (t, x)");
    c->add_option("--quad-points", v.quad_points,
                  "Gauss-Hermite points per axis (0 = default)");
    c->add_option("--format", v.format, "output format: json | csv");
    c->add_option("--output", v.output_path,
                  "output file (default stdout; KOLMEX_OUTPUT_DIR resolves "
                  "relative paths)");
    if (with_mc) {
      c->add_option("--paths", v.mc.paths, "Monte Carlo paths");
      c->add_option("--steps-per-unit", v.mc.steps_per_unit, "Euler steps per unit time");
      c->add_option("--seed", v.mc.seed, "Monte Carlo seed");
      c->add_flag("--no-antithetic", "disable antithetic pairing");
    }
  }

  bool set(const std::string& flag) const {
    const auto* opt = cmd->get_option_no_throw(flag);
    return opt != nullptr && opt->count() > 0;
  }

  /// Merge file values (lower priority) with explicit CLI flags.
  void merge_config() {
    if (set("--strike")) v.strike = strike_flag;
    if (set("--T")) v.maturity = maturity_flag;
    if (set("--no-antithetic")) v.mc.antithetic = false;
    if (set("--fix-moneyness")) v.fix_moneyness = moneyness_flag;
    if (config_path.empty()) return;
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file: " + config_path);
    json cfg;
    try {
      in >> cfg;
    } catch (const json::exception& e) {
      throw ConfigError(std::string("invalid config JSON: ") + e.what());
    }
    auto pick = [&](const char* table, const char* key) -> const json* {
      if (!cfg.contains(table)) return nullptr;
      const auto& t = cfg.at(table);
      return t.contains(key) ? &t.at(key) : nullptr;
    };
    try {
      if (auto* p = pick("model", "id"); p && !set("--model")) v.model_id = *p;
      if (auto* p = pick("model", "sigma"); p && !set("--sigma")) v.sigma = *p;
      if (auto* p = pick("payoff", "id"); p && !set("--payoff")) v.payoff_id = *p;
      if (auto* p = pick("payoff", "strike"); p && !set("--strike")) v.strike = *p;
      if (auto* p = pick("payoff", "T"); p && !set("--T")) v.maturity = *p;
      if (auto* p = pick("state", "t"); p && !set("--t")) v.t = *p;
      if (auto* p = pick("state", "s0"); p && !set("--s0")) v.s0 = *p;
      if (auto* p = pick("state", "a0"); p && !set("--a0")) v.a0 = *p;
      if (auto* p = pick("mc", "paths"); p && !set("--paths")) v.mc.paths = *p;
      if (auto* p = pick("mc", "steps_per_unit"); p && !set("--steps-per-unit"))
        v.mc.steps_per_unit = *p;
      if (auto* p = pick("mc", "seed"); p && !set("--seed")) v.mc.seed = *p;
      if (auto* p = pick("mc", "antithetic"); p && !set("--no-antithetic"))
        v.mc.antithetic = *p;
      if (auto* p = pick("output", "format"); p && !set("--format")) v.format = *p;
      if (auto* p = pick("output", "path"); p && v.output_path.empty())
        v.output_path = *p;
      if (cfg.contains("N") && !set("--N")) v.N = cfg.at("N");
      if (cfg.contains("orders") && !set("--orders"))
        v.orders = cfg.at("orders").get<std::vector<int>>();
      if (cfg.contains("thetas") && !set("--thetas"))
        v.thetas = cfg.at("thetas").get<std::vector<double>>();
      if (cfg.contains("base_at_final_time") && !set("--base-at-final-time"))
        v.base_at_final_time = cfg.at("base_at_final_time");
      if (cfg.contains("self_consistency") && !set("--self-consistency"))
        v.self_consistency = cfg.at("self_consistency");
      if (cfg.contains("fix_moneyness") && !set("--fix-moneyness"))
        v.fix_moneyness = cfg.at("fix_moneyness").get<double>();
      if (cfg.contains("quad_points") && !set("--quad-points"))
        v.quad_points = cfg.at("quad_points");
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config field has the wrong type: ") + e.what());
    }
  }
};

CoefficientModel build_model(const Experiment& e, const BlockStructure& geom) {
  if (e.model_id == "bs-asian") return bs_asian_model(geom, e.sigma);
  if (e.model_id == "constant") return constant_model(geom, e.sigma);
  throw ConfigError("unknown model id: " + e.model_id + " (expected bs-asian | constant)");
}

PayoffSpec build_payoff(const Experiment& e, double maturity,
                        std::optional<double> strike_override = {}) {
  if (!(maturity > 0.0)) throw ConfigError("missing or non-positive field: T");
  if (e.payoff_id == "fixed-call") {
    const auto strike = strike_override ? strike_override : e.strike;
    if (!strike) throw ConfigError("missing required field: strike");
    return fixed_strike_call(maturity, *strike);
  }
  if (e.payoff_id == "float-call") return floating_strike_call(maturity);
  throw ConfigError("unknown payoff id: " + e.payoff_id +
                    " (expected fixed-call | float-call)");
}

Eigen::VectorXd state_of(const Experiment& e) {
  Eigen::VectorXd x(2);
  x << e.s0, e.a0;
  return x;
}

void emit(const Experiment& e, const std::string& text) {
  if (e.output_path.empty()) {
    std::cout << text;
    return;
  }
  std::filesystem::path p(e.output_path);
  if (p.is_relative())
    if (const char* dir = std::getenv("KOLMEX_OUTPUT_DIR")) p = std::filesystem::path(dir) / p;
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file: " + p.string());
  out << text;
}

/// Schema-stable envelope: every field present, absent data as explicit null.
std::string envelope(const Experiment& e, double maturity, const std::string& values,
                     const std::string& cumulative, const std::string& greeks,
                     const std::string& slopes, const std::string& pass,
                     const std::string& extra = "") {
  std::ostringstream os;
  os << "{\n";
  os << "  \"model\": " << json_str(e.model_id) << ",\n";
  os << "  \"payoff\": " << json_str(e.payoff_id) << ",\n";
  os << "  \"t\": " << f17(e.t) << ",\n";
  os << "  \"T\": " << f17(maturity) << ",\n";
  os << "  \"x\": [" << f17(e.s0) << ", " << f17(e.a0) << "],\n";
  os << "  \"N\": " << e.N << ",\n";
  os << "  \"values\": " << values << ",\n";
  os << "  \"cumulative\": " << cumulative << ",\n";
  os << "  \"greeks\": " << greeks << ",\n";
  os << "  \"slopes\": " << slopes << ",\n";
  os << "  \"pass\": " << pass;
  if (!extra.empty()) os << ",\n" << extra;
  os << "\n}\n";
  return os.str();
}

std::string number_array(const std::vector<double>& v) {
  std::string s = "[";
  for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + f17(v[i]);
  return s + "]";
}

int cmd_price(const Experiment& e) {
  auto geom = BlockStructure::asian_prototype();
  auto model = build_model(e, geom);
  auto payoff = build_payoff(e, e.maturity.value_or(0.0));
  if (e.N < 0 || e.N > ExpansionPricer::kMaxOrder)
    throw ConfigError("N must lie in [0, " + std::to_string(ExpansionPricer::kMaxOrder) + "]");
  if (!(e.t < *e.maturity)) throw ConfigError("t must be smaller than T");

  std::vector<MultiIndex> alphas{MultiIndex{1, 0}, MultiIndex{2, 0}};
  ExpansionResult r = price(model, payoff, e.t, *e.maturity, state_of(e), e.N, alphas,
                            e.base_at_final_time, e.quad_points);

  if (e.format == "csv") {
    std::ostringstream os;
    os << "order,value,cumulative\n";
    for (size_t n = 0; n < r.orders.size(); ++n)
      os << n << "," << f17(r.orders[n]) << "," << f17(r.cumulative[n]) << "\n";
    emit(e, os.str());
  } else if (e.format == "json") {
    std::string greeks = "{\"delta\": " + f17(r.greeks.at(MultiIndex{1, 0})) +
                         ", \"gamma\": " + f17(r.greeks.at(MultiIndex{2, 0})) + "}";
    std::string extra = "  \"error_order\": " + f17(r.error_order) +
                        ",\n  \"quadrature_converged\": " +
                        (r.quadrature_converged ? "true" : "false");
    emit(e, envelope(e, *e.maturity, number_array(r.orders), number_array(r.cumulative),
                     greeks, "null", "null", extra));
  } else {
    throw ConfigError("unknown format: " + e.format + " (expected json | csv)");
  }
  return r.quadrature_converged ? kExitOk : kExitNumerical;
}

int cmd_converge(const Experiment& e) {
  auto geom = BlockStructure::asian_prototype();
  auto model = build_model(e, geom);
  if (e.thetas.size() < 4) throw ConfigError("theta grid needs at least 4 points");
  std::vector<double> thetas = e.thetas;
  for (size_t i = 0; i + 1 < thetas.size(); ++i)
    if (thetas[i] <= thetas[i + 1]) throw ConfigError("thetas must be positive and strictly decreasing");
  if (!(thetas.back() > 0.0)) throw ConfigError("thetas must be positive and strictly decreasing");
  std::vector<int> orders = e.orders.empty() ? std::vector<int>{0, 1} : e.orders;
  for (int N : orders)
    if (N < 0 || N + 1 > ExpansionPricer::kMaxOrder)
      throw ConfigError("orders must lie in [0, " +
                        std::to_string(ExpansionPricer::kMaxOrder - 1) + "]");

  const double T = e.maturity.value_or(thetas.front());
  // probe payoff fixes the Hoelder exponent k of the family
  auto probe = build_payoff(e, T, e.fix_moneyness ? std::optional<double>(0.0) : e.strike);
  const double k = probe.holder_exponent;
  auto factory = [&](double theta) {
    if (e.fix_moneyness && e.payoff_id == "fixed-call") {
      // strike at fixed normalized moneyness zeta0: K = mean - zeta0 * sqrt(var)
      const double t = T - theta;
      Eigen::VectorXd x = state_of(e);
      GaussianKernel kern(geom, model.a0_at({t, x}), t, T);
      Eigen::VectorXd w(2);
      w << 0.0, 1.0 / T;
      const double mean = w.dot(kern.mean(x));
      const double sd = std::sqrt(w.dot(kern.covariance() * w));
      return build_payoff(e, T, mean - *e.fix_moneyness * sd);
    }
    return build_payoff(e, T, e.strike);
  };

  std::map<int, double> slopes;
  std::map<int, bool> slope_pass;
  ConvergenceTable table;
  if (e.self_consistency) {
    slopes = self_consistency_slopes(model, factory, T, thetas, orders, state_of(e),
                                     e.base_at_final_time);
    for (int N : orders) {
      auto it = slopes.find(N);
      // |U_{N+1} - U_N| = |u_{N+1}| decays like theta^{(N+1+k)/2}
      const double want = 0.5 * (N + 1 + k);
      slope_pass[N] = it != slopes.end() && std::abs(it->second - want) <= 0.3;
    }
  } else {
    table = convergence_table(model, factory, T, thetas, e.mc, orders, state_of(e),
                              e.base_at_final_time);
    slopes = table.slopes;
    for (int N : orders) {
      auto it = slopes.find(N);
      slope_pass[N] = it != slopes.end() && it->second >= error_order_estimate(k, N) - 0.3;
    }
  }
  bool all_pass = true;
  for (int N : orders) all_pass = all_pass && slope_pass[N];

  if (e.format == "csv") {
    std::ostringstream os;
    if (e.self_consistency) {
      os << "N,slope,target,pass\n";
      for (int N : orders) {
        os << N << ",";
        os << (slopes.count(N) ? f17(slopes.at(N)) : std::string("nan")) << ",";
        os << f17(0.5 * (N + 1 + k)) << ","
           << (slope_pass[N] ? "true" : "false") << "\n";
      }
    } else {
      os << "theta,N,expansion,mc_mean,mc_std_error,error,noise_dominated\n";
      for (const auto& row : table.rows)
        os << f17(row.theta) << "," << row.N << "," << f17(row.expansion) << ","
           << f17(row.mc_mean) << "," << f17(row.mc_std_error) << "," << f17(row.error)
           << "," << (row.noise_dominated ? "true" : "false") << "\n";
    }
    emit(e, os.str());
  } else if (e.format == "json") {
    std::string slope_json = "[";
    bool first = true;
    for (int N : orders) {
      slope_json += first ? "" : ", ";
      first = false;
      slope_json += "{\"N\": " + std::to_string(N) + ", \"slope\": " +
                    (slopes.count(N) ? f17(slopes.at(N)) : std::string("null")) +
                    ", \"target\": " +
                    f17(e.self_consistency ? 0.5 * (N + 1 + k) : error_order_estimate(k, N)) +
                    ", \"pass\": " + (slope_pass[N] ? "true" : "false") + "}";
    }
    slope_json += "]";
    std::string extra = "  \"rows\": [";
    for (size_t i = 0; i < table.rows.size(); ++i) {
      const auto& row = table.rows[i];
      extra += std::string(i ? ", " : "") + "{\"theta\": " + f17(row.theta) +
               ", \"N\": " + std::to_string(row.N) + ", \"expansion\": " +
               f17(row.expansion) + ", \"mc_mean\": " + f17(row.mc_mean) +
               ", \"mc_std_error\": " + f17(row.mc_std_error) + ", \"error\": " +
               f17(row.error) + ", \"noise_dominated\": " +
               (row.noise_dominated ? "true" : "false") + "}";
    }
    extra += "]";
    emit(e, envelope(e, T, "null", "null", "null", slope_json,
                     all_pass ? "true" : "false", extra));
  } else {
    throw ConfigError("unknown format: " + e.format + " (expected json | csv)");
  }
  return all_pass ? kExitOk : kExitSlope;
}

int cmd_mc(const Experiment& e) {
  auto geom = BlockStructure::asian_prototype();
  auto model = build_model(e, geom);
  auto payoff = build_payoff(e, e.maturity.value_or(0.0));
  if (!(e.t < *e.maturity)) throw ConfigError("t must be smaller than T");
  McEstimate est = simulate_price(model, payoff, e.t, *e.maturity, state_of(e), e.mc);
  if (!std::isfinite(est.mean)) return kExitNumerical;
  if (e.format == "csv") {
    std::ostringstream os;
    os << "mean,std_error,paths\n"
       << f17(est.mean) << "," << f17(est.std_error) << "," << est.paths << "\n";
    emit(e, os.str());
  } else {
    std::string extra = "  \"mc\": {\"mean\": " + f17(est.mean) +
                        ", \"std_error\": " + f17(est.std_error) +
                        ", \"paths\": " + std::to_string(est.paths) + "}";
    emit(e, envelope(e, *e.maturity, "null", "null", "null", "null", "null", extra));
  }
  return kExitOk;
}

int cmd_verify(const std::string& suite) {
  auto results = verify_suite(suite);  // throws invalid_argument when unknown
  bool all = true;
  for (const auto& r : results) {
    std::printf("%s  [%s] %s  (observed %.6g, required %s)\n",
                r.pass ? "PASS" : "FAIL", r.suite.c_str(), r.name.c_str(), r.observed,
                r.criterion.c_str());
    all = all && r.pass;
  }
  return all ? kExitOk : kExitIdentity;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kolmex: intrinsic asymptotic expansions for degenerate Kolmogorov diffusions"};
  app.require_subcommand(1);

  ExperimentFlags price_flags, conv_flags, mc_flags;

  auto* price_cmd = app.add_subcommand("price", "N-th order expansion at one state");
  price_flags.attach(price_cmd, /*with_mc=*/false);
  price_cmd->add_option("--N", price_flags.v.N, "expansion order");

  auto* conv_cmd = app.add_subcommand("converge", "convergence study over a theta grid");
  conv_flags.attach(conv_cmd, /*with_mc=*/true);
  conv_cmd->add_option("--orders", conv_flags.v.orders, "orders N to study");
  conv_cmd->add_option("--thetas", conv_flags.v.thetas,
                       "time-to-maturity grid, strictly decreasing");
  conv_cmd->add_flag("--self-consistency", conv_flags.v.self_consistency,
                     "fit |U_{N+1} - U_N| instead of |U_N - MC|");
  conv_cmd->add_option("--fix-moneyness", conv_flags.moneyness_flag,
                       "hold the normalized moneyness fixed across the grid");

  auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo oracle price");
  mc_flags.attach(mc_cmd, /*with_mc=*/true);

  std::string suite;
  auto* verify_cmd = app.add_subcommand("verify", "identity and property suites");
  verify_cmd->add_option("suite", suite, "geometry | kernel | algebra | taylor | all")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& h) {
    return app.exit(h);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitConfig;
  }

  try {
    if (price_cmd->parsed()) {
      price_flags.merge_config();
      return cmd_price(price_flags.v);
    }
    if (conv_cmd->parsed()) {
      conv_flags.merge_config();
      return cmd_converge(conv_flags.v);
    }
    if (mc_cmd->parsed()) {
      mc_flags.merge_config();
      return cmd_mc(mc_flags.v);
    }
    if (verify_cmd->parsed()) return cmd_verify(suite);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& err) {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}
