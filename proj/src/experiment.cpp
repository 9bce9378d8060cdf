#include "dgfa/experiment.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace dgfa {

using nlohmann::json;

FactorDynamics pollution_dynamics() {
  Matrix A(2, 2), Q(2, 2);
  A << 0.9692, -0.0442,  //
      0.2582, 0.7707;
  Q << 0.1682, 0.2806,  //
      0.2806, 0.7531;
  return FactorDynamics(A, Q);
}

LoadingGenerator pollution_loadings() { return LoadingGenerator::alternating(2); }

// The noise of square l is (0.5 / 4) times the sum over the four sensors of
// square l - 1 plus unit white noise.
NoiseModel pollution_noise() { return NoiseModel::square_coupled(4, 0.5); }

TruncatedModel build_pollution_model(std::size_t N) {
  if (N < 4 || N % 4 != 0) {
    throw Error(ErrorKind::InvalidDimension, "pollution model needs N to be a positive multiple of 4, got " +
                                                 std::to_string(N));
  }
  return truncate(pollution_dynamics(), pollution_loadings(), pollution_noise(), N);
}

ModelSpec pollution_spec() {
  return ModelSpec{"pollution", pollution_dynamics(), pollution_loadings(), pollution_noise(), true};
}

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); }

Matrix parse_matrix(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) config_error(std::string(what) + " must be a nonempty array");
  if (j.front().is_array()) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Matrix M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const json& row = j[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
        config_error(std::string(what) + " has ragged rows");
      }
      for (Eigen::Index c = 0; c < cols; ++c) M(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return M;
  }
  const auto len = j.size();
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(len))));
  if (n * n != len) config_error(std::string(what) + " flat array length is not a perfect square");
  Matrix M(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < len; ++k) {
    M(static_cast<Eigen::Index>(k / n), static_cast<Eigen::Index>(k % n)) = j[k].get<double>();
  }
  return M;
}

LoadingGenerator parse_loadings(const json& j, std::size_t n) {
  const std::string rule = j.at("rule").get<std::string>();
  if (rule == "alternating") return LoadingGenerator::alternating(j.value("n", n));
  if (rule == "ones") return LoadingGenerator::ones();
  if (rule == "ramp") return LoadingGenerator::ramp();
  if (rule == "geometric") return LoadingGenerator::geometric(j.value("ratio", 2.0));
  if (rule == "perturbed_pair") return LoadingGenerator::perturbed_pair(j.value("eps", 1.0));
  if (rule == "zero") return LoadingGenerator::zero(j.value("n", n));
  if (rule == "cyclic") return LoadingGenerator::cyclic("cyclic", parse_matrix(j.at("pattern"), "pattern"));
  config_error("unknown loading rule '" + rule + "'");
}

NoiseModel parse_noise(const json& j) {
  const std::string rule = j.at("rule").get<std::string>();
  if (rule == "identity") return NoiseModel::identity();
  if (rule == "scaled_identity") return NoiseModel::scaled_identity(j.at("variance").get<double>());
  if (rule == "diagonal_ramp") return NoiseModel::diagonal_ramp();
  if (rule == "exponential") return NoiseModel::exponential(j.at("rho").get<double>(), j.value("variance", 1.0));
  if (rule == "square_coupled") {
    return NoiseModel::square_coupled(j.value("group", std::size_t{4}), j.value("coupling", 0.5));
  }
  config_error("unknown noise rule '" + rule + "'");
}

void check_keys(const json& j, const std::set<std::string>& allowed, const char* where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) config_error(std::string("unknown key '") + key + "' in " + where);
  }
}

std::string fmt_short(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

ModelSpec parse_model_spec(const json& j) {
  try {
    if (!j.is_object()) config_error("model spec must be a JSON object");
    check_keys(j, {"name", "A", "Q", "loadings", "noise"}, "model spec");
    const Matrix A = parse_matrix(j.at("A"), "A");
    const Matrix Q = parse_matrix(j.at("Q"), "Q");
    FactorDynamics dynamics(A, Q);
    LoadingGenerator loadings = parse_loadings(j.at("loadings"), dynamics.n());
    NoiseModel noise = parse_noise(j.at("noise"));
    return ModelSpec{j.value("name", std::string("custom")), std::move(dynamics), std::move(loadings),
                     std::move(noise), false};
  } catch (const json::exception& e) {
    config_error(std::string("model spec: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    config_error(std::string("model spec: ") + e.what());
  }
}

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  try {
    if (!j.is_object()) config_error("config must be a JSON object");
    check_keys(j, {"model", "N_list", "T", "seed", "burn_in", "initial", "tolerances", "output_path", "timing"},
               "config");
    if (j.contains("model")) {
      const json& m = j.at("model");
      if (m.is_string()) {
        if (m.get<std::string>() != "pollution") config_error("model must be \"pollution\" or {\"custom\": ...}");
        cfg.model = pollution_spec();
      } else if (m.is_object() && m.contains("custom")) {
        const json& custom = m.at("custom");
        if (custom.is_string()) {
          std::filesystem::path p = custom.get<std::string>();
          if (p.is_relative()) p = base_dir / p;
          std::ifstream in(p);
          if (!in) config_error("cannot open model spec " + p.string());
          cfg.model = parse_model_spec(json::parse(in));
        } else {
          cfg.model = parse_model_spec(custom);
        }
      } else {
        config_error("model must be \"pollution\" or {\"custom\": ...}");
      }
    }
    if (j.contains("N_list")) cfg.N_list = j.at("N_list").get<std::vector<std::size_t>>();
    cfg.T = j.value("T", cfg.T);
    if (j.contains("seed")) {
      const json& s = j.at("seed");
      cfg.seed = s.is_string() ? std::stoull(s.get<std::string>()) : s.get<std::uint64_t>();
    }
    cfg.burn_in = j.value("burn_in", cfg.burn_in);
    if (j.contains("initial")) {
      const std::string init = j.at("initial").get<std::string>();
      if (init == "stationary") {
        cfg.initial = InitialState::stationary;
      } else if (init == "zero") {
        cfg.initial = InitialState::zero;
      } else {
        config_error("initial must be \"stationary\" or \"zero\"");
      }
    }
    if (j.contains("tolerances")) {
      const json& t = j.at("tolerances");
      check_keys(t, {"abs", "rel", "rel_change", "max_iter", "stability_margin"}, "tolerances");
      cfg.tol.abs = t.value("abs", cfg.tol.abs);
      cfg.tol.rel = t.value("rel", cfg.tol.rel);
      cfg.tol.rel_change = t.value("rel_change", cfg.tol.rel_change);
      cfg.tol.max_iter = t.value("max_iter", cfg.tol.max_iter);
      cfg.tol.stability_margin = t.value("stability_margin", cfg.tol.stability_margin);
    }
    cfg.output_path = j.value("output_path", cfg.output_path);
    cfg.timing = j.value("timing", cfg.timing);
  } catch (const json::exception& e) {
    config_error(e.what());
  } catch (const std::invalid_argument& e) {
    config_error(std::string("bad seed: ") + e.what());
  } catch (const std::out_of_range& e) {
    config_error(std::string("bad seed: ") + e.what());
  }

  if (cfg.N_list.empty()) config_error("N_list must be nonempty");
  for (std::size_t k = 0; k < cfg.N_list.size(); ++k) {
    if (cfg.N_list[k] == 0) config_error("N_list entries must be positive");
    if (k > 0 && cfg.N_list[k] <= cfg.N_list[k - 1]) config_error("N_list must be strictly increasing");
    if (cfg.model.is_pollution && cfg.N_list[k] % 4 != 0) {
      config_error("pollution model requires every N to be a multiple of 4");
    }
  }
  if (cfg.T == 0) config_error("T must be positive");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, e.what());
  }
  return parse_config(j, path.parent_path());
}

std::string format_double(double x) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

std::uint64_t derive_seed(std::uint64_t seed, std::size_t N) {
  const auto n64 = static_cast<std::uint64_t>(N);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(n64), static_cast<std::uint32_t>(n64 >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

namespace {

void write_row(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) os << ',';
    os << cells[k];
  }
  os << '\n';
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (!(v[k] < v[k - 1])) return false;
  }
  return true;
}

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (!(v[k] > v[k - 1])) return false;
  }
  return true;
}

// Mean of a scalar series and its batch-means standard error.
std::pair<double, double> mean_with_se(const Vector& series, std::size_t batches = 20) {
  const double mean = series.mean();
  const auto per = series.size() / static_cast<Eigen::Index>(batches);
  if (per == 0) return {mean, NAN};
  Vector bm(static_cast<Eigen::Index>(batches));
  for (std::size_t b = 0; b < batches; ++b) bm(static_cast<Eigen::Index>(b)) = series.segment(static_cast<Eigen::Index>(b) * per, per).mean();
  const double B = static_cast<double>(batches);
  const double var = (bm.array() - bm.mean()).square().sum() / (B - 1.0);
  return {mean, std::sqrt(var / B)};
}

}  // namespace

std::vector<std::string> sweep_csv_header(bool timing) {
  std::vector<std::string> h{"N",
                             "status",
                             "norm_P_minus_Q",
                             "bound_P_minus_Q",
                             "lambda_max_CPCt",
                             "lambda_max_Lambda",
                             "norm_Qtilde_minus_AQAt",
                             "norm_Sigma_pred_minus_inf",
                             "trace_P",
                             "norm_Pi",
                             "trace_Pi",
                             "bound_trace_Pi",
                             "norm_Lambda_hat",
                             "norm_R",
                             "delta_hat_euclid",
                             "delta_hat_inf",
                             "riccati_residual",
                             "closed_loop_radius"};
  if (timing) h.emplace_back("runtime_ms");
  return h;
}

int cmd_sweep(const ExperimentConfig& config, std::ostream& csv, std::ostream* log) {
  const auto header = sweep_csv_header(config.timing);
  write_row(csv, header);
  const SolveOptions options{config.tol, false};
  std::size_t failed = 0;
  std::vector<double> norm_pi, lambda_cpc;
  for (const std::size_t N : config.N_list) {
    const auto start = std::chrono::steady_clock::now();
    const auto entries = asymptotic_sweep(config.model.dynamics, config.model.loadings, config.model.noise, {N}, options);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    const SweepEntry& e = entries.front();
    std::vector<std::string> cells{std::to_string(N)};
    if (e.error) {
      ++failed;
      cells.emplace_back(to_string(e.error->kind()));
      cells.resize(header.size() - (config.timing ? 1 : 0));
    } else {
      const PredictorRow& p = *e.predictor;
      const FilterRow& f = *e.filter;
      cells.emplace_back("ok");
      for (double v : {p.norm_P_minus_Q, p.bound_P_minus_Q, p.lambda_max_CPCt, p.lambda_max_Lambda,
                       p.norm_Qtilde_minus_AQAt, p.norm_Sigma_pred_minus_inf, p.trace_P, f.norm_Pi, f.trace_Pi,
                       f.bound_trace_Pi, f.norm_Lambda_hat, f.norm_R, f.delta_hat_euclid, f.delta_hat_inf,
                       p.riccati_residual, p.closed_loop_radius}) {
        cells.push_back(format_double(v));
      }
      norm_pi.push_back(f.norm_Pi);
      lambda_cpc.push_back(p.lambda_max_CPCt);
    }
    if (config.timing) cells.push_back(format_double(std::round(ms * 1000.0) / 1000.0));
    write_row(csv, cells);
  }

  if (log) {
    *log << "sweep " << config.model.name << ": " << config.N_list.size() << " rows, " << failed << " failed";
    if (norm_pi.size() >= 2) {
      *log << "; filter error norm_Pi decreasing: " << (strictly_decreasing(norm_pi) ? "yes" : "no") << " (x"
           << fmt_short(norm_pi.back() / norm_pi.front()) << ")";
      *log << "; lambda_max(C P C') growing: " << (strictly_increasing(lambda_cpc) ? "yes" : "no") << " (x"
           << fmt_short(lambda_cpc.back() / lambda_cpc.front()) << ")";
    }
    *log << '\n';
  }
  return failed ? kExitNumerical : kExitOk;
}

std::vector<std::string> simulate_csv_header(std::size_t n) {
  std::vector<std::string> h{"N",           "status",         "T",           "burn_in",
                             "seed",        "trace_P",        "trace_Pi",    "emp_pred_mse",
                             "emp_pred_mse_se", "emp_filt_mse", "emp_filt_mse_se", "emp_pred_err_norm",
                             "emp_filt_err_norm"};
  for (std::size_t i = 1; i <= n; ++i) {
    const std::string k = std::to_string(i);
    h.push_back("P_" + k + k);
    h.push_back("emp_pred_mse_" + k);
    h.push_back("Pi_" + k + k);
    h.push_back("emp_filt_mse_" + k);
  }
  return h;
}

int cmd_simulate(const ExperimentConfig& config, std::ostream& csv, std::ostream* log) {
  if (config.T < 10 * config.burn_in) {
    throw Error(ErrorKind::ConfigError, "simulate requires T >= 10 * burn_in");
  }
  if (config.T - config.burn_in < 40) throw Error(ErrorKind::ConfigError, "simulate needs at least 40 samples after burn-in");
  const std::size_t n = config.model.dynamics.n();
  const auto header = simulate_csv_header(n);
  write_row(csv, header);
  const SolveOptions options{config.tol, false};
  std::size_t failed = 0;
  std::vector<double> pred_mse, filt_mse;

  for (const std::size_t N : config.N_list) {
    const std::uint64_t seed = derive_seed(config.seed, N);
    std::vector<std::string> cells{std::to_string(N)};
    try {
      const TruncatedModel tm = truncate(config.model.dynamics, config.model.loadings, config.model.noise, N);
      const PredictorSolution pred = predictor_solution(tm, options);
      const FilterSolution filt = filter_solution(tm, pred);
      const Trajectory traj = simulate(tm, config.T, seed, SimulationOptions{config.initial});
      const EstimateSeries ps = run_predictor(tm, pred, traj);
      const EstimateSeries fs = run_filter(tm, pred, filt, traj);

      const auto used = static_cast<Eigen::Index>(config.T - config.burn_in);
      const Matrix pred_err = (traj.states - ps.estimates).bottomRows(used);
      const Matrix filt_err = (traj.states - fs.estimates).bottomRows(used);
      const auto [pm, pse] = mean_with_se(pred_err.rowwise().squaredNorm());
      const auto [fm, fse] = mean_with_se(filt_err.rowwise().squaredNorm());

      cells.insert(cells.end(), {"ok", std::to_string(config.T), std::to_string(config.burn_in), std::to_string(seed),
                                 format_double(pred.P.trace()), format_double(filt.Pi.trace()), format_double(pm),
                                 format_double(pse), format_double(fm), format_double(fse),
                                 format_double(pred_err.rowwise().norm().mean()),
                                 format_double(filt_err.rowwise().norm().mean())});
      for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<Eigen::Index>(i);
        cells.push_back(format_double(pred.P(c, c)));
        cells.push_back(format_double(pred_err.col(c).squaredNorm() / static_cast<double>(used)));
        cells.push_back(format_double(filt.Pi(c, c)));
        cells.push_back(format_double(filt_err.col(c).squaredNorm() / static_cast<double>(used)));
      }
      pred_mse.push_back(pm);
      filt_mse.push_back(fm);
    } catch (const Error& e) {
      ++failed;
      cells.emplace_back(to_string(e.kind()));
      cells.resize(header.size());
    }
    write_row(csv, cells);
  }

  if (log) {
    *log << "simulate " << config.model.name << ": " << config.N_list.size() << " rows, " << failed << " failed";
    if (pred_mse.size() >= 2) {
      *log << "; predictor mse " << fmt_short(pred_mse.front()) << " -> " << fmt_short(pred_mse.back())
           << "; filter mse " << fmt_short(filt_mse.front()) << " -> " << fmt_short(filt_mse.back());
    }
    *log << '\n';
  }
  return failed ? kExitNumerical : kExitOk;
}

int cmd_diagnose(const ExperimentConfig& config, std::ostream& report) {
  const ModelSpec& m = config.model;
  report << "model: " << m.name << " (n = " << m.dynamics.n() << ", loadings = " << m.loadings.name()
         << ", noise = " << m.noise.name() << ")\n";

  const ValidationReport v = validate(m.dynamics, m.loadings, m.noise, config.N_list.back());
  report << "\nassumptions (probe N = " << config.N_list.back() << "):\n";
  for (const auto& c : v.checks) {
    report << "  [" << (c.passed ? "PASS" : "FAIL") << "] " << c.name << ": " << c.detail << '\n';
  }
  report << "  overall: " << (v.all_passed() ? "all pass" : "some checks failed") << '\n';

  report << "\nstrong linear independence of loading columns:\n";
  try {
    const DiagnosticsProfile p = strong_independence_profile(m.loadings, config.N_list);
    report << "  N  lambda_min(C'C)  residual_norms\n";
    for (std::size_t k = 0; k < p.N_list.size(); ++k) {
      report << "  " << p.N_list[k] << "  " << fmt_short(p.lambda_min_CtC[k]) << " ";
      for (const double r : p.residual_norms[k]) report << " " << fmt_short(r);
      report << '\n';
    }
    report << "  verdict lambda_min: " << to_string(p.verdict_lambda_min)
           << ", residuals: " << to_string(p.verdict_residual)
           << ", strong independence: " << to_string(p.verdict_strong_indep) << '\n';
  } catch (const Error& e) {
    report << "  error: " << e.what() << '\n';
  }

  report << "\nidiosyncrasy of the output noise:\n";
  try {
    const DiagnosticsProfile p = idiosyncrasy_profile(m.noise, config.N_list);
    report << "  N  ||R_N||\n";
    for (std::size_t k = 0; k < p.N_list.size(); ++k) {
      report << "  " << p.N_list[k] << "  " << fmt_short(p.noise_norms[k]) << '\n';
    }
    report << "  verdict: " << to_string(p.verdict_idiosyncratic)
           << (p.verdict_idiosyncratic == Verdict::bounded ? " (idiosyncratic)" : "") << '\n';
  } catch (const Error& e) {
    report << "  error: " << e.what() << '\n';
  }
  return kExitOk;
}

}  // namespace dgfa
