#include "robust_huber/experiments.hpp"

#include "robust_huber/datagen.hpp"
#include "robust_huber/lowerbound.hpp"
#include "robust_huber/parallel.hpp"
#include "robust_huber/verification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>

namespace rh {

// ---------------------------------------------------------------- CSV

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string sanitize(std::string s) {
  for (char& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

template <class Map>
std::vector<std::string> key_union(const std::vector<ResultRow>& rows, Map ResultRow::*field) {
  std::set<std::string> keys;
  for (const auto& r : rows)
    for (const auto& kv : r.*field) keys.insert(kv.first);
  return {keys.begin(), keys.end()};
}

}  // namespace

std::string format_csv(const std::vector<ResultRow>& rows) {
  auto pkeys = key_union(rows, &ResultRow::point);
  auto mkeys = key_union(rows, &ResultRow::metrics);
  auto fkeys = key_union(rows, &ResultRow::flags);
  std::set<std::string> seen{"scenario", "trial", "iterations", "wall_ms", "error"};
  for (const auto* keys : {&pkeys, &mkeys, &fkeys})
    for (const auto& k : *keys) {
      if (!seen.insert(k).second) throw PreconditionError("csv: column name '" + k + "' is used twice");
      if (k.empty() || k.find_first_of(",\n\r") != std::string::npos)
        throw PreconditionError("csv: invalid column name '" + k + "'");
    }
  std::ostringstream os;
  os << "scenario";
  for (const auto& k : pkeys) os << ',' << k;
  os << ",trial";
  for (const auto& k : mkeys) os << ',' << k;
  os << ",iterations";
  for (const auto& k : fkeys) os << ',' << k;
  os << ",wall_ms,error\n";
  for (const auto& r : rows) {
    os << sanitize(r.scenario);
    for (const auto& k : pkeys) {
      auto it = r.point.find(k);
      os << ',' << (it == r.point.end() ? "" : format_double(it->second));
    }
    os << ',' << r.trial;
    for (const auto& k : mkeys) {
      auto it = r.metrics.find(k);
      os << ',' << (it == r.metrics.end() ? "" : format_double(it->second));
    }
    os << ',' << r.iterations;
    for (const auto& k : fkeys) {
      auto it = r.flags.find(k);
      os << ',' << (it == r.flags.end() ? "" : (it->second ? "1" : "0"));
    }
    os << ',' << format_double(r.wall_ms) << ',' << sanitize(r.error) << '\n';
  }
  return os.str();
}

std::vector<ResultRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv: missing header");
  auto header = split(line, ',');
  auto pos = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("csv: header lacks column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t i_trial = pos("trial"), i_iter = pos("iterations"), i_wall = pos("wall_ms"), i_err = pos("error");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != header.size()) throw ConfigError("csv: ragged row");
    ResultRow r;
    r.scenario = cells[0];
    for (std::size_t i = 1; i < i_trial; ++i)
      if (!cells[i].empty()) r.point[header[i]] = parse_number(cells[i], "csv " + header[i]);
    r.trial = static_cast<int>(parse_number(cells[i_trial], "csv trial"));
    for (std::size_t i = i_trial + 1; i < i_iter; ++i)
      if (!cells[i].empty()) r.metrics[header[i]] = parse_number(cells[i], "csv " + header[i]);
    r.iterations = static_cast<long long>(parse_number(cells[i_iter], "csv iterations"));
    for (std::size_t i = i_iter + 1; i < i_wall; ++i)
      if (!cells[i].empty()) r.flags[header[i]] = cells[i] == "1";
    r.wall_ms = parse_number(cells[i_wall], "csv wall_ms");
    r.error = cells[i_err];
    rows.push_back(std::move(r));
  }
  return rows;
}

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write csv '" + path + "'");
  f << format_csv(rows);
  if (!f) throw std::runtime_error("write failed for csv '" + path + "'");
}

// ---------------------------------------------------------------- spec

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::regression_n_sweep: return "regression_n_sweep";
    case Scenario::regression_alpha_sweep: return "regression_alpha_sweep";
    case Scenario::regression_gaussian_design: return "regression_gaussian_design";
    case Scenario::pca_n_sweep: return "pca_n_sweep";
    case Scenario::pca_alpha_sweep: return "pca_alpha_sweep";
    case Scenario::matrix_completion: return "matrix_completion";
    case Scenario::lowerbound_phase: return "lowerbound_phase";
    case Scenario::meta_certificate: return "meta_certificate";
  }
  return "unknown";
}

Scenario scenario_from_string(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(Scenario::meta_certificate); ++i)
    if (to_string(static_cast<Scenario>(i)) == s) return static_cast<Scenario>(i);
  throw ConfigError("unknown scenario '" + s + "'");
}

void ExperimentSpec::validate() const {
  if (grid.empty()) throw ConfigError("experiment: grid is empty");
  for (const auto& kv : grid)
    if (kv.second.empty()) throw ConfigError("experiment: grid key '" + kv.first + "' has no values");
  if (trials_per_point < 1) throw ConfigError("experiment: trials_per_point must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("experiment: delta must lie in (0,1)");
  if (threads < 1) throw ConfigError("experiment: threads must be >= 1");
}

double ExperimentSpec::param(const GridPoint& point, const std::string& key) const {
  if (auto it = point.find(key); it != point.end()) return it->second;
  if (auto it = params.find(key); it != params.end()) return it->second;
  throw ConfigError("experiment: parameter '" + key + "' is not set");
}

double ExperimentSpec::param(const GridPoint& point, const std::string& key, double fallback) const {
  if (auto it = point.find(key); it != point.end()) return it->second;
  if (auto it = params.find(key); it != params.end()) return it->second;
  return fallback;
}

std::string ExperimentSpec::option(const std::string& key, const std::string& fallback) const {
  auto it = options.find(key);
  return it == options.end() ? fallback : it->second;
}

ExperimentSpec spec_from_config(const Config& cfg) {
  ExperimentSpec s;
  s.scenario = scenario_from_string(cfg.get("experiment", "scenario"));
  s.trials_per_point = static_cast<int>(cfg.get_int("experiment", "trials_per_point", 1));
  double seed = cfg.get_double("experiment", "seed", 0.0);
  if (seed < 0 || seed != std::floor(seed)) throw ConfigError("experiment: seed must be a non-negative integer");
  s.seed = Seed{static_cast<std::uint64_t>(std::stoull(cfg.get("experiment", "seed", "0")))};
  s.delta = cfg.get_double("experiment", "delta", 0.05);
  s.threads = static_cast<int>(cfg.get_int("experiment", "threads", 1));
  s.record_timing = cfg.get_int("experiment", "record_timing", 0) != 0;
  for (const auto& kv : cfg.section("grid")) s.grid[kv.first] = cfg.get_list("grid", kv.first);
  for (const auto& kv : cfg.section("params")) s.params[kv.first] = cfg.get_double("params", kv.first);
  for (const auto& kv : cfg.section("options")) s.options[kv.first] = kv.second;
  for (const auto& kv : cfg.section("assert")) s.asserts[kv.first] = cfg.get_double("assert", kv.first);

  s.constants.gamma_scale = cfg.get_double("estimator", "gamma_scale", 100.0);
  if (cfg.has("estimator", "huber_h")) s.constants.huber_h_override = cfg.get_double("estimator", "huber_h");
  if (cfg.has("estimator", "gamma")) s.constants.gamma_override = cfg.get_double("estimator", "gamma");

  s.solver.max_iters = static_cast<int>(cfg.get_int("solver", "max_iters", s.solver.max_iters));
  s.solver.rel_tol = cfg.get_double("solver", "rel_tol", s.solver.rel_tol);
  s.solver.initial_step = cfg.get_double("solver", "initial_step", s.solver.initial_step);
  s.solver.backtrack_factor = cfg.get_double("solver", "backtrack_factor", s.solver.backtrack_factor);
  s.solver.objective_reference_margin =
      cfg.get_double("solver", "objective_reference_margin", s.solver.objective_reference_margin);

  s.validate();
  try {
    s.constants.validate();
    s.solver.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  return s;
}

std::vector<GridPoint> expand_grid(const ExperimentSpec& spec) {
  std::vector<GridPoint> points{GridPoint{}};
  for (const auto& [key, values] : spec.grid) {
    std::vector<GridPoint> next;
    for (const auto& p : points)
      for (double v : values) {
        GridPoint q = p;
        q[key] = v;
        next.push_back(q);
      }
    points = std::move(next);
  }
  return points;
}

Seed trial_seed(const ExperimentSpec& spec, const GridPoint& point, int trial) {
  // FNV-1a over the textual point, so a point keeps its streams when the grid around it changes.
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& [k, v] : point) {
    std::string s = k + "=" + format_double(v) + ";";
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ull;
    }
  }
  return derive(derive(spec.seed, h), static_cast<std::uint64_t>(trial));
}

// ---------------------------------------------------------------- instances

namespace {

Index as_index(double v, const char* name) {
  if (v < 0 || v != std::floor(v)) throw ConfigError(std::string("parameter '") + name + "' must be a non-negative integer");
  return static_cast<Index>(v);
}

NoiseSpec noise_from(const ExperimentSpec& spec, const GridPoint& point, const std::string& fallback_family) {
  NoiseSpec ns;
  ns.family = noise_family_from_string(spec.option("noise", fallback_family));
  ns.alpha = spec.param(point, "alpha");
  ns.zeta = spec.param(point, "zeta", 1.0);
  ns.outlier_scale = spec.param(point, "outlier_scale", 100.0);
  return ns;
}

}  // namespace

RegressionProblem make_regression_instance(const ExperimentSpec& spec, const GridPoint& point, int trial) {
  Seed ts = trial_seed(spec, point, trial);
  const Index n = as_index(spec.param(point, "n"), "n");
  const Index d = as_index(spec.param(point, "d"), "d");
  const Index k = as_index(spec.param(point, "k"), "k");
  const double magnitude = spec.param(point, "magnitude", 1.0);
  bool gaussian_design = spec.scenario == Scenario::regression_gaussian_design;
  std::string design = spec.option("design", gaussian_design ? "toeplitz" : "identity");
  Matrix sigma = design == "toeplitz" ? toeplitz_covariance(d, spec.param(point, "design_corr", 0.5))
                                      : Matrix(Matrix::Identity(d, d));
  if (design != "toeplitz" && design != "identity") throw ConfigError("unknown design '" + design + "'");

  RegressionProblem p;
  p.X = gen_gaussian_design(n, d, sigma, derive(ts, 1));
  auto [beta, support] = gen_sparse_signal(d, k, magnitude, derive(ts, 2));
  NoiseSpec ns = noise_from(spec, point, gaussian_design ? "deterministic_sparse_outliers" : "symmetric_mixture");
  Vector eta = ns.family == NoiseFamily::deterministic_sparse_outliers
                   ? gen_deterministic_outlier_noise(n, ns.alpha, derive(ts, 3))
                   : gen_oblivious_noise_vector(n, ns, derive(ts, 3));
  p.y = p.X * beta + eta;
  p.truth = SparseTruth{beta, support, k};
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
  DesignProps props;
  props.lambda = es.eigenvalues()[0] / 4.0;
  props.nu = sigma.diagonal().maxCoeff();
  props.m = static_cast<Index>(std::floor(0.001 * static_cast<double>(n)));
  p.design = props;
  return p;
}

PcaProblem make_pca_instance(const ExperimentSpec& spec, const GridPoint& point, int trial) {
  Seed ts = trial_seed(spec, point, trial);
  const Index n = as_index(spec.param(point, "n"), "n");
  const Index r = as_index(spec.param(point, "r"), "r");
  const double rho_over_n = spec.param(point, "rho_over_n", 1.0);
  const double zeta = spec.param(point, "zeta", 1.0);
  if (spec.scenario == Scenario::matrix_completion)
    return gen_matrix_completion_scenario(n, r, spec.param(point, "alpha"), zeta, rho_over_n, ts);
  // signal_scale < 1 leaves room inside the max-norm box around L*.
  const double signal_scale = spec.param(point, "signal_scale", 1.0);
  PcaProblem p;
  p.rho_over_n = rho_over_n;
  p.zeta = zeta;
  Matrix L = gen_flat_lowrank(n, r, signal_scale * rho_over_n, derive(ts, 1));
  NoiseSpec ns = noise_from(spec, point, "symmetric_mixture");
  p.Y = L + gen_oblivious_noise_matrix(n, n, ns, derive(ts, 2));
  p.truth = LowRankTruth{L, r};
  return p;
}

// ---------------------------------------------------------------- runners

namespace {

void regression_row(const ExperimentSpec& spec, const GridPoint& point, int trial, ResultRow& row) {
  RegressionProblem p = make_regression_instance(spec, point, trial);
  RegressionFit fit = estimate_sparse_regression(p, spec.constants, spec.solver);
  const double n = static_cast<double>(p.n()), d = static_cast<double>(p.d());
  const double alpha = spec.param(point, "alpha");
  row.metrics["prediction_error"] = prediction_error(p, fit.beta);
  row.metrics["parameter_error"] = parameter_error(p, fit.beta);
  row.metrics["rate_bound"] = static_cast<double>(p.truth->k) * std::log(d) / (alpha * alpha * n);
  row.metrics["gamma"] = fit.gamma;
  row.metrics["objective"] = fit.solve.objective;
  row.metrics["residual"] = fit.solve.residual;
  row.iterations = fit.solve.iterations;
  row.flags["certified"] = fit.certified.value_or(false);
  row.flags["converged"] = fit.solve.converged;
}

void pca_row(const ExperimentSpec& spec, const GridPoint& point, int trial, ResultRow& row) {
  PcaProblem p = make_pca_instance(spec, point, trial);
  PcaFit fit = estimate_pca(p, spec.constants, spec.solver);
  const double n = static_cast<double>(p.n()), r = static_cast<double>(p.truth->r);
  const double alpha = spec.param(point, "alpha");
  double err = frobenius_error(p, fit.L);
  row.metrics["frobenius_error"] = err;
  row.metrics["relative_error"] = err / (n * p.rho_over_n);
  row.metrics["rate_bound"] = std::sqrt(r * n) / alpha * (p.zeta + p.rho_over_n);
  row.metrics["gamma"] = fit.gamma;
  row.metrics["objective"] = fit.solve.objective;
  row.metrics["residual"] = fit.solve.residual;
  row.iterations = fit.solve.iterations;
  row.flags["certified"] = fit.certified.value_or(false);
  row.flags["converged"] = fit.solve.converged;
}

void lowerbound_row(const ExperimentSpec& spec, const GridPoint& point, int trial, ResultRow& row) {
  LowerBoundSpec lb;
  lb.n = as_index(spec.param(point, "n"), "n");
  lb.r = as_index(spec.param(point, "r", 1.0), "r");
  lb.epsilon = spec.param(point, "epsilon", 0.5);
  lb.trials = spec.trials_per_point;
  double alpha = point.count("alpha_multiplier")
                     ? spec.param(point, "alpha_multiplier") *
                           std::sqrt(static_cast<double>(lb.r) / static_cast<double>(lb.n))
                     : spec.param(point, "alpha");
  // The signal/noise streams hang off the point-independent base seed so every alpha sees the same L*.
  ResultRow r = run_lb_trial(lb, alpha, trial, derive(spec.seed, 0x1b), spec.constants, spec.solver);
  row.metrics = r.metrics;
  row.metrics["alpha"] = alpha;
  row.flags = r.flags;
  row.iterations = r.iterations;
}

void certificate_row(const ExperimentSpec& spec, const GridPoint& point, int trial, ResultRow& row) {
  CertificateOptions opts;
  opts.trials = static_cast<int>(spec.param(point, "cert_trials", 1000));
  opts.re_trials = static_cast<int>(spec.param(point, "re_trials", 1000));
  opts.decomposability_trials = static_cast<int>(spec.param(point, "decomposability_trials", 100));
  opts.seed = derive(trial_seed(spec, point, trial), 99);
  opts.delta = spec.delta;
  opts.alpha = spec.param(point, "alpha");
  MetaCertificate c;
  std::string kind = spec.option("problem", "regression");
  if (kind == "regression") {
    RegressionProblem p = make_regression_instance(spec, point, trial);
    RegressionFit fit = estimate_sparse_regression(p, spec.constants, spec.solver);
    row.iterations = fit.solve.iterations;
    c = assemble_certificate(p, fit, opts);
  } else if (kind == "pca") {
    PcaProblem p = make_pca_instance(spec, point, trial);
    PcaFit fit = estimate_pca(p, spec.constants, spec.solver);
    row.iterations = fit.solve.iterations;
    c = assemble_certificate(p, fit, opts);
  } else {
    throw ConfigError("meta_certificate: option problem must be regression or pca");
  }
  row.metrics["gamma"] = c.gamma;
  row.metrics["gamma_measured"] = c.gamma_measured;
  row.metrics["s"] = c.s;
  row.metrics["s_measured"] = c.s_measured;
  row.metrics["kappa"] = c.kappa;
  row.metrics["R"] = c.R;
  row.metrics["estimation_error"] = c.error;
  row.metrics["cone_ratio"] = c.cone_ratio;
  row.metrics["kappa_nominal"] = c.kappa_nominal;
  row.metrics["kappa_at_nominal_radius"] = c.kappa_at_nominal_radius;
  if (kind == "regression") row.metrics["lambda_hat"] = c.lambda_hat;
  row.flags["cond_decomposability"] = c.decomposability;
  row.flags["cond_contraction"] = c.contraction;
  row.flags["cond_gradient_bound"] = c.gradient_bound;
  row.flags["cond_rsc"] = c.rsc;
  row.flags["cond_radius"] = c.radius;
  row.flags["radius_formula_ok"] = c.radius_formula_ok;
  row.flags["nominal_radius_premise"] = c.nominal_radius_premise;
  row.flags["certified"] = c.certified;
  row.flags["cone_membership"] = c.cone_membership;
  row.flags["error_within_radius"] = c.error_within_radius;
  row.flags["contradiction"] = c.contradiction();
}

}  // namespace

ResultRow run_trial(const ExperimentSpec& spec, const GridPoint& point, int trial) {
  ResultRow row;
  row.scenario = to_string(spec.scenario);
  row.point = point;
  row.trial = trial;
  auto t0 = std::chrono::steady_clock::now();
  try {
    switch (spec.scenario) {
      case Scenario::regression_n_sweep:
      case Scenario::regression_alpha_sweep:
      case Scenario::regression_gaussian_design: regression_row(spec, point, trial, row); break;
      case Scenario::pca_n_sweep:
      case Scenario::pca_alpha_sweep:
      case Scenario::matrix_completion: pca_row(spec, point, trial, row); break;
      case Scenario::lowerbound_phase: lowerbound_row(spec, point, trial, row); break;
      case Scenario::meta_certificate: certificate_row(spec, point, trial, row); break;
    }
  } catch (const std::exception& e) {
    // Partial metrics could be misleading next to complete rows.
    row.metrics.clear();
    row.flags.clear();
    row.error = e.what();
  }
  if (spec.record_timing)
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, const std::function<void(const ResultRow&)>& on_row) {
  spec.validate();
  auto points = expand_grid(spec);
  const std::size_t T = static_cast<std::size_t>(spec.trials_per_point);
  std::vector<ResultRow> rows(points.size() * T);
  std::mutex mu;
  parallel_for(rows.size(), spec.threads, [&](std::size_t j) {
    rows[j] = run_trial(spec, points[j / T], static_cast<int>(j % T));
    if (on_row) {
      std::lock_guard<std::mutex> lock(mu);
      on_row(rows[j]);
    }
  });
  return rows;
}

// ---------------------------------------------------------------- analysis

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

namespace {

bool lookup(const ResultRow& r, const std::string& field, double& out) {
  if (auto it = r.point.find(field); it != r.point.end()) return out = it->second, true;
  if (auto it = r.metrics.find(field); it != r.metrics.end()) return out = it->second, true;
  if (auto it = r.flags.find(field); it != r.flags.end()) return out = it->second ? 1.0 : 0.0, true;
  return false;
}

std::map<double, std::vector<double>> group_by(const std::vector<ResultRow>& rows, const std::string& x_field,
                                               const std::string& y_field) {
  std::map<double, std::vector<double>> groups;
  for (const auto& r : rows) {
    if (!r.error.empty()) continue;
    double x, y;
    if (lookup(r, x_field, x) && lookup(r, y_field, y)) groups[x].push_back(y);
  }
  return groups;
}

}  // namespace

SlopeFit fit_loglog_slope(const std::vector<ResultRow>& rows, const std::string& x_field, const std::string& y_field) {
  SlopeFit fit;
  for (auto& [x, ys] : group_by(rows, x_field, y_field)) fit.medians.emplace_back(x, median(ys));
  if (fit.medians.size() < 2) throw PreconditionError("slope fit: need at least two distinct x values");
  std::vector<double> lx, ly;
  for (auto [x, y] : fit.medians) {
    if (!(x > 0.0) || !(y > 0.0)) throw DomainError("slope fit: non-positive value on a log scale");
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
  }
  const double m = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i] / m, my += ly[i] / m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    double e = ly[i] - fit.intercept - fit.slope * lx[i];
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / m);
  return fit;
}

std::string primary_metric(Scenario s) {
  switch (s) {
    case Scenario::regression_n_sweep:
    case Scenario::regression_alpha_sweep:
    case Scenario::regression_gaussian_design: return "prediction_error";
    case Scenario::pca_n_sweep:
    case Scenario::pca_alpha_sweep:
    case Scenario::matrix_completion: return "frobenius_error";
    case Scenario::lowerbound_phase: return "success";
    case Scenario::meta_certificate: return "estimation_error";
  }
  return "";
}

namespace {

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

double assert_or(const ExperimentSpec& spec, const std::string& key, double fallback) {
  auto it = spec.asserts.find(key);
  return it == spec.asserts.end() ? fallback : it->second;
}

std::string sweep_key(const ExperimentSpec& spec) {
  std::string key;
  for (const auto& [k, v] : spec.grid)
    if (v.size() > 1) {
      if (!key.empty()) return "";
      key = k;
    }
  return key;
}

}  // namespace

std::vector<Assertion> evaluate_assertions(const ExperimentSpec& spec, const std::vector<ResultRow>& rows) {
  std::vector<Assertion> out;
  const std::string y = primary_metric(spec.scenario);

  int errors = 0;
  std::string first_error;
  for (const auto& r : rows)
    if (!r.error.empty()) {
      if (!errors) first_error = r.error;
      ++errors;
    }
  out.push_back({"rows_complete", errors == 0,
                 std::to_string(rows.size() - static_cast<std::size_t>(errors)) + "/" + std::to_string(rows.size()) +
                     " rows without error" + (errors ? " (first: " + first_error + ")" : "")});

  if (assert_or(spec, "require_certified", 0) != 0) {
    int bad = 0;
    for (const auto& r : rows)
      if (r.error.empty() && !r.flags.count("certified")) ++bad;
      else if (r.error.empty() && !r.flags.at("certified")) ++bad;
    out.push_back({"certified_against_truth", bad == 0, std::to_string(bad) + " rows where the estimate's objective exceeds the truth's"});
  }

  if (spec.asserts.count("bound_constant")) {
    double C = spec.asserts.at("bound_constant");
    auto errs = group_by(rows, sweep_key(spec).empty() ? "trial" : sweep_key(spec), y);
    auto bounds = group_by(rows, sweep_key(spec).empty() ? "trial" : sweep_key(spec), "rate_bound");
    bool ok = !errs.empty();
    std::string detail;
    for (auto& [x, ys] : errs) {
      double med = median(ys), b = C * median(bounds[x]);
      ok = ok && med <= b;
      detail += sweep_key(spec) + "=" + fmt(x) + ": median " + fmt(med) + " vs " + fmt(b) + "; ";
    }
    out.push_back({"median_within_rate_bound", ok, detail});
  }

  if (spec.asserts.count("slope_min") || spec.asserts.count("slope_max")) {
    std::string x = sweep_key(spec);
    Assertion a{"loglog_slope", false, ""};
    try {
      if (x.empty()) throw PreconditionError("no single swept grid key");
      SlopeFit f = fit_loglog_slope(rows, x, y);
      double lo = assert_or(spec, "slope_min", -1e300), hi = assert_or(spec, "slope_max", 1e300);
      a.pass = f.slope >= lo && f.slope <= hi;
      a.detail = "slope of median " + y + " vs " + x + " = " + fmt(f.slope) + " (allowed [" + fmt(lo) + ", " +
                 fmt(hi) + "], fit rms " + fmt(f.residual, 3) + ")";
    } catch (const std::exception& e) {
      a.detail = e.what();
    }
    out.push_back(a);
  }

  if (spec.scenario == Scenario::lowerbound_phase) {
    std::string x = sweep_key(spec);
    auto groups = group_by(rows, x.empty() ? "alpha" : x, "success");
    std::vector<std::pair<double, double>> frac;
    std::vector<std::size_t> counts;
    for (auto& [a, s] : groups) {
      double m = 0;
      for (double v : s) m += v;
      frac.emplace_back(a, m / static_cast<double>(s.size()));
      counts.push_back(s.size());
    }
    std::string table;
    for (auto [a, f] : frac) table += fmt(a) + ":" + fmt(f, 3) + " ";
    if (spec.asserts.count("success_low_max") && !frac.empty()) {
      double lim = spec.asserts.at("success_low_max");
      out.push_back({"phase_low_alpha_fails", frac.front().second <= lim,
                     "success at lowest alpha " + fmt(frac.front().second, 3) + " <= " + fmt(lim)});
    }
    if (spec.asserts.count("success_high_min") && !frac.empty()) {
      double lim = spec.asserts.at("success_high_min");
      out.push_back({"phase_high_alpha_succeeds", frac.back().second >= lim,
                     "success at highest alpha " + fmt(frac.back().second, 3) + " >= " + fmt(lim)});
    }
    if (spec.asserts.count("monotone_sigma")) {
      double k = spec.asserts.at("monotone_sigma");
      bool ok = true;
      for (std::size_t i = 0; i + 1 < frac.size(); ++i) {
        double p = 0.5 * (frac[i].second + frac[i + 1].second);
        double sd = std::sqrt(p * (1 - p) * (1.0 / counts[i] + 1.0 / counts[i + 1]));
        if (frac[i + 1].second < frac[i].second - k * sd) ok = false;
      }
      out.push_back({"phase_monotone", ok, "success fractions " + table});
    }
  }

  if (spec.scenario == Scenario::meta_certificate && assert_or(spec, "require_all_flags", 0) != 0) {
    int failing = 0, contradictions = 0;
    for (const auto& r : rows) {
      if (!r.error.empty()) {
        ++failing;
        continue;
      }
      bool all = true;
      for (const char* f : {"cond_decomposability", "cond_contraction", "cond_gradient_bound", "cond_rsc", "cond_radius",
                            "cone_membership", "error_within_radius", "certified"})
        all = all && r.flags.count(f) && r.flags.at(f);
      if (!all) ++failing;
      if (r.flags.count("contradiction") && r.flags.at("contradiction")) ++contradictions;
    }
    out.push_back({"certificate_all_flags", failing == 0, std::to_string(failing) + " of " + std::to_string(rows.size()) + " instances with a false flag"});
    out.push_back({"certificate_no_contradiction", contradictions == 0,
                   std::to_string(contradictions) + " instances where conditions hold but the error bound fails"});
  }
  return out;
}

std::string format_report(const ExperimentSpec& spec, const std::vector<ResultRow>& rows,
                          const std::vector<Assertion>& assertions) {
  std::ostringstream os;
  const std::string y = primary_metric(spec.scenario);
  os << "scenario: " << to_string(spec.scenario) << "\n";
  os << "seed: " << spec.seed.value << "\n";
  os << "trials_per_point: " << spec.trials_per_point << "\n";
  os << "gamma_scale: " << format_double(spec.constants.gamma_scale) << "\n";
  os << "noise: " << spec.option("noise", "default") << "\n";
  os << "rows: " << rows.size() << "\n\n";
  std::string x = sweep_key(spec);
  if (!x.empty() && spec.scenario == Scenario::lowerbound_phase) {
    auto errs = group_by(rows, x, "relative_error");
    os << "success fraction and mean relative error by " << x << ":\n";
    for (auto& [xv, ss] : group_by(rows, x, y)) {
      double hits = 0.0, err = 0.0;
      for (double v : ss) hits += v;
      for (double v : errs[xv]) err += v;
      os << "  " << x << "=" << fmt(xv, 6) << "  " << fmt(hits / static_cast<double>(ss.size()), 3) << "  "
         << fmt(err / static_cast<double>(errs[xv].size()), 6) << "\n";
    }
    os << "\n";
  } else if (!x.empty()) {
    os << "median " << y << " by " << x << ":\n";
    for (auto& [xv, ys] : group_by(rows, x, y)) os << "  " << x << "=" << fmt(xv, 6) << "  " << fmt(median(ys), 6) << "\n";
    try {
      SlopeFit f = fit_loglog_slope(rows, x, y);
      os << "loglog slope: " << fmt(f.slope, 6) << " intercept " << fmt(f.intercept, 6) << " rms " << fmt(f.residual, 3)
         << "\n";
    } catch (const std::exception&) {
      os << "loglog slope: n/a\n";
    }
    os << "\n";
  }
  for (const auto& a : assertions) os << (a.pass ? "PASS " : "FAIL ") << a.name << ": " << a.detail << "\n";
  return os.str();
}

void emit_report(const ExperimentSpec& spec, const std::vector<ResultRow>& rows,
                 const std::vector<Assertion>& assertions, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write report '" + path + "'");
  f << format_report(spec, rows, assertions);
}

void emit_gnuplot(const ExperimentSpec& spec, const std::vector<ResultRow>& rows, const std::string& csv_path,
                  const std::string& gp_path) {
  std::string x = sweep_key(spec);
  if (x.empty()) x = "trial";
  std::string y = primary_metric(spec.scenario);
  std::ofstream f(gp_path);
  if (!f) throw std::runtime_error("cannot write gnuplot script '" + gp_path + "'");
  bool logscale = spec.scenario != Scenario::lowerbound_phase && spec.scenario != Scenario::meta_certificate;
  (void)rows;
  f << "# " << to_string(spec.scenario) << "\n"
    << "set datafile separator ','\n"
    << "set key autotitle columnheader\n"
    << "set xlabel '" << x << "'\n"
    << "set ylabel '" << y << "'\n"
    << (logscale ? "set logscale xy\n" : "")
    << "set terminal pngcairo size 800,600\n"
    << "set output '" << csv_path << ".png'\n"
    << "plot '" << csv_path << "' using '" << x << "':'" << y << "' with points pt 7 title '" << y << "'\n";
}

}  // namespace rh
