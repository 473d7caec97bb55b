// robust-huber: command-line front-end for the experiment harness.
#include "robust_huber/experiments.hpp"
#include "robust_huber/verification.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

enum Exit { kOk = 0, kAssertFail = 1, kConfig = 2, kNumeric = 3 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
  bool check = false;
  bool timing = false;
};

rh::ExperimentSpec load_spec(const Common& c) {
  rh::ExperimentSpec spec = rh::spec_from_config(rh::Config::load(c.config));
  if (c.seed) spec.seed = rh::Seed{*c.seed};
  if (c.threads) {
    if (*c.threads < 1) throw rh::ConfigError("--threads must be >= 1");
    spec.threads = *c.threads;
  }
  if (c.timing) spec.record_timing = true;
  return spec;
}

void write_matrix(const rh::Matrix& m, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  for (rh::Index i = 0; i < m.rows(); ++i) {
    for (rh::Index j = 0; j < m.cols(); ++j) f << (j ? "," : "") << rh::format_double(m(i, j));
    f << '\n';
  }
}

bool is_pca(rh::Scenario s) {
  return s == rh::Scenario::pca_n_sweep || s == rh::Scenario::pca_alpha_sweep || s == rh::Scenario::matrix_completion;
}

bool is_regression(rh::Scenario s) {
  return s == rh::Scenario::regression_n_sweep || s == rh::Scenario::regression_alpha_sweep ||
         s == rh::Scenario::regression_gaussian_design;
}

int cmd_gen(const Common& c) {
  auto spec = load_spec(c);
  auto point = rh::expand_grid(spec).front();
  std::string stem = c.out.empty() ? "dataset" : c.out;
  if (is_regression(spec.scenario) ||
      (spec.scenario == rh::Scenario::meta_certificate && spec.option("problem", "regression") == "regression")) {
    auto p = rh::make_regression_instance(spec, point, 0);
    write_matrix(p.X, stem + "_X.csv");
    write_matrix(p.y, stem + "_y.csv");
    write_matrix(p.truth->beta, stem + "_beta.csv");
  } else if (is_pca(spec.scenario) || spec.scenario == rh::Scenario::meta_certificate) {
    auto p = rh::make_pca_instance(spec, point, 0);
    write_matrix(p.Y, stem + "_Y.csv");
    write_matrix(p.truth->L, stem + "_L.csv");
  } else {
    throw rh::ConfigError("gen: scenario " + rh::to_string(spec.scenario) + " has no standalone dataset");
  }
  std::cout << "wrote " << stem << "_*.csv\n";
  return kOk;
}

int cmd_solve(const Common& c) {
  auto spec = load_spec(c);
  auto point = rh::expand_grid(spec).front();
  rh::ResultRow row = rh::run_trial(spec, point, 0);
  if (!row.error.empty()) {
    std::cerr << "solve failed: " << row.error << "\n";
    return kNumeric;
  }
  for (const auto& [k, v] : row.metrics) std::cout << k << " = " << rh::format_double(v) << "\n";
  std::cout << "iterations = " << row.iterations << "\n";
  for (const auto& [k, v] : row.flags) std::cout << k << " = " << (v ? "true" : "false") << "\n";
  if (!c.out.empty()) rh::emit_csv({row}, c.out);
  return kOk;
}

int cmd_batch(const Common& c, std::optional<rh::Scenario> required) {
  auto spec = load_spec(c);
  if (required && spec.scenario != *required)
    throw rh::ConfigError("this subcommand needs scenario " + rh::to_string(*required) + ", config has " +
                          rh::to_string(spec.scenario));
  auto rows = rh::run_experiment(spec, [](const rh::ResultRow& r) {
    std::fprintf(stderr, "row trial=%d%s\n", r.trial, r.error.empty() ? "" : (" error: " + r.error).c_str());
  });
  auto asserts = rh::evaluate_assertions(spec, rows);
  std::string out = c.out.empty() ? rh::to_string(spec.scenario) + ".csv" : c.out;
  rh::emit_csv(rows, out);
  rh::emit_report(spec, rows, asserts, out + ".report.txt");
  rh::emit_gnuplot(spec, rows, out, out + ".gp");
  std::cout << rh::format_report(spec, rows, asserts);
  if (c.check)
    for (const auto& a : asserts)
      if (!a.pass) return kAssertFail;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust Huber-loss estimators under oblivious noise"};
  app.require_subcommand(1);
  Common c;
  auto add_common = [&c](CLI::App* sub) {
    sub->add_option("--config", c.config, "Experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "Override the config seed");
    sub->add_option("--out", c.out, "Output path (CSV, or file stem for gen)");
    sub->add_option("--threads", c.threads, "Worker threads");
    sub->add_flag("--check", c.check, "Exit 1 if any assertion fails");
    sub->add_flag("--timing", c.timing, "Record wall time per row (CSV no longer byte-stable)");
  };
  auto gen = app.add_subcommand("gen", "Write the first grid point's dataset as CSV");
  auto solve = app.add_subcommand("solve", "Solve one instance and print its metrics");
  auto verify = app.add_subcommand("verify", "Run the meta-certificate scenario");
  auto sweep = app.add_subcommand("sweep", "Run an experiment grid");
  auto phase = app.add_subcommand("phase", "Run the lower-bound phase experiment");
  for (auto* s : {gen, solve, verify, sweep, phase}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*gen) return cmd_gen(c);
    if (*solve) return cmd_solve(c);
    if (*verify) return cmd_batch(c, rh::Scenario::meta_certificate);
    if (*phase) return cmd_batch(c, rh::Scenario::lowerbound_phase);
    return cmd_batch(c, std::nullopt);
  } catch (const rh::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const rh::PreconditionError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfig;
  } catch (const rh::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const rh::SamplingError& e) {
    std::cerr << "sampling failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  }
}
