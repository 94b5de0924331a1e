/*
 Copyright 2026 The nkmpc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

// nkmpc command-line front end: simulate, benchmark, scaling.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nkmpc/harness.hpp"

namespace {

struct Flags {
  std::string model = "1";
  std::size_t horizon = 20;
  std::size_t steps = 1000;
  double dt = 0.0;
  std::size_t refinements = 1;
  std::string shift = "off";
  std::string precond = "on";
  double tol = 1e-6;
  double fd_step = 1e-8;
  std::vector<double> x0{-1.0, 0.0};
  std::vector<double> xf{0.0, 0.0};
  double wd = 0.005;
  double alpha1 = 1e3;
  double alpha2 = 0.1;
  double p0 = 2.5;
  std::size_t gmres_max_iter = 0;
  std::size_t cold_start_max_iter = 200;
  double divergence_threshold = 1e6;
  double terminal_radius = 5e-2;
  std::string out = "out";
};

bool on_off(const std::string& v) { return v == "on"; }

nkmpc::MpcConfig to_config(const Flags& f) {
  nkmpc::MpcConfig c;
  c.model = nkmpc::model_from_id(f.model);
  std::visit([&](auto& p) { p.w_d = f.wd; }, c.model);
  if (auto* m2 = std::get_if<nkmpc::Model2Params>(&c.model)) {
    m2->alpha1 = f.alpha1;
    m2->alpha2 = f.alpha2;
  }
  nkmpc::set_target_state(c.model, {f.xf.at(0), f.xf.at(1)});
  c.x0 = {f.x0.at(0), f.x0.at(1)};
  c.horizon = f.horizon;
  c.steps = f.steps;
  if (f.dt > 0.0) c.dt = f.dt;
  c.refinements = f.refinements;
  c.shifting = on_off(f.shift);
  c.preconditioning = on_off(f.precond);
  c.gmres_tol = f.tol;
  c.fd_step = f.fd_step;
  c.p0 = f.p0;
  c.gmres_max_iter = f.gmres_max_iter;
  c.cold_start_max_iter = f.cold_start_max_iter;
  c.divergence_threshold = f.divergence_threshold;
  c.terminal_radius = f.terminal_radius;
  c.validate();
  return c;
}

int do_simulate(const Flags& f) {
  const nkmpc::MpcConfig config = to_config(f);
  const auto rec = nkmpc::harness::run(config);
  const auto files = nkmpc::harness::write_run(rec, f.out);
  std::cout << "model " << nkmpc::model_id(config.model) << "  N=" << config.horizon << "  steps=" << config.steps
            << "  k=" << config.refinements << "  shift=" << f.shift << "  precond=" << f.precond << '\n'
            << "p0=" << rec.trajectory.p0 << "  dt=" << rec.trajectory.dt
            << "  cold-start iterations=" << rec.trajectory.cold_start_iterations << '\n'
            << "solved steps=" << rec.aggregates.solved_steps
            << "  avg GMRES iterations/step=" << rec.aggregates.avg_gmres_iterations
            << "  final |x - xf|=" << rec.aggregates.final_state_norm << '\n'
            << (rec.success ? "success" : "FAILED: " + rec.message) << '\n'
            << "wrote " << files.trajectory_csv.string() << ", " << files.summary_json.string() << '\n';
  return rec.success ? EXIT_SUCCESS : 2;
}

int do_benchmark(const Flags& f, const std::string& matrix_file) {
  const nkmpc::MpcConfig base = to_config(f);
  std::vector<std::pair<std::string, nkmpc::MpcConfig>> configs;
  if (matrix_file.empty()) {
    auto off = base;
    off.preconditioning = false;
    auto on = base;
    on.preconditioning = true;
    configs = {{"precond_off", off}, {"precond_on", on}};
  } else {
    std::ifstream is(matrix_file);
    if (!is) throw nkmpc::ConfigError("cannot open matrix file " + matrix_file);
    const auto j = nlohmann::json::parse(is);
    for (std::size_t i = 0; i < j.size(); ++i) {
      const auto& entry = j.at(i);
      const std::string id = entry.value("id", "config" + std::to_string(i));
      auto cfg = nkmpc::harness::config_from_json(entry, base);
      cfg.validate();
      configs.emplace_back(id, cfg);
    }
  }
  if (configs.size() < 2) throw nkmpc::ConfigError("benchmark needs at least two configurations");
  const auto rows = nkmpc::harness::run_benchmark(configs);
  std::filesystem::create_directories(f.out);
  const auto path = std::filesystem::path(f.out) / "benchmark.csv";
  std::ofstream os(path);
  nkmpc::harness::write_benchmark_csv(os, rows);
  nkmpc::harness::write_benchmark_csv(std::cout, rows);
  std::cout << "wrote " << path.string() << '\n';
  return EXIT_SUCCESS;
}

int do_scaling(const Flags& f, const std::vector<std::size_t>& sizes, std::size_t repeats) {
  nkmpc::MpcConfig base = to_config(f);
  const auto report = nkmpc::harness::run_scaling(base, sizes, repeats);
  std::filesystem::create_directories(f.out);
  const auto path = std::filesystem::path(f.out) / "scaling.csv";
  std::ofstream os(path);
  nkmpc::harness::write_scaling_csv(os, report);
  nkmpc::harness::write_scaling_csv(std::cout, report);

  nlohmann::json j;
  j["sizes"] = sizes;
  j["repeats"] = repeats;
  if (report.time_slope) {
    j["time_slope"] = *report.time_slope;
    j["memory_slope"] = *report.memory_slope;
    j["flop_slope"] = *report.flop_slope;
    std::cout << "fitted log-log slope: time " << *report.time_slope << ", memory " << *report.memory_slope
              << ", flops " << *report.flop_slope << '\n';
  } else {
    std::cout << "single horizon size: slope omitted\n";
  }
  std::ofstream(std::filesystem::path(f.out) / "scaling.json") << j.dump(2) << '\n';
  return EXIT_SUCCESS;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preconditioned Newton-Krylov MPC for minimum-time control of the double integrator"};
  app.set_config("--config", "", "Configuration file (key = value), overridden by explicit flags");
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  const auto on_off_check = CLI::IsMember({"on", "off"});
  app.add_option("--model", f.model, "Model identifier: 1 or 2")->check(CLI::IsMember({"1", "2", "model1", "model2"}));
  app.add_option("--horizon", f.horizon, "Horizon grid size N");
  app.add_option("--steps", f.steps, "Number of system time steps");
  app.add_option("--dt", f.dt, "System time step (default: cold-start horizon / steps)");
  app.add_option("--refinements", f.refinements, "Newton refinements per step");
  app.add_option("--shift", f.shift, "Shift the warm start along the horizon")->check(on_off_check);
  app.add_option("--precond", f.precond, "Use the sparse preconditioner")->check(on_off_check);
  app.add_option("--tol", f.tol, "Absolute GMRES tolerance");
  app.add_option("--fd-step", f.fd_step, "Finite-difference step h");
  app.add_option("--x0", f.x0, "Initial state x,y")->delimiter(',')->expected(2);
  app.add_option("--xf", f.xf, "Target state x,y")->delimiter(',')->expected(2);
  app.add_option("--wd", f.wd, "Interior-point weight w_d");
  app.add_option("--alpha1", f.alpha1, "Model 2 terminal penalty weight");
  app.add_option("--alpha2", f.alpha2, "Model 2 control regularization weight");
  app.add_option("--p0", f.p0, "Initial guess of the horizon length");
  app.add_option("--gmres-max-iter", f.gmres_max_iter, "GMRES iteration cap (0: dimension of U)");
  app.add_option("--cold-start-max-iter", f.cold_start_max_iter, "Cold-start Newton iteration cap");
  app.add_option("--divergence-threshold", f.divergence_threshold, "Residual norm treated as a step failure");
  app.add_option("--terminal-radius", f.terminal_radius, "Target ball radius for the end-of-horizon check");
  app.add_option("--out", f.out, "Output directory");

  auto* sim = app.add_subcommand("simulate", "Run one closed-loop simulation");
  auto* bench = app.add_subcommand("benchmark", "Compare configurations (default: preconditioner off vs on)");
  std::string matrix_file;
  bench->add_option("--matrix", matrix_file, "JSON array of config overrides; the first entry is the baseline");
  auto* scal = app.add_subcommand("scaling", "Measure preconditioner cost against the horizon size");
  std::vector<std::size_t> sizes{250, 500, 1000, 2000, 4000};
  std::size_t repeats = 100;
  scal->add_option("--sizes", sizes, "Horizon sizes")->delimiter(',');
  scal->add_option("--repeats", repeats, "Repetitions per size (median is reported)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return do_simulate(f);
    if (*bench) return do_benchmark(f, matrix_file);
    if (*scal) return do_scaling(f, sizes, repeats);
  } catch (const nkmpc::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return EXIT_SUCCESS;
}
