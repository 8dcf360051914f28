//
// Copyright 2026 The ldpdrift Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Command-line front end: single-panel workflows (simulate, privatize,
// estimate) and the Monte Carlo experiments. Exit status is 0 iff every
// hard gate of the experiment passes; configuration errors exit with 2.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "ldpdrift/harness.hpp"

namespace {

using ldpdrift::harness::ExperimentConfig;
using ldpdrift::harness::Report;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out = "out";
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required = true) {
  auto* c = cmd->add_option("--config", flags.config, "Experiment configuration (.json or .toml)");
  if (config_required) c->required();
  cmd->add_option("--seed", flags.seed, "Override the master seed");
  cmd->add_option("--out", flags.out, "Output directory")->capture_default_str();
  cmd->add_option("--threads", flags.threads, "Worker threads")->check(CLI::PositiveNumber);
}

ExperimentConfig load(const CommonFlags& flags) {
  if (flags.config.empty()) return ldpdrift::harness::parse_config(nlohmann::json::object());
  return ldpdrift::harness::load_config(flags.config, flags.seed, flags.threads);
}

int finish(const Report& report, const ExperimentConfig& cfg, const std::string& out) {
  ldpdrift::harness::write_report(report, cfg, out);
  for (const auto& g : report.gates)
    std::cout << (g.pass ? "PASS " : "FAIL ") << (g.hard ? "[hard] " : "[info] ") << g.name << ": " << g.detail
              << "\n";
  std::cerr << report.experiment << ": wall time " << report.wall_seconds << " s, outputs in " << out << "\n";
  return report.hard_gates_pass() ? 0 : 1;
}

const ldpdrift::harness::Rung& first_rung(const ExperimentConfig& cfg) {
  if (cfg.ladder.empty()) throw ldpdrift::config_error("config: the ladder is empty");
  return cfg.ladder.front();
}

ldpdrift::PathPanel panel_for(const ExperimentConfig& cfg, const std::string& panel_path) {
  if (!panel_path.empty()) return ldpdrift::io::panel_from_binary(ldpdrift::io::read_text(panel_path));
  const auto& rung = first_rung(cfg);
  const auto model = ldpdrift::make_model(cfg.model);
  ldpdrift::SimulationOptions opts;
  opts.substeps = cfg.substeps;
  opts.threads = cfg.threads;
  return ldpdrift::simulate_panel(model, cfg.theta_star, rung.paths, ldpdrift::TimeGrid(cfg.horizon, rung.steps),
                                  cfg.x0, cfg.seed, opts);
}

std::string path_in(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

int cmd_simulate(const CommonFlags& flags) {
  const auto cfg = load(flags);
  const auto start = std::chrono::steady_clock::now();
  const auto panel = panel_for(cfg, "");
  ldpdrift::io::write_text(path_in(flags.out, "panel.csv"), ldpdrift::io::panel_to_csv(panel));
  ldpdrift::io::write_text(path_in(flags.out, "panel.bin"), ldpdrift::io::panel_to_binary(panel));
  const nlohmann::json summary{{"N", panel.paths},
                               {"n", panel.steps()},
                               {"T", panel.grid.horizon()},
                               {"theta_star", panel.theta_star},
                               {"seed", panel.seed},
                               {"substeps", panel.substeps},
                               {"config_digest", ldpdrift::harness::config_digest(cfg.canonical)}};
  ldpdrift::io::write_text(path_in(flags.out, "simulate_summary.json"), summary.dump(2) + "\n");
  std::cerr << "simulate: wall time " << ldpdrift::harness::seconds_since(start) << " s\n";
  return 0;
}

ldpdrift::ThetaGrid grid_for(const ExperimentConfig& cfg) {
  const auto& rung = first_rung(cfg);
  return cfg.random_grid ? ldpdrift::ThetaGrid::random_shift(rung.grid_size, cfg.seed)
                         : ldpdrift::ThetaGrid(rung.grid_size, cfg.shift);
}

ldpdrift::PrivatizeOptions privatize_options(const ExperimentConfig& cfg) {
  ldpdrift::PrivatizeOptions po;
  po.clip = cfg.clip;
  po.noise = cfg.noise;
  po.sampling = cfg.sampling;
  po.threads = cfg.threads;
  return po;
}

int cmd_privatize(const CommonFlags& flags, const std::string& panel_path) {
  const auto cfg = load(flags);
  const auto panel = panel_for(cfg, panel_path);
  const auto model = ldpdrift::make_model(cfg.model);
  const auto budget = cfg.alpha.budget_for(panel.steps());
  const auto grid = grid_for(cfg);
  const auto po = privatize_options(cfg);
  const std::uint64_t noise_seed = ldpdrift::derive_seed(cfg.seed, {1});
  if (po.sampling == ldpdrift::NoiseSampling::kAggregateLaw) {
    // The aggregate law has no per-report tensor; only the sums exist.
    const auto agg = ldpdrift::privatize_aggregate(panel, model, grid, budget, cfg.a, noise_seed, po);
    ldpdrift::io::write_text(path_in(flags.out, "aggregate.csv"), ldpdrift::io::aggregate_to_csv(agg));
    return 0;
  }
  const auto pub = ldpdrift::privatize(panel, model, grid, budget, cfg.a, noise_seed, po);
  auto header = ldpdrift::io::public_header(pub);
  header["config_digest"] = ldpdrift::harness::config_digest(cfg.canonical);
  ldpdrift::io::write_text(path_in(flags.out, "public.json"), header.dump(2) + "\n");
  ldpdrift::io::write_text(path_in(flags.out, "public.bin"), ldpdrift::io::public_tensor_bytes(pub));
  ldpdrift::io::write_text(path_in(flags.out, "aggregate.csv"),
                           ldpdrift::io::aggregate_to_csv(ldpdrift::aggregate_public(pub)));
  return 0;
}

int cmd_estimate(const CommonFlags& flags, const std::string& panel_path) {
  const auto cfg = load(flags);
  const auto panel = panel_for(cfg, panel_path);
  const auto model = ldpdrift::make_model(cfg.model);
  const auto budget = cfg.alpha.budget_for(panel.steps());
  const auto grid = grid_for(cfg);
  const std::uint64_t noise_seed = ldpdrift::derive_seed(cfg.seed, {1});
  const auto agg = ldpdrift::privatize_aggregate(panel, model, grid, budget, cfg.a, noise_seed, privatize_options(cfg));
  const auto interp = ldpdrift::build_public_contrast(agg);
  const auto best = ldpdrift::maximize_contrast(interp, cfg.samples_per_interval);
  const auto regime = ldpdrift::compute_regime(panel.steps(), panel.paths, grid.size(), budget, cfg.cutoffs);

  ldpdrift::EstimationResult res;
  res.theta_hat = best.theta;
  res.contrast_at_hat = best.value;
  res.grid = grid;
  res.r_nN = regime.r;
  res.regime = regime.regime;
  res.seed = noise_seed;
  res.theta_star = panel.theta_star;
  const double top = (grid.size() + grid.shift()) / grid.size();
  if (panel.theta_star >= grid.lower() && panel.theta_star < top)
    res.v_n_star = ldpdrift::v_n_at(panel.theta_star, grid, cfg.a);

  const std::string digest = ldpdrift::harness::config_digest(cfg.canonical);
  auto out = ldpdrift::io::result_to_json(res, digest);
  out["spline"] = ldpdrift::io::spline_to_json(interp);
  ldpdrift::io::write_text(path_in(flags.out, "estimate.json"), out.dump(2) + "\n");
  ldpdrift::io::write_text(path_in(flags.out, "aggregate.csv"), ldpdrift::io::aggregate_to_csv(agg));
  std::string curve = "theta,contrast\n";
  for (int s = 0; s <= 400; ++s) {
    const double theta = interp.lower() + (interp.upper() - interp.lower()) * s / 400.0;
    curve += ldpdrift::io::format_double(theta) + "," + ldpdrift::io::format_double(interp.evaluate(theta)) + "\n";
  }
  ldpdrift::io::write_text(path_in(flags.out, "contrast_curve.csv"), curve);
  std::cout << "theta_hat = " << ldpdrift::io::format_double(res.theta_hat) << ", r_nN = "
            << ldpdrift::io::format_double(res.r_nN) << " (" << ldpdrift::to_string(res.regime) << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Drift estimation for i.i.d. diffusions under local differential privacy"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::string panel_path;
  std::string regime = "negligible";

  auto* simulate = app.add_subcommand("simulate", "Simulate one panel (first ladder rung) to CSV and binary");
  add_common(simulate, flags);
  auto* privatize = app.add_subcommand("privatize", "Privatize one panel and export the public tensor");
  add_common(privatize, flags);
  privatize->add_option("--panel", panel_path, "Binary panel from 'simulate' (simulated from the config if absent)");
  auto* estimate = app.add_subcommand("estimate", "Estimate theta from one panel");
  add_common(estimate, flags);
  estimate->add_option("--panel", panel_path, "Binary panel from 'simulate' (simulated from the config if absent)");
  auto* consistency = app.add_subcommand("consistency", "Consistency ladder");
  add_common(consistency, flags);
  auto* clt = app.add_subcommand("clt", "Central limit theorem check for one regime");
  add_common(clt, flags);
  clt->add_option("--regime", regime, "negligible, significant or threshold")
      ->check(CLI::IsMember({"negligible", "significant", "threshold"}));
  auto* polydrift = app.add_subcommand("polydrift", "Polynomial drift with constant grid size");
  add_common(polydrift, flags);
  auto* effpriv = app.add_subcommand("effpriv", "Effective privacy sweep with alpha_j = alpha_eff / n");
  add_common(effpriv, flags);
  auto* verify = app.add_subcommand("verify-ldp", "Analytic LDP check on adversarial pairs");
  add_common(verify, flags);
  auto* splinecheck = app.add_subcommand("splinecheck", "Hermite spline correctness checks");
  add_common(splinecheck, flags, false);

  CLI11_PARSE(app, argc, argv);

  namespace h = ldpdrift::harness;
  try {
    if (simulate->parsed()) return cmd_simulate(flags);
    if (privatize->parsed()) return cmd_privatize(flags, panel_path);
    if (estimate->parsed()) return cmd_estimate(flags, panel_path);
    const auto cfg = load(flags);
    if (consistency->parsed()) return finish(h::run_consistency(cfg), cfg, flags.out);
    if (clt->parsed()) return finish(h::run_clt(cfg, ldpdrift::parse_regime(regime)), cfg, flags.out);
    if (polydrift->parsed()) return finish(h::run_polynomial_drift(cfg), cfg, flags.out);
    if (effpriv->parsed()) return finish(h::run_effective_privacy(cfg), cfg, flags.out);
    if (verify->parsed()) return finish(h::run_verify_ldp(cfg), cfg, flags.out);
    if (splinecheck->parsed()) return finish(h::run_spline_check(cfg), cfg, flags.out);
  } catch (const ldpdrift::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
