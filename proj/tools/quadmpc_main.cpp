#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "quadmpc/config.hpp"
#include "quadmpc/experiment.hpp"
#include "quadmpc/sim.hpp"
#include "quadmpc/trajectory.hpp"

namespace {

using namespace quadmpc;

int cmd_gen_traj(const std::string& kind, double v_max, double a_max, double f_s, double hsize,
                 int n_waypoints, std::uint64_t seed, double radius, double altitude,
                 double ramp_accel, double hold_laps, const std::string& out) {
  SampledTrajectory traj;
  if (kind == "circle") {
    CircleConfig cfg;
    cfg.radius = radius;
    cfg.altitude = altitude;
    cfg.ramp_accel = ramp_accel;
    cfg.hold_laps = hold_laps;
    traj = circle_trajectory(cfg, v_max, f_s);
  } else if (kind == "random") {
    const auto wps = random_waypoints(hsize, n_waypoints, seed);
    traj = sample_trajectory(fit_polynomial(wps, v_max, a_max), f_s);
  } else {
    std::cerr << "gen-traj: kind must be circle or random\n";
    return 2;
  }
  save_trajectory_csv(traj, out);
  std::printf("wrote %s: %zu samples, %.2f s, peak speed %.3f m/s\n", out.c_str(), traj.size(),
              traj.duration(), traj.v_max);
  return 0;
}

ExperimentSpec load_spec_or_default(const std::string& config_path) {
  if (config_path.empty()) {
    return ExperimentSpec{};
  }
  return load_experiment_spec(config_path);
}

int cmd_run(const std::string& config_path, const std::string& variant_override,
            std::optional<double> v_max_override, std::optional<std::uint64_t> seed_override,
            const std::string& traj_file, const std::string& out_dir) {
  ExperimentSpec spec = load_spec_or_default(config_path);
  if (!traj_file.empty()) {
    spec.trajectory_kind = "file";
    spec.trajectory_file = traj_file;
  }
  if (!variant_override.empty()) {
    spec.variants = {variant_override};
  }
  if (v_max_override.has_value()) {
    spec.v_max_list = {*v_max_override};
  }
  if (seed_override.has_value()) {
    spec.seeds = {*seed_override};
  }
  if (!out_dir.empty()) {
    spec.output_dir = out_dir;
  }
  spec.variants.resize(1);
  spec.v_max_list.resize(1);
  spec.seeds.resize(1);

  const SuiteReport report = run_suite(spec);
  const EpisodeResult& ep = report.episodes.front();
  if (!ep.ok) {
    std::cerr << "episode failed: " << ep.error << "\n";
    return 1;
  }
  std::printf("%s: rmse_pos %.3f mm, v_peak %.3f m/s, mean solve %.3f ms, rejected %d\n",
              ep.name.c_str(), ep.metrics.rmse_pos_mm, ep.metrics.v_peak,
              ep.metrics.mean_solve_ms, ep.metrics.rejected);
  return 0;
}

int cmd_suite(const std::string& config_path, std::optional<int> workers) {
  ExperimentSpec spec = load_spec_or_default(config_path);
  if (workers.has_value()) {
    spec.workers = *workers;
  }
  const SuiteReport report = run_suite(spec);
  for (const auto& ep : report.episodes) {
    if (ep.ok) {
      std::printf("ok   %-32s rmse %.3f mm\n", ep.name.c_str(), ep.metrics.rmse_pos_mm);
    } else {
      std::printf("FAIL %-32s %s\n", ep.name.c_str(), ep.error.c_str());
    }
  }
  std::printf("\n%s\n", report.aggregate_table.c_str());
  std::printf("index: %s\n", report.index_path.c_str());
  return report.all_ok ? 0 : 1;
}

int cmd_export_posterior(const std::string& in_path, const std::string& out_path, int grid_n) {
  const PosteriorSnapshot snap = load_posterior(in_path);
  export_posterior(snap.ensemble, snap.observations, out_path, grid_n);
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int cmd_report(const std::string& dir) {
  const RecomputedReport rep = recompute_report((std::filesystem::path(dir) / "index.json").string());
  {
    std::ofstream out(std::filesystem::path(dir) / "aggregate_table.csv");
    out << rep.aggregate_table;
  }
  {
    std::ofstream out(std::filesystem::path(dir) / "covariance_summary.csv");
    out << rep.covariance_summary;
  }
  std::printf("%s", rep.aggregate_table.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quadrotor MPC workbench with online drag learning"};
  app.require_subcommand(1);

  // gen-traj
  auto* gen = app.add_subcommand("gen-traj", "generate a reference trajectory CSV");
  std::string gen_kind = "circle", gen_out = "traj.csv";
  double gen_vmax = 6.0, gen_amax = 12.0, gen_fs = 100.0, gen_hsize = 10.0;
  double gen_radius = 10.0, gen_altitude = 10.0, gen_ramp = 1.0, gen_laps = 1.0;
  int gen_n = 6;
  std::uint64_t gen_seed = 1;
  gen->add_option("--kind", gen_kind, "circle | random");
  gen->add_option("--v-max", gen_vmax, "speed limit [m/s]");
  gen->add_option("--a-max", gen_amax, "acceleration limit [m/s^2] (random)");
  gen->add_option("--fs", gen_fs, "sample rate [Hz]");
  gen->add_option("--hsize", gen_hsize, "waypoint cube size [m] (random)");
  gen->add_option("--n-waypoints", gen_n, "waypoint count (random)");
  gen->add_option("--seed", gen_seed, "waypoint seed (random)");
  gen->add_option("--radius", gen_radius, "circle radius [m]");
  gen->add_option("--altitude", gen_altitude, "circle altitude [m]");
  gen->add_option("--ramp-accel", gen_ramp, "circle speed ramp [m/s^2]");
  gen->add_option("--laps", gen_laps, "circle laps at full speed");
  gen->add_option("--out", gen_out, "output CSV path");

  // run
  auto* run = app.add_subcommand("run", "run a single episode");
  std::string run_config, run_variant, run_traj, run_out;
  double run_vmax = -1.0;
  std::int64_t run_seed = -1;
  run->add_option("--config", run_config, "experiment config JSON");
  run->add_option("--variant", run_variant, "nominal | gp | rgp");
  run->add_option("--v-max", run_vmax, "speed limit override");
  run->add_option("--seed", run_seed, "seed override");
  run->add_option("--traj", run_traj, "trajectory CSV (overrides config kind)");
  run->add_option("--out-dir", run_out, "output directory override");

  // suite
  auto* suite = app.add_subcommand("suite", "run the full experiment grid");
  std::string suite_config;
  int suite_workers = -1;
  suite->add_option("--config", suite_config, "experiment config JSON");
  suite->add_option("--workers", suite_workers, "parallel episode workers");

  // export-posterior
  auto* expo = app.add_subcommand("export-posterior", "re-export a posterior snapshot");
  std::string expo_in, expo_out;
  int expo_grid = 201;
  expo->add_option("--in", expo_in, "posterior JSON")->required();
  expo->add_option("--out", expo_out, "output JSON")->required();
  expo->add_option("--grid-n", expo_grid, "band grid resolution");

  // report
  auto* rep = app.add_subcommand("report", "recompute report tables from raw logs");
  std::string rep_dir = "out";
  rep->add_option("--dir", rep_dir, "suite output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      return cmd_gen_traj(gen_kind, gen_vmax, gen_amax, gen_fs, gen_hsize, gen_n, gen_seed,
                          gen_radius, gen_altitude, gen_ramp, gen_laps, gen_out);
    }
    if (run->parsed()) {
      return cmd_run(run_config, run_variant,
                     run_vmax > 0 ? std::optional<double>(run_vmax) : std::nullopt,
                     run_seed >= 0 ? std::optional<std::uint64_t>(run_seed) : std::nullopt,
                     run_traj, run_out);
    }
    if (suite->parsed()) {
      return cmd_suite(suite_config,
                       suite_workers > 0 ? std::optional<int>(suite_workers) : std::nullopt);
    }
    if (expo->parsed()) {
      return cmd_export_posterior(expo_in, expo_out, expo_grid);
    }
    if (rep->parsed()) {
      return cmd_report(rep_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
