#pragma once

#include <map>
#include <string>
#include <vector>

#include "quadmpc/config.hpp"
#include "quadmpc/sim.hpp"

namespace quadmpc {

struct EpisodeResult {
  std::string name;  ///< {traj}_{vmax}_{variant}_{seed}
  std::string trajectory_kind;
  double v_max{0.0};
  std::string variant;
  std::uint64_t seed{0};
  bool ok{false};
  std::string error;
  EpisodeMetrics metrics{};
};

struct SuiteReport {
  std::vector<EpisodeResult> episodes;
  bool all_ok{false};
  std::string aggregate_table;     ///< CSV text of the Table-I style summary
  std::string covariance_summary;  ///< CSV text of the per-axis |cov| summary
  std::string index_path;
};

/// Runs the full grid (v_max x variant x seed), writing per-episode logs,
/// posterior snapshots for rgp episodes, the aggregate RMSE table, the
/// covariance summary, and a machine-readable artifact index.
SuiteReport run_suite(const ExperimentSpec& spec);

/// The trajectory a grid cell tracks (circle, random waypoints, or a file).
SampledTrajectory build_trajectory(const ExperimentSpec& spec, double v_max, std::uint64_t seed);

/// Pre-trains the gp-variant ensemble from a nominal episode's residual
/// stream on a random trajectory at the same speed limit.
RgpEnsemble pretrain_gp_ensemble(const ExperimentSpec& spec, double v_max);

/// Writes basis locations, means, 2-std bands on a dense grid, and the
/// accepted observation scatter per axis as JSON.
void export_posterior(const RgpEnsemble& ens, const std::vector<DragObservation>& observations,
                      const std::string& path, int grid_n = 201);

struct PosteriorSnapshot {
  RgpEnsemble ensemble;
  std::vector<DragObservation> observations;
  int grid_n{201};
};

PosteriorSnapshot load_posterior(const std::string& path);

/// Rebuilds a dim state from its serialized pieces (recomputes the cached
/// Gram inverse).
RgpDimState make_rgp_dim_state(const Eigen::VectorXd& basis_v, const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& cov, const KernelHyperparams& hyper);

/// Renders the aggregate table from per-episode results. Multiple seeds of
/// the same cell are averaged; percentages are relative to the nominal
/// variant of the same row.
std::string render_aggregate_table(const std::vector<EpisodeResult>& episodes,
                                   const std::vector<std::string>& variant_order);

std::string render_covariance_summary(const std::vector<EpisodeResult>& episodes);

/// Recomputes the aggregate table and covariance summary from the raw
/// per-episode CSV logs listed in the suite's index file.
struct RecomputedReport {
  std::string aggregate_table;
  std::string covariance_summary;
};
RecomputedReport recompute_report(const std::string& index_path);

}  // namespace quadmpc
