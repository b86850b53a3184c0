#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "quadmpc/drag.hpp"
#include "quadmpc/estimator.hpp"
#include "quadmpc/ocp.hpp"
#include "quadmpc/rgp.hpp"
#include "quadmpc/trajectory.hpp"
#include "quadmpc/types.hpp"

namespace quadmpc {

enum class ControllerVariant { Nominal, Gp, Rgp };

ControllerVariant variant_from_name(const std::string& name);
std::string variant_name(ControllerVariant v);

struct RgpConfig {
  int m{20};
  double v_max_basis{0.0};  ///< 0 means: use the trajectory's v_max
  KernelHyperparams hyper{};
};

struct SimConfig {
  double delta_t_sim{0.001};  ///< plant integration step [s]
  double control_dt{0.01};    ///< control interval [s]
  DragProfile drag_profile{DragProfile::Simplified};
  DragParams drag{};
  ControllerVariant variant{ControllerVariant::Nominal};
  std::uint64_t seed{0};
  double meas_noise_pos{0.0};  ///< std dev of additive position noise, default off
  double meas_noise_vel{0.0};  ///< std dev of additive velocity noise, default off

  QuadParams quad{};
  OcpConfig ocp{};
  ResidualConfig residual{};
  RgpConfig rgp{};

  void validate() const;

  int substeps_per_control() const {
    return static_cast<int>(std::lround(control_dt / delta_t_sim));
  }
};

struct EpisodeStep {
  double t{0.0};
  StateVec x_ref{StateVec::Zero()};
  StateVec x_meas{StateVec::Zero()};
  Vec4 u{Vec4::Zero()};
  Vec3 a_tilde{Vec3::Zero()};      ///< zero when no observation was accepted
  std::uint64_t mu_hash{0};        ///< parameter snapshot the MPC will use next step
  double solve_time_ms{0.0};
  double kkt_residual{0.0};
  int reject_flag{0};              ///< 0 accepted, 1 dt too small, 2 non-finite, 3 not applicable
  bool qp_fallback{false};
};

struct EpisodeLog {
  std::vector<EpisodeStep> steps;
  std::string name;
  std::uint64_t seed{0};
  std::string variant;
  std::string config_json;  ///< config echo serialized by the caller
  bool failed{false};
  std::string failure_reason;
  int rejected_count{0};
  std::vector<DragObservation> observations;  ///< accepted pairs, in order
  RgpEnsemble final_ensemble;                 ///< rgp variant: posterior at episode end
  bool has_ensemble{false};
};

struct EpisodeMetrics {
  double rmse_pos_mm{0.0};
  Vec3 rmse_pos_mm_axis{Vec3::Zero()};
  Vec3 cov_v_e_abs{Vec3::Zero()};  ///< |cov(v_d, e_d)| per world axis
  double v_peak{0.0};
  double mean_solve_ms{0.0};
  double max_solve_ms{0.0};
  double mean_kkt{0.0};
  int rejected{0};
  std::size_t steps{0};
};

/// One plant integration step of f_phys plus the configured ground-truth drag
/// (rotated into the world-frame velocity derivative) over delta_t_sim.
QuadState plant_step(const QuadState& x, const ControlInput& u, const SimConfig& cfg);

/// Reference window for the OCP at time t: shooting nodes sampled from the
/// trajectory grid, clamped to the final sample past the end.
ReferenceWindow reference_window(const SampledTrajectory& traj, double t, const OcpConfig& cfg);

/// FNV-1a hash over the raw bytes of the three per-axis mean vectors.
std::uint64_t rgp_param_hash(const RgpParamVector& params);

/// Runs the measure / solve / apply / predict / residual / update /
/// marginalize / re-parameterize loop over the whole trajectory.
/// For the Gp variant, `pretrained` supplies the fixed parameter source.
EpisodeLog run_episode(const SampledTrajectory& traj, const SimConfig& cfg,
                       const RgpEnsemble* pretrained = nullptr);

EpisodeMetrics compute_metrics(const EpisodeLog& log);

/// Persists the deterministic payload (`<base>.csv`), solver timing
/// (`<base>.timing.csv`) and a JSON header (`<base>.json`).
void save_episode(const EpisodeLog& log, const std::string& base_path);

/// Reloads the deterministic payload of a saved episode (timing not restored).
EpisodeLog load_episode_csv(const std::string& csv_path);

}  // namespace quadmpc
