#pragma once

#include <string>
#include <vector>

#include "quadmpc/sim.hpp"
#include "quadmpc/trajectory.hpp"

namespace quadmpc {

inline constexpr const char* kVersion = "quadmpc 0.1.0";

struct RandomTrajSpec {
  double hsize{10.0};
  int n_waypoints{6};
  double a_max{12.0};
};

/// Full experiment grid: one trajectory kind crossed with speed limits,
/// controller variants and seeds.
struct ExperimentSpec {
  std::string trajectory_kind{"circle"};  ///< circle | random | file
  std::string trajectory_file;
  std::vector<double> v_max_list{6.0};
  std::vector<std::string> variants{"nominal", "rgp"};
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir{"out"};
  int workers{1};
  double f_s{100.0};
  CircleConfig circle{};
  RandomTrajSpec random{};
  SimConfig sim{};

  void validate() const;
};

/// Parses the structured config file; missing keys fall back to defaults.
ExperimentSpec load_experiment_spec(const std::string& path);
ExperimentSpec experiment_spec_from_json(const std::string& text);

std::string experiment_spec_to_json(const ExperimentSpec& spec);

/// Config echo written next to each episode log.
std::string episode_header_json(const SimConfig& cfg, const std::string& traj_desc,
                                const std::string& name);

}  // namespace quadmpc
