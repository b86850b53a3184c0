#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "quadmpc/types.hpp"

namespace quadmpc {

/// Reference trajectory sampled on a uniform time grid at rate f_s.
struct SampledTrajectory {
  double f_s{100.0};
  double v_max{0.0};  ///< speed bound the generator was asked to respect
  std::vector<double> t;
  std::vector<QuadState> x_ref;
  std::vector<Vec4> u_ref;

  std::size_t size() const { return t.size(); }
  double duration() const { return t.empty() ? 0.0 : t.back(); }

  /// Grid uniformity, quaternion norms, and the speed bound.
  void validate() const;
};

/// n waypoints uniform in [-hsize/2, hsize/2]^2 x [hsize, 2*hsize].
/// Deterministic per seed across platforms.
std::vector<Vec3> random_waypoints(double hsize, int n, std::uint64_t seed);

/// Piecewise quintic per axis, C2 at the joints.
struct PiecewisePoly {
  std::vector<double> knots;                          ///< segment start times, plus total at back
  std::vector<Eigen::Matrix<double, 3, 6>> coeffs;    ///< per segment, per axis, ascending powers

  double duration() const { return knots.empty() ? 0.0 : knots.back(); }
  Vec3 eval(double t, int deriv) const;
};

/// Interpolating quintic spline through the waypoints with zero end velocity
/// and acceleration, time-scaled so the dense-grid max speed and acceleration
/// respect v_max and a_max.
PiecewisePoly fit_polynomial(const std::vector<Vec3>& waypoints, double v_max, double a_max);

struct CircleConfig {
  double radius{10.0};
  double altitude{10.0};
  double ramp_accel{1.0};  ///< tangential acceleration of the speed ramp [m/s^2]
  double hold_laps{1.0};   ///< laps flown at v_max after the ramp
};

/// Planar circle with speed ramping linearly from 0 to v_max, then holding.
/// Yaw follows the velocity direction.
SampledTrajectory circle_trajectory(double radius, double v_max, double f_s, double altitude);
SampledTrajectory circle_trajectory(const CircleConfig& cfg, double v_max, double f_s);

/// Samples a fitted polynomial at rate f_s; attitude from the flatness map
/// (body z along acceleration plus gravity, yaw along velocity), body rates
/// from attitude finite differences, u_ref from the collective-thrust balance.
SampledTrajectory sample_trajectory(const PiecewisePoly& poly, double f_s);

/// CSV round trip: t, p(3), q(4), v(3), omega(3), u(4) columns.
void save_trajectory_csv(const SampledTrajectory& traj, const std::string& path);
SampledTrajectory load_trajectory_csv(const std::string& path);

}  // namespace quadmpc
