#include "quadmpc/trajectory.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "quadmpc/dynamics.hpp"

namespace quadmpc {
namespace {

TEST(RandomWaypoints, DeterministicPerSeed) {
  const auto a = random_waypoints(10.0, 6, 42);
  const auto b = random_waypoints(10.0, 6, 42);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i], b[i]);
  }
  const auto c = random_waypoints(10.0, 6, 43);
  EXPECT_NE(a[0], c[0]);
}

TEST(RandomWaypoints, CubePlacement) {
  const double hsize = 10.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (const auto& wp : random_waypoints(hsize, 8, seed)) {
      EXPECT_GE(wp.x(), -hsize / 2);
      EXPECT_LE(wp.x(), hsize / 2);
      EXPECT_GE(wp.y(), -hsize / 2);
      EXPECT_LE(wp.y(), hsize / 2);
      EXPECT_GE(wp.z(), hsize);
      EXPECT_LE(wp.z(), 2.0 * hsize);
    }
  }
}

TEST(RandomWaypoints, TwoPointsAreDistinct) {
  const auto wps = random_waypoints(10.0, 2, 7);
  ASSERT_EQ(wps.size(), 2u);
  EXPECT_GT((wps[0] - wps[1]).norm(), 0.0);
}

TEST(RandomWaypoints, RejectsBadArguments) {
  EXPECT_THROW(random_waypoints(10.0, 1, 0), std::invalid_argument);
  EXPECT_THROW(random_waypoints(0.0, 4, 0), std::invalid_argument);
}

TEST(FitPolynomial, TwoWaypointRestToRest) {
  const std::vector<Vec3> wps{Vec3(0, 0, 10), Vec3(3, 1, 12)};
  const PiecewisePoly poly = fit_polynomial(wps, 10.0, 50.0);
  ASSERT_EQ(poly.coeffs.size(), 1u);
  EXPECT_LT(poly.eval(0.0, 1).norm(), 1e-9);
  EXPECT_LT(poly.eval(poly.duration(), 1).norm(), 1e-9);
  EXPECT_LT(poly.eval(0.0, 2).norm(), 1e-9);
  EXPECT_LT(poly.eval(poly.duration(), 2).norm(), 1e-9);
}

TEST(FitPolynomial, InterpolatesWaypoints) {
  const auto wps = random_waypoints(10.0, 6, 3);
  const PiecewisePoly poly = fit_polynomial(wps, 6.0, 12.0);
  // Knot times bracket each waypoint.
  for (std::size_t k = 0; k < wps.size(); ++k) {
    const double t = poly.knots[k];
    EXPECT_LT((poly.eval(t, 0) - wps[k]).norm(), 1e-6) << "waypoint " << k;
  }
}

TEST(FitPolynomial, SpeedBoundHoldsOnDenseGrid) {
  const auto wps = random_waypoints(10.0, 6, 11);
  const double v_max = 6.0;
  const PiecewisePoly poly = fit_polynomial(wps, v_max, 12.0);
  const double T = poly.duration();
  for (int i = 0; i <= static_cast<int>(T * 1000); ++i) {
    const double t = std::min(i * 1e-3, T);
    ASSERT_LE(poly.eval(t, 1).norm(), v_max + 1e-6) << "t=" << t;
  }
}

TEST(FitPolynomial, HalvingSpeedLimitDoublesDuration) {
  const auto wps = random_waypoints(10.0, 6, 5);
  // Generous acceleration bound keeps both runs speed-limited.
  const PiecewisePoly fast = fit_polynomial(wps, 6.0, 1000.0);
  const PiecewisePoly slow = fit_polynomial(wps, 3.0, 1000.0);
  EXPECT_GE(slow.duration() / fast.duration(), 1.999);
}

TEST(FitPolynomial, JointContinuity) {
  const auto wps = random_waypoints(10.0, 7, 13);
  const PiecewisePoly poly = fit_polynomial(wps, 6.0, 12.0);
  for (std::size_t k = 1; k + 1 < poly.knots.size(); ++k) {
    const double t = poly.knots[k];
    const double eps = 1e-9;
    for (int d = 0; d <= 2; ++d) {
      const Vec3 before = poly.eval(t - eps, d);
      const Vec3 after = poly.eval(t + eps, d);
      EXPECT_LT((before - after).norm(), 1e-5) << "deriv " << d << " joint " << k;
    }
  }
}

TEST(FitPolynomial, RejectsImpossibleLimits) {
  const std::vector<Vec3> wps{Vec3(0, 0, 10), Vec3(3, 1, 12)};
  EXPECT_THROW(fit_polynomial(wps, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(fit_polynomial({Vec3(0, 0, 10)}, 1.0, 1.0), std::invalid_argument);
}

TEST(CircleTrajectory, RadiusHeldEverywhere) {
  const SampledTrajectory traj = circle_trajectory(10.0, 6.0, 100.0, 10.0);
  for (const auto& x : traj.x_ref) {
    const double r = std::hypot(x.p_W.x(), x.p_W.y());
    ASSERT_NEAR(r, 10.0, 1e-6);
    ASSERT_NEAR(x.p_W.z(), 10.0, 1e-9);
  }
}

TEST(CircleTrajectory, SpeedRampEndpoints) {
  const double v_max = 6.0;
  const SampledTrajectory traj = circle_trajectory(10.0, v_max, 100.0, 10.0);
  EXPECT_NEAR(traj.x_ref.front().v_W.norm(), 0.0, 1e-9);
  // After the ramp (t >= v_max / ramp_accel = 6 s) the speed holds at v_max,
  // then ramps back down so the reference ends at rest.
  const std::size_t k_hold = static_cast<std::size_t>(8.0 * 100.0);
  EXPECT_NEAR(traj.x_ref[k_hold].v_W.norm(), v_max, 1e-9);
  EXPECT_NEAR(traj.x_ref.back().v_W.norm(), 0.0, 1e-9);
}

TEST(CircleTrajectory, CentripetalAccelerationAtFullSpeed) {
  const double v_max = 6.0, r = 10.0;
  const SampledTrajectory traj = circle_trajectory(r, v_max, 100.0, 10.0);
  // Estimate acceleration from velocity differences in the hold phase.
  const std::size_t k = static_cast<std::size_t>(9.0 * 100.0);
  const Vec3 a_fd = (traj.x_ref[k + 1].v_W - traj.x_ref[k].v_W) * 100.0;
  EXPECT_NEAR(a_fd.norm(), v_max * v_max / r, 0.02);
}

TEST(CircleTrajectory, YawFollowsVelocity) {
  const SampledTrajectory traj = circle_trajectory(10.0, 6.0, 100.0, 10.0);
  for (std::size_t k = 200; k < traj.size(); k += 100) {
    const Vec3 v = traj.x_ref[k].v_W;
    if (v.norm() < 0.5) continue;
    const Vec3 x_B = traj.x_ref[k].q_WB * Vec3(1, 0, 0);
    const Vec3 v_dir = v.normalized();
    // Body x axis points along the horizontal velocity direction.
    const double cosang =
        x_B.head<2>().normalized().dot(v_dir.head<2>().normalized());
    EXPECT_GT(cosang, 0.999) << "sample " << k;
  }
}

TEST(SampleTrajectory, StationaryPolynomial) {
  const std::vector<Vec3> wps{Vec3(1, 2, 10), Vec3(1, 2, 10)};
  const PiecewisePoly poly = fit_polynomial(wps, 1.0, 1.0);
  const SampledTrajectory traj = sample_trajectory(poly, 100.0);
  const QuadParams qp;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    EXPECT_LT((traj.x_ref[k].p_W - Vec3(1, 2, 10)).norm(), 1e-9);
    EXPECT_LT(traj.x_ref[k].v_W.norm(), 1e-9);
    EXPECT_NEAR(traj.u_ref[k](0), qp.hover_input(), 1e-9);
  }
}

TEST(SampleTrajectory, VelocityMatchesAnalyticDerivative) {
  const auto wps = random_waypoints(10.0, 5, 17);
  const PiecewisePoly poly = fit_polynomial(wps, 6.0, 12.0);
  const SampledTrajectory traj = sample_trajectory(poly, 100.0);
  for (std::size_t k = 0; k < traj.size(); k += 25) {
    const double t = traj.t[k];
    EXPECT_LT((traj.x_ref[k].v_W - poly.eval(t, 1)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(SampleTrajectory, BodyZAlignsWithSpecificForce) {
  const auto wps = random_waypoints(10.0, 6, 19);
  const PiecewisePoly poly = fit_polynomial(wps, 6.0, 12.0);
  const SampledTrajectory traj = sample_trajectory(poly, 100.0);
  for (std::size_t k = 0; k < traj.size(); k += 37) {
    const double t = traj.t[k];
    const Vec3 f = poly.eval(t, 2) + Vec3(0, 0, kGravity);
    if (f.norm() < 1e-6) continue;
    const Vec3 z_B = traj.x_ref[k].q_WB * Vec3(0, 0, 1);
    EXPECT_GT(z_B.dot(f.normalized()), 1.0 - 1e-9) << "sample " << k;
  }
}

TEST(SampledTrajectoryValidation, CatchesCorruption) {
  SampledTrajectory traj = circle_trajectory(10.0, 3.0, 100.0, 10.0);
  EXPECT_NO_THROW(traj.validate());

  SampledTrajectory bad_grid = traj;
  bad_grid.t[5] += 1e-3;
  EXPECT_THROW(bad_grid.validate(), std::runtime_error);

  SampledTrajectory bad_quat = traj;
  bad_quat.x_ref[3].q_WB.w() += 1e-3;
  EXPECT_THROW(bad_quat.validate(), std::runtime_error);

  SampledTrajectory bad_speed = traj;
  bad_speed.x_ref[10].v_W = Vec3(100, 0, 0);
  EXPECT_THROW(bad_speed.validate(), std::runtime_error);
}

TEST(TrajectoryCsv, RoundTripIsBitExact) {
  const SampledTrajectory traj = circle_trajectory(10.0, 3.0, 100.0, 10.0);
  const std::string path = std::filesystem::temp_directory_path() / "quadmpc_traj_rt.csv";
  save_trajectory_csv(traj, path);
  const SampledTrajectory loaded = load_trajectory_csv(path);
  ASSERT_EQ(loaded.size(), traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    EXPECT_EQ(loaded.t[k], traj.t[k]);
    EXPECT_EQ(loaded.x_ref[k].pack(), traj.x_ref[k].pack());
    EXPECT_EQ(loaded.u_ref[k], traj.u_ref[k]);
  }
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace quadmpc
