#include "quadmpc/dynamics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace quadmpc {
namespace {

Quaternion random_unit_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Quaternion q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q;
}

Vec3 random_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return Vec3(u(rng), u(rng), u(rng));
}

TEST(QuatRotate, IdentityIsNoop) {
  const Quaternion q = Quaternion::Identity();
  const Vec3 v(1.0, 2.0, 3.0);
  EXPECT_TRUE(quat_rotate(q, v).isApprox(v, 1e-15));
}

TEST(QuatRotate, NinetyDegreesAboutZMatchesRotationMatrix) {
  // Oracle: R_z(90deg) * [1,0,0] = [0,1,0].
  const double s = std::sqrt(2.0) / 2.0;
  const Quaternion q(s, 0.0, 0.0, s);
  const Vec3 out = quat_rotate(q, Vec3(1.0, 0.0, 0.0));
  Mat3 R;
  R << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Vec3 oracle = R * Vec3(1.0, 0.0, 0.0);
  EXPECT_NEAR((out - oracle).norm(), 0.0, 1e-12);
  EXPECT_NEAR(out.y(), 1.0, 1e-12);
}

TEST(QuatRotate, ZeroVector) {
  std::mt19937_64 rng(3);
  const Quaternion q = random_unit_quat(rng);
  EXPECT_EQ(quat_rotate(q, Vec3::Zero()), Vec3::Zero());
}

TEST(QuatRotate, RejectsNonUnitQuaternion) {
  const Quaternion q(1.1, 0.0, 0.0, 0.0);
  EXPECT_THROW(quat_rotate(q, Vec3(1, 0, 0)), std::invalid_argument);
}

TEST(QuatRotate, PreservesLengthAndLinearity) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const Quaternion q = random_unit_quat(rng);
    const Vec3 a = random_vec(rng, 5.0);
    const Vec3 b = random_vec(rng, 5.0);
    EXPECT_NEAR(quat_rotate(q, a).norm(), a.norm(), 1e-9);
    const Vec3 lhs = quat_rotate(q, a + b);
    const Vec3 rhs = quat_rotate(q, a) + quat_rotate(q, b);
    EXPECT_NEAR((lhs - rhs).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  }
}

TEST(ThrustTorque, ZeroInput) {
  const QuadParams qp;
  const auto tt = thrust_torque(ControlInput(Vec4::Zero()), qp);
  EXPECT_EQ(tt.thrust_B, Vec3::Zero());
  EXPECT_EQ(tt.torque_B, Vec3::Zero());
}

TEST(ThrustTorque, FullInputCancelsTorques) {
  const QuadParams qp;
  const auto tt = thrust_torque(ControlInput(Vec4::Ones()), qp);
  EXPECT_NEAR(tt.thrust_B.z(), 4.0 * qp.thrust_max, 1e-12);
  EXPECT_NEAR(tt.thrust_B.head<2>().norm(), 0.0, 1e-15);
  EXPECT_NEAR(tt.torque_B.norm(), 0.0, 1e-12);
}

TEST(ThrustTorque, DiagonalPairHandOracle) {
  // u = [1,0,0,1]: T = 2*T_max, tau = [0, -2 d_x T_max, 0] by substitution.
  const QuadParams qp;
  const auto tt = thrust_torque(ControlInput(Vec4(1, 0, 0, 1)), qp);
  EXPECT_NEAR(tt.thrust_B.z(), 2.0 * qp.thrust_max, 1e-12);
  EXPECT_NEAR(tt.torque_B.x(), 0.0, 1e-12);
  EXPECT_NEAR(tt.torque_B.y(), -2.0 * qp.d_x * qp.thrust_max, 1e-12);
  EXPECT_NEAR(tt.torque_B.z(), 0.0, 1e-12);
}

TEST(FPhys, HoverEquilibrium) {
  const QuadParams qp;
  QuadState x;
  const ControlInput u(Vec4::Constant(qp.hover_input()));
  const StateVec dx = f_phys(x, u, qp);
  EXPECT_NEAR(dx.cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(FPhys, FreeFall) {
  const QuadParams qp;
  QuadState x;
  const StateVec dx = f_phys(x, ControlInput(Vec4::Zero()), qp);
  StateVec expected = StateVec::Zero();
  expected(9) = -9.81;
  EXPECT_NEAR((dx - expected).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(FPhys, PrincipalAxisSpinHasZeroAngularAcceleration) {
  const QuadParams qp;  // diagonal inertia
  for (int axis = 0; axis < 3; ++axis) {
    QuadState x;
    x.omega_B = Vec3::Zero();
    x.omega_B(axis) = 2.0;
    const StateVec dx = f_phys(x, ControlInput(Vec4::Zero()), qp);
    EXPECT_NEAR(dx.segment<3>(10).norm(), 0.0, 1e-12) << "axis " << axis;
  }
}

TEST(FPhys, TranslationInvariant) {
  const QuadParams qp;
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    QuadState x;
    x.q_WB = random_unit_quat(rng);
    x.v_W = random_vec(rng, 4.0);
    x.omega_B = random_vec(rng, 2.0);
    std::uniform_real_distribution<double> uu(0.2, 0.8);
    const ControlInput u(Vec4(uu(rng), uu(rng), uu(rng), uu(rng)));
    const StateVec d0 = f_phys(x, u, qp);
    x.p_W = random_vec(rng, 100.0);
    const StateVec d1 = f_phys(x, u, qp);
    EXPECT_NEAR((d0 - d1).cwiseAbs().maxCoeff(), 0.0, 1e-15);
  }
}

TEST(Rk4Step, ZeroFieldLeavesStateUnchanged) {
  QuadState x;
  x.p_W = Vec3(1, 2, 3);
  x.v_W = Vec3(0.5, 0, -1);
  const auto zero_f = [](const StateVec&, const ControlInput&) { return StateVec::Zero(); };
  const QuadState next = rk4_step(zero_f, x, ControlInput(), 0.1);
  EXPECT_NEAR((next.pack() - x.pack()).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(Rk4Step, HoverFixedPoint) {
  const QuadParams qp;
  QuadState x;
  const ControlInput u(Vec4::Constant(qp.hover_input()));
  const auto f = [&qp](const StateVec& xs, const ControlInput& uu) {
    return f_phys(xs, uu, qp);
  };
  QuadState cur = x;
  for (int i = 0; i < 100; ++i) {
    cur = rk4_step(f, cur, u, 0.01);
  }
  EXPECT_NEAR((cur.pack() - x.pack()).cwiseAbs().maxCoeff(), 0.0, 1e-9);
}

TEST(Rk4Step, BallisticOracle) {
  // Closed form: v_z(0.1) = -g*0.1 = -0.981, p_z = -0.5*g*0.01 = -0.04905.
  const QuadParams qp;
  QuadState x;
  const auto f = [&qp](const StateVec& xs, const ControlInput& uu) {
    return f_phys(xs, uu, qp);
  };
  const QuadState next = rk4_step(f, x, ControlInput(Vec4::Zero()), 0.1);
  EXPECT_NEAR(next.v_W.z(), -0.981, 1e-12);
  EXPECT_NEAR(next.p_W.z(), -0.04905, 1e-12);
}

TEST(Rk4Step, NanDerivativeThrows) {
  const auto bad_f = [](const StateVec&, const ControlInput&) {
    StateVec dx = StateVec::Zero();
    dx(0) = std::numeric_limits<double>::quiet_NaN();
    return dx;
  };
  EXPECT_THROW(rk4_step(bad_f, QuadState{}, ControlInput(), 0.01), std::runtime_error);
}

TEST(Rk4Step, QuaternionNormStaysUnitOverLongHorizon) {
  const QuadParams qp;
  QuadState x;
  x.omega_B = Vec3(0.8, -1.1, 0.6);
  const ControlInput u(Vec4::Constant(qp.hover_input()));
  const auto f = [&qp](const StateVec& xs, const ControlInput& uu) {
    return f_phys(xs, uu, qp);
  };
  StateVec cur = x.pack();
  for (int i = 0; i < 10000; ++i) {
    cur = rk4_step(f, cur, u, 0.001);
    const double norm = cur.segment<4>(3).norm();
    ASSERT_NEAR(norm, 1.0, 1e-9) << "step " << i;
  }
}

TEST(Rk4Step, AngularMomentumNormConservedTorqueFree) {
  const QuadParams qp;
  QuadState x;
  x.omega_B = Vec3(0.3, -0.4, 0.5);
  const ControlInput u(Vec4::Zero());
  const auto f = [&qp](const StateVec& xs, const ControlInput& uu) {
    return f_phys(xs, uu, qp);
  };
  const double h0 = (qp.inertia * x.omega_B).norm();
  StateVec cur = x.pack();
  for (int i = 0; i < 1000; ++i) {
    cur = rk4_step(f, cur, u, 0.001);
    const double h = (qp.inertia * Vec3(cur.segment<3>(10))).norm();
    ASSERT_NEAR(h, h0, 1e-6) << "step " << i;
  }
}

TEST(QuadParamsValidation, RejectsBadConfigurations) {
  QuadParams qp;
  qp.mass = -1.0;
  EXPECT_THROW(qp.validate(), std::invalid_argument);
  qp = QuadParams{};
  qp.inertia(0, 0) = 0.0;
  EXPECT_THROW(qp.validate(), std::invalid_argument);
  qp = QuadParams{};
  qp.thrust_max = 0.5;  // 4*0.5 < m*g
  EXPECT_THROW(qp.validate(), std::invalid_argument);
  EXPECT_NO_THROW(QuadParams{}.validate());
}

}  // namespace
}  // namespace quadmpc
