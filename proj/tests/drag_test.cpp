#include "quadmpc/drag.hpp"

#include <gtest/gtest.h>

#include <random>

namespace quadmpc {
namespace {

TEST(BodyDrag, ZeroVelocity) {
  EXPECT_EQ(body_drag_accel(Vec3::Zero(), DragParams{}, 1.0), Vec3::Zero());
}

TEST(BodyDrag, HandEvaluatedQuadraticForm) {
  // a_x = -0.5 * 1.225 * 1 * 0.1 * |2| * 2 = -0.245 with unit mass.
  DragParams p;
  p.rho = 1.225;
  p.c_d = 1.0;
  p.area = Vec3(0.1, 0.1, 0.1);
  const Vec3 a = body_drag_accel(Vec3(2.0, 0.0, 0.0), p, 1.0);
  EXPECT_NEAR(a.x(), -0.245, 1e-12);
  EXPECT_NEAR(a.y(), 0.0, 1e-15);
  EXPECT_NEAR(a.z(), 0.0, 1e-15);
}

TEST(BodyDrag, OpposesMotionComponentwise) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  const DragParams p;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 v(u(rng), u(rng), u(rng));
    const Vec3 a = body_drag_accel(v, p, 0.72);
    for (int d = 0; d < 3; ++d) {
      EXPECT_LE(a(d) * v(d), 0.0);
    }
  }
}

TEST(RotorDrag, StoppedRotors) {
  EXPECT_EQ(rotor_drag_accel(Vec3(1, 2, 3), ControlInput(Vec4::Zero()), DragParams{}, 1.0),
            Vec3::Zero());
}

TEST(RotorDrag, PureVerticalVelocityProjectsToZero) {
  const Vec3 a =
      rotor_drag_accel(Vec3(0, 0, 5), ControlInput(Vec4::Ones()), DragParams{}, 1.0);
  EXPECT_EQ(a, Vec3::Zero());
}

TEST(RotorDrag, SignPattern) {
  const Vec3 a =
      rotor_drag_accel(Vec3(1, 1, 7), ControlInput(Vec4::Ones()), DragParams{}, 1.0);
  EXPECT_LT(a.x(), 0.0);
  EXPECT_LT(a.y(), 0.0);
  EXPECT_EQ(a.z(), 0.0);
}

TEST(PlantDrag, NoneProfileIsZero) {
  QuadState x;
  x.v_W = Vec3(3, -1, 2);
  EXPECT_EQ(plant_drag_accel(x, ControlInput(Vec4::Ones()), DragProfile::None, DragParams{}, 0.72),
            Vec3::Zero());
}

TEST(PlantDrag, SimplifiedProfileHandOracle) {
  // c_d = 0.01, v_B = [1, 2, -3]: a = -0.01*[1, 4, 5*9*(-1)] = [-0.01, -0.04, +0.45].
  DragParams p;
  p.c_d = 0.01;
  QuadState x;
  x.v_W = Vec3(1.0, 2.0, -3.0);  // identity attitude: body == world
  const Vec3 a = plant_drag_accel(x, ControlInput(Vec4::Zero()), DragProfile::Simplified, p, 0.72);
  EXPECT_NEAR(a.x(), -0.01, 1e-12);
  EXPECT_NEAR(a.y(), -0.04, 1e-12);
  EXPECT_NEAR(a.z(), 0.45, 1e-12);
}

TEST(PlantDrag, RotorOnlyProfileMatchesRotorModel) {
  DragParams p;
  QuadState x;
  x.v_W = Vec3(2.0, -1.5, 0.7);
  const ControlInput u(Vec4(0.3, 0.4, 0.5, 0.6));
  const Vec3 a = plant_drag_accel(x, u, DragProfile::RotorOnly, p, 0.72);
  const Vec3 oracle = rotor_drag_accel(x.v_W, u, p, 0.72);
  EXPECT_EQ(a, oracle);
}

TEST(PlantDrag, BothSubmodelsZeroInputs) {
  QuadState x;
  const Vec3 a =
      plant_drag_accel(x, ControlInput(Vec4::Zero()), DragProfile::BodyRotor, DragParams{}, 0.72);
  EXPECT_EQ(a, Vec3::Zero());
}

TEST(PlantDrag, NeverAddsKineticEnergy) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uv(-12.0, 12.0);
  std::uniform_real_distribution<double> uu(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  const DragParams p;
  const DragProfile profiles[] = {DragProfile::Body, DragProfile::RotorOnly,
                                  DragProfile::BodyRotor, DragProfile::Simplified};
  for (int i = 0; i < 10000; ++i) {
    QuadState x;
    Quaternion q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    x.q_WB = q;
    x.v_W = Vec3(uv(rng), uv(rng), uv(rng));
    const ControlInput u(Vec4(uu(rng), uu(rng), uu(rng), uu(rng)));
    const Vec3 v_B = x.q_WB.conjugate() * x.v_W;
    for (const auto profile : profiles) {
      const Vec3 a = plant_drag_accel(x, u, profile, p, 0.72);
      EXPECT_LE(a.dot(v_B), 1e-12);
    }
  }
}

TEST(PlantDrag, OddInVelocityAtFixedRotorSpeed) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> uv(-12.0, 12.0);
  const DragParams p;
  const ControlInput u(Vec4::Constant(0.6));
  const DragProfile profiles[] = {DragProfile::Body, DragProfile::RotorOnly,
                                  DragProfile::BodyRotor, DragProfile::Simplified};
  for (int i = 0; i < 500; ++i) {
    QuadState xp, xm;
    xp.v_W = Vec3(uv(rng), uv(rng), uv(rng));
    xm.v_W = -xp.v_W;
    for (const auto profile : profiles) {
      const Vec3 ap = plant_drag_accel(xp, u, profile, p, 0.72);
      const Vec3 am = plant_drag_accel(xm, u, profile, p, 0.72);
      EXPECT_NEAR((ap + am).cwiseAbs().maxCoeff(), 0.0, 1e-12);
    }
  }
}

TEST(DragProfileNames, RoundTripAndErrors) {
  for (const auto profile : {DragProfile::None, DragProfile::Body, DragProfile::RotorOnly,
                             DragProfile::BodyRotor, DragProfile::Simplified}) {
    EXPECT_EQ(drag_profile_from_name(drag_profile_name(profile)), profile);
  }
  EXPECT_THROW(drag_profile_from_name("frictionless"), std::invalid_argument);
}

TEST(DragParamsValidation, RejectsNegatives) {
  DragParams p;
  p.c_d = -0.1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace quadmpc
