#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace quadmpc {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Quaternion = Eigen::Quaterniond;

/// 13-dim packed state layout: [p(3), q(w,x,y,z), v(3), omega(3)].
using StateVec = Eigen::Matrix<double, 13, 1>;

inline constexpr double kGravity = 9.81;

/// Rigid-body state. Position and velocity live in the world frame,
/// the angular rate in the body frame; q_WB rotates body into world.
struct QuadState {
  Vec3 p_W{Vec3::Zero()};
  Quaternion q_WB{1.0, 0.0, 0.0, 0.0};
  Vec3 v_W{Vec3::Zero()};
  Vec3 omega_B{Vec3::Zero()};

  StateVec pack() const {
    StateVec x;
    x << p_W, q_WB.w(), q_WB.x(), q_WB.y(), q_WB.z(), v_W, omega_B;
    return x;
  }

  static QuadState unpack(const StateVec& x) {
    QuadState s;
    s.p_W = x.segment<3>(0);
    s.q_WB = Quaternion(x(3), x(4), x(5), x(6));
    s.v_W = x.segment<3>(7);
    s.omega_B = x.segment<3>(10);
    return s;
  }

  bool finite() const { return pack().allFinite(); }
};

/// Per-rotor activation, each entry in [0, 1].
struct ControlInput {
  Vec4 u{Vec4::Zero()};

  ControlInput() = default;
  explicit ControlInput(const Vec4& values) : u(values) {}

  bool valid() const {
    return u.allFinite() && (u.array() >= 0.0).all() && (u.array() <= 1.0).all();
  }

  ControlInput clamped() const {
    return ControlInput(u.cwiseMax(0.0).cwiseMin(1.0));
  }
};

/// Physical parameters of the vehicle. Defaults are Hummingbird-class.
struct QuadParams {
  double mass{0.72};
  Mat3 inertia{(Eigen::Vector3d(0.007, 0.007, 0.012)).asDiagonal()};
  double d_x{0.17};
  double d_y{0.17};
  double c_tau{0.016};
  double thrust_max{5.0};
  Vec3 g_W{0.0, 0.0, -kGravity};

  /// Throws if the parameter set cannot hover or the inertia is unusable.
  void validate() const {
    if (!(mass > 0.0)) throw std::invalid_argument("QuadParams: mass must be positive");
    if (!(thrust_max > 0.0)) throw std::invalid_argument("QuadParams: thrust_max must be positive");
    if ((inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument("QuadParams: inertia must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(inertia);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      throw std::invalid_argument("QuadParams: inertia must be positive definite");
    }
    if (4.0 * thrust_max <= mass * kGravity) {
      throw std::invalid_argument("QuadParams: hover infeasible, need 4*T_max > m*g");
    }
  }

  /// Rotor activation that balances gravity with identity attitude.
  double hover_input() const { return mass * kGravity / (4.0 * thrust_max); }
};

}  // namespace quadmpc
