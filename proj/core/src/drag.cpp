#include "quadmpc/drag.hpp"

#include <cmath>

#include "quadmpc/dynamics.hpp"

namespace quadmpc {

DragProfile drag_profile_from_name(const std::string& name) {
  if (name == "none") return DragProfile::None;
  if (name == "body") return DragProfile::Body;
  if (name == "rotor-only") return DragProfile::RotorOnly;
  if (name == "body-rotor") return DragProfile::BodyRotor;
  if (name == "simplified") return DragProfile::Simplified;
  throw std::invalid_argument("unknown drag profile: " + name);
}

std::string drag_profile_name(DragProfile profile) {
  switch (profile) {
    case DragProfile::None: return "none";
    case DragProfile::Body: return "body";
    case DragProfile::RotorOnly: return "rotor-only";
    case DragProfile::BodyRotor: return "body-rotor";
    case DragProfile::Simplified: return "simplified";
  }
  throw std::invalid_argument("unknown drag profile enum value");
}

Vec3 body_drag_accel(const Vec3& v_B, const DragParams& params, double mass) {
  if (!(mass > 0.0)) {
    throw std::invalid_argument("body_drag_accel: mass must be positive");
  }
  const double scale = 0.5 * params.rho * params.c_d / mass;
  return (-scale * params.area.array() * v_B.array().abs() * v_B.array()).matrix();
}

Vec3 rotor_drag_accel(const Vec3& v_B, const ControlInput& u, const DragParams& params,
                      double mass) {
  if (!u.valid()) {
    throw std::invalid_argument("rotor_drag_accel: control input outside [0,1]");
  }
  if (!(mass > 0.0)) {
    throw std::invalid_argument("rotor_drag_accel: mass must be positive");
  }
  const double omega_rotor = params.omega_rotor_max * u.u.mean();
  Vec3 a = -(omega_rotor * params.c_rd / mass) * v_B;
  a.z() = 0.0;
  return a;
}

namespace {

// Draft simplified drag: componentwise sign(v)*v^2 scaled by c_d, z axis x5,
// with the minus sign applied so the force opposes motion.
Vec3 simplified_drag_accel(const Vec3& v_B, const DragParams& params) {
  const Vec3 zscale(1.0, 1.0, 5.0);
  const Eigen::Array3d sgn = v_B.array().sign();
  return (-params.c_d * zscale.array() * sgn * v_B.array().square()).matrix();
}

}  // namespace

Vec3 plant_drag_accel(const QuadState& x, const ControlInput& u, DragProfile profile,
                      const DragParams& params, double mass) {
  const Vec3 v_B = x.q_WB.conjugate() * x.v_W;
  switch (profile) {
    case DragProfile::None:
      return Vec3::Zero();
    case DragProfile::Body:
      return body_drag_accel(v_B, params, mass);
    case DragProfile::RotorOnly:
      return rotor_drag_accel(v_B, u, params, mass);
    case DragProfile::BodyRotor:
      return body_drag_accel(v_B, params, mass) + rotor_drag_accel(v_B, u, params, mass);
    case DragProfile::Simplified:
      return simplified_drag_accel(v_B, params);
  }
  throw std::invalid_argument("plant_drag_accel: unknown profile");
}

}  // namespace quadmpc
