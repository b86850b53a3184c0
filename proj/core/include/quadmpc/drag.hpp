#pragma once

#include <string>

#include "quadmpc/types.hpp"

namespace quadmpc {

/// Which ground-truth drag the plant applies. Never visible to the controller.
enum class DragProfile {
  None,        ///< no drag
  Body,        ///< quadratic body drag only
  RotorOnly,   ///< rotor drag only
  BodyRotor,   ///< body + rotor drag
  Simplified,  ///< componentwise C_D * v^2 * sgn(v) with the z term scaled by 5
};

DragProfile drag_profile_from_name(const std::string& name);
std::string drag_profile_name(DragProfile profile);

struct DragParams {
  double rho{1.225};                ///< fluid density [kg/m^3]
  double c_d{0.01};                 ///< drag coefficient (profile-dependent scaling)
  Vec3 area{0.03, 0.03, 0.06};      ///< cross sections per body axis [m^2]
  double c_rd{0.01};                ///< rotor drag coefficient
  double omega_rotor_max{800.0};    ///< max rotor speed proxy [rad/s]

  void validate() const {
    if (rho < 0.0 || c_d < 0.0 || c_rd < 0.0 || omega_rotor_max < 0.0 ||
        (area.array() < 0.0).any()) {
      throw std::invalid_argument("DragParams: all parameters must be nonnegative");
    }
  }
};

/// Quadratic body drag acceleration, componentwise: a_i = -rho*c_d*A_i/(2m) * |v_i| v_i.
Vec3 body_drag_accel(const Vec3& v_B, const DragParams& params, double mass);

/// Rotor drag acceleration: proportional to the collective rotor speed proxy
/// omega_rotor_max * mean(u) and to the xy projection of v_B; z component is zero.
Vec3 rotor_drag_accel(const Vec3& v_B, const ControlInput& u, const DragParams& params,
                      double mass);

/// Ground-truth drag acceleration in the body frame for the given profile.
Vec3 plant_drag_accel(const QuadState& x, const ControlInput& u, DragProfile profile,
                      const DragParams& params, double mass);

}  // namespace quadmpc
