#pragma once

#include <functional>

#include "quadmpc/types.hpp"

namespace quadmpc {

/// Normalizes q and fixes the double-cover sign so that w >= 0.
Quaternion normalized_wpos(const Quaternion& q);

/// Rotates v by the unit quaternion q (q v q*). Throws std::invalid_argument
/// if |q| deviates from 1 by more than 1e-6.
Vec3 quat_rotate(const Quaternion& q, const Vec3& v);

/// Quaternion kinematics: q_dot = 0.5 * q * (0, omega_B), returned in
/// (w, x, y, z) order.
Vec4 quat_derivative(const Quaternion& q, const Vec3& omega_B);

/// Collective thrust (body frame, N) and torque (N*m) from rotor activations.
/// Rotor numbering and signs follow the +x-forward, clockwise-numbered layout.
struct ThrustTorque {
  Vec3 thrust_B;
  Vec3 torque_B;
};
ThrustTorque thrust_torque(const ControlInput& u, const QuadParams& params);

/// Nominal rigid-body derivative f_phys. Packed layout matches StateVec.
/// The quaternion block of x is normalized internally before use, so the
/// function is safe to evaluate at integrator stage points.
StateVec f_phys(const QuadState& x, const ControlInput& u, const QuadParams& params);
StateVec f_phys(const StateVec& x, const ControlInput& u, const QuadParams& params);

using DerivativeFn = std::function<StateVec(const StateVec&, const ControlInput&)>;

/// Classical RK4 step over dt with quaternion renormalization (w >= 0) after
/// the step. Throws std::runtime_error if the derivative turns non-finite.
QuadState rk4_step(const DerivativeFn& f, const QuadState& x, const ControlInput& u, double dt);
StateVec rk4_step(const DerivativeFn& f, const StateVec& x, const ControlInput& u, double dt);

}  // namespace quadmpc
