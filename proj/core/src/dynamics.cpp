#include "quadmpc/dynamics.hpp"

#include <cmath>

namespace quadmpc {

Quaternion normalized_wpos(const Quaternion& q) {
  Quaternion n = q.normalized();
  if (n.w() < 0.0) {
    n.coeffs() = -n.coeffs();
  }
  return n;
}

Vec3 quat_rotate(const Quaternion& q, const Vec3& v) {
  if (std::abs(q.norm() - 1.0) > 1e-6) {
    throw std::invalid_argument("quat_rotate: quaternion is not unit-norm");
  }
  return q * v;
}

Vec4 quat_derivative(const Quaternion& q, const Vec3& omega_B) {
  // q_dot = 0.5 * q  (0, w); Hamilton product expanded.
  const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
  const double ox = omega_B.x(), oy = omega_B.y(), oz = omega_B.z();
  Vec4 dq;
  dq(0) = 0.5 * (-x * ox - y * oy - z * oz);
  dq(1) = 0.5 * (w * ox + y * oz - z * oy);
  dq(2) = 0.5 * (w * oy - x * oz + z * ox);
  dq(3) = 0.5 * (w * oz + x * oy - y * ox);
  return dq;
}

ThrustTorque thrust_torque(const ControlInput& u, const QuadParams& params) {
  // Finiteness only: the map is affine in u and the optimizer probes slightly
  // outside the box while differentiating. The [0,1] constraint is enforced
  // where inputs are applied.
  if (!u.u.allFinite()) {
    throw std::invalid_argument("thrust_torque: non-finite control input");
  }
  const Vec4 T = params.thrust_max * u.u;
  ThrustTorque out;
  out.thrust_B = Vec3(0.0, 0.0, T.sum());
  out.torque_B = Vec3(params.d_y * (-T(0) - T(1) + T(2) + T(3)),
                      params.d_x * (-T(0) + T(1) + T(2) - T(3)),
                      params.c_tau * (-T(0) + T(1) - T(2) + T(3)));
  return out;
}

StateVec f_phys(const QuadState& x, const ControlInput& u, const QuadParams& params) {
  return f_phys(x.pack(), u, params);
}

StateVec f_phys(const StateVec& x, const ControlInput& u, const QuadParams& params) {
  const Vec3 v_W = x.segment<3>(7);
  const Vec3 omega_B = x.segment<3>(10);
  const Quaternion q_raw(x(3), x(4), x(5), x(6));
  const Quaternion q = q_raw.normalized();

  const ThrustTorque tt = thrust_torque(u, params);

  StateVec dx;
  dx.segment<3>(0) = v_W;
  dx.segment<4>(3) = quat_derivative(q_raw, omega_B);
  dx.segment<3>(7) = q * (tt.thrust_B / params.mass) + params.g_W;
  dx.segment<3>(10) =
      params.inertia.inverse() * (tt.torque_B - omega_B.cross(params.inertia * omega_B));
  return dx;
}

StateVec rk4_step(const DerivativeFn& f, const StateVec& x, const ControlInput& u, double dt) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("rk4_step: dt must be positive");
  }
  const StateVec k1 = f(x, u);
  const StateVec k2 = f(x + 0.5 * dt * k1, u);
  const StateVec k3 = f(x + 0.5 * dt * k2, u);
  const StateVec k4 = f(x + dt * k3, u);
  StateVec next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) {
    throw std::runtime_error("rk4_step: non-finite state after step");
  }
  const Quaternion q = normalized_wpos(Quaternion(next(3), next(4), next(5), next(6)));
  next(3) = q.w();
  next(4) = q.x();
  next(5) = q.y();
  next(6) = q.z();
  return next;
}

QuadState rk4_step(const DerivativeFn& f, const QuadState& x, const ControlInput& u, double dt) {
  return QuadState::unpack(rk4_step(f, x.pack(), u, dt));
}

}  // namespace quadmpc
