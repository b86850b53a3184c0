#include "quadmpc/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "quadmpc/dynamics.hpp"

namespace quadmpc {

void SampledTrajectory::validate() const {
  if (t.size() < 2 || t.size() != x_ref.size() || t.size() != u_ref.size()) {
    throw std::runtime_error("SampledTrajectory: inconsistent or empty arrays");
  }
  const double dt = 1.0 / f_s;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (std::abs(t[k] - static_cast<double>(k) * dt) > 1e-9) {
      throw std::runtime_error("SampledTrajectory: non-uniform time grid");
    }
    if (std::abs(x_ref[k].q_WB.norm() - 1.0) > 1e-9) {
      throw std::runtime_error("SampledTrajectory: non-unit reference quaternion");
    }
    if (v_max > 0.0 && x_ref[k].v_W.norm() > v_max + 1e-6) {
      throw std::runtime_error("SampledTrajectory: speed bound violated");
    }
    if (!x_ref[k].finite() || !u_ref[k].allFinite()) {
      throw std::runtime_error("SampledTrajectory: non-finite sample");
    }
  }
}

std::vector<Vec3> random_waypoints(double hsize, int n, std::uint64_t seed) {
  if (n < 2) {
    throw std::invalid_argument("random_waypoints: need at least 2 waypoints");
  }
  if (!(hsize > 0.0)) {
    throw std::invalid_argument("random_waypoints: hsize must be positive");
  }
  std::mt19937_64 rng(seed);
  // Explicit 53-bit uniform; distribution classes are not portable across
  // standard libraries.
  const auto uniform01 = [&rng]() {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };
  std::vector<Vec3> wps;
  wps.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double x = (uniform01() - 0.5) * hsize;
    const double y = (uniform01() - 0.5) * hsize;
    const double z = hsize + uniform01() * hsize;
    wps.emplace_back(x, y, z);
  }
  return wps;
}

Vec3 PiecewisePoly::eval(double t, int deriv) const {
  if (coeffs.empty()) {
    throw std::runtime_error("PiecewisePoly: empty");
  }
  t = std::clamp(t, 0.0, duration());
  std::size_t seg = 0;
  while (seg + 1 < coeffs.size() && t >= knots[seg + 1]) {
    ++seg;
  }
  const double tau = t - knots[seg];
  Vec3 out = Vec3::Zero();
  for (int p = deriv; p < 6; ++p) {
    double f = 1.0;
    for (int k = 0; k < deriv; ++k) f *= static_cast<double>(p - k);
    out += coeffs[seg].col(p) * (f * std::pow(tau, p - deriv));
  }
  return out;
}

namespace {

// Row of basis derivatives [d^k/dt^k t^p] for p = 0..5 at time t.
Eigen::Matrix<double, 1, 6> poly_basis(double t, int deriv) {
  Eigen::Matrix<double, 1, 6> row = Eigen::Matrix<double, 1, 6>::Zero();
  for (int p = deriv; p < 6; ++p) {
    double f = 1.0;
    for (int k = 0; k < deriv; ++k) f *= static_cast<double>(p - k);
    row(p) = f * std::pow(t, p - deriv);
  }
  return row;
}

// Minimum-jerk quintic spline through the waypoints: positions pinned at the
// segment ends, velocity and acceleration continuous at joints and zero at
// the trajectory boundary, remaining freedom spent on min integral jerk^2.
PiecewisePoly build_spline(const std::vector<Vec3>& wps, const std::vector<double>& durations) {
  const int S = static_cast<int>(durations.size());
  const int n = 6 * S;
  const int mc = 4 * S + 2;

  // Jerk Gram blocks: jerk(t) = 6 c3 + 24 c4 t + 60 c5 t^2.
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < S; ++s) {
    const double T = durations[s];
    const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
    Eigen::Matrix3d Q;
    Q << 36.0 * T, 72.0 * T2, 120.0 * T3,
         72.0 * T2, 192.0 * T3, 360.0 * T4,
         120.0 * T3, 360.0 * T4, 720.0 * T5;
    H.block<3, 3>(6 * s + 3, 6 * s + 3) = Q;
  }

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(mc, n);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(mc, 3);
  int row = 0;
  for (int s = 0; s < S; ++s) {
    A.block<1, 6>(row, 6 * s) = poly_basis(0.0, 0);
    b.row(row++) = wps[s].transpose();
    A.block<1, 6>(row, 6 * s) = poly_basis(durations[s], 0);
    b.row(row++) = wps[s + 1].transpose();
  }
  for (int s = 0; s + 1 < S; ++s) {
    for (int d = 1; d <= 2; ++d) {
      A.block<1, 6>(row, 6 * s) = poly_basis(durations[s], d);
      A.block<1, 6>(row, 6 * (s + 1)) -= poly_basis(0.0, d);
      ++row;
    }
  }
  A.block<1, 6>(row++, 0) = poly_basis(0.0, 1);
  A.block<1, 6>(row++, 0) = poly_basis(0.0, 2);
  A.block<1, 6>(row++, 6 * (S - 1)) = poly_basis(durations[S - 1], 1);
  A.block<1, 6>(row++, 6 * (S - 1)) = poly_basis(durations[S - 1], 2);

  // KKT system; H is only positive semidefinite but definite on null(A).
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + mc, n + mc);
  kkt.topLeftCorner(n, n) = H;
  kkt.topRightCorner(n, mc) = A.transpose();
  kkt.bottomLeftCorner(mc, n) = A;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + mc, 3);
  rhs.bottomRows(mc) = b;
  const Eigen::MatrixXd sol = kkt.partialPivLu().solve(rhs);

  PiecewisePoly poly;
  poly.knots.resize(S + 1);
  poly.knots[0] = 0.0;
  for (int s = 0; s < S; ++s) {
    poly.knots[s + 1] = poly.knots[s] + durations[s];
  }
  poly.coeffs.resize(S);
  for (int s = 0; s < S; ++s) {
    for (int axis = 0; axis < 3; ++axis) {
      poly.coeffs[s].row(axis) = sol.block<6, 1>(6 * s, axis).transpose();
    }
  }
  return poly;
}

struct PeakSpeeds {
  double v_peak;
  double a_peak;
};

PeakSpeeds dense_peaks(const PiecewisePoly& poly) {
  const double T = poly.duration();
  const int n = std::max(2000, static_cast<int>(T * 1000.0));
  PeakSpeeds pk{0.0, 0.0};
  for (int i = 0; i <= n; ++i) {
    const double t = T * static_cast<double>(i) / n;
    pk.v_peak = std::max(pk.v_peak, poly.eval(t, 1).norm());
    pk.a_peak = std::max(pk.a_peak, poly.eval(t, 2).norm());
  }
  return pk;
}

}  // namespace

PiecewisePoly fit_polynomial(const std::vector<Vec3>& waypoints, double v_max, double a_max) {
  if (waypoints.size() < 2) {
    throw std::invalid_argument("fit_polynomial: need at least 2 waypoints");
  }
  if (!(v_max > 0.0) || !(a_max > 0.0)) {
    throw std::invalid_argument("fit_polynomial: v_max and a_max must be positive");
  }

  std::vector<double> durations(waypoints.size() - 1);
  for (std::size_t s = 0; s + 1 < waypoints.size(); ++s) {
    durations[s] = std::max((waypoints[s + 1] - waypoints[s]).norm() / v_max, 0.1);
  }

  PiecewisePoly poly = build_spline(waypoints, durations);
  for (int pass = 0; pass < 10; ++pass) {
    const PeakSpeeds pk = dense_peaks(poly);
    const double gamma =
        std::max(pk.v_peak / v_max, std::sqrt(std::max(pk.a_peak / a_max, 0.0)));
    if (gamma < 1e-12) {
      break;  // stationary trajectory, nothing to scale
    }
    if (gamma <= 1.0 + 1e-9 && gamma >= 1.0 - 1e-3) {
      break;
    }
    // Uniform time scaling: speeds scale as 1/gamma, accelerations as 1/gamma^2.
    const double factor = gamma * (1.0 + 1e-6);
    for (auto& d : durations) d *= factor;
    poly = build_spline(waypoints, durations);
  }
  return poly;
}

namespace {

Quaternion flatness_attitude(const Vec3& accel, double yaw) {
  Vec3 z_B = accel - Vec3(0.0, 0.0, -kGravity);
  if (z_B.norm() < 1e-9) {
    z_B = Vec3(0.0, 0.0, 1.0);
  }
  z_B.normalize();
  const Vec3 x_C(std::cos(yaw), std::sin(yaw), 0.0);
  Vec3 y_B = z_B.cross(x_C);
  if (y_B.norm() < 1e-9) {
    const Vec3 y_C(-std::sin(yaw), std::cos(yaw), 0.0);
    y_B = y_C;
  }
  y_B.normalize();
  const Vec3 x_B = y_B.cross(z_B);
  Mat3 R;
  R.col(0) = x_B;
  R.col(1) = y_B;
  R.col(2) = z_B;
  return normalized_wpos(Quaternion(R));
}

// Body rate from consecutive attitudes: q_{k+1} ~ q_k * exp(0.5 w dt).
Vec3 body_rate_from_quats(const Quaternion& q0, const Quaternion& q1, double dt) {
  Quaternion d = q0.conjugate() * q1;
  if (d.w() < 0.0) {
    d.coeffs() = -d.coeffs();
  }
  return 2.0 * d.vec() / dt;
}

double collective_input(const Vec3& accel, const QuadParams& qp) {
  return qp.mass * (accel - qp.g_W).norm() / (4.0 * qp.thrust_max);
}

struct FlatSample {
  Vec3 p, v, a;
  double yaw;
};

SampledTrajectory assemble_from_flat(const std::vector<FlatSample>& flat, double f_s,
                                     double v_bound) {
  const QuadParams qp;  // reference inputs use the default vehicle
  SampledTrajectory traj;
  traj.f_s = f_s;
  traj.v_max = v_bound;
  const double dt = 1.0 / f_s;
  const std::size_t n = flat.size();
  traj.t.resize(n);
  traj.x_ref.resize(n);
  traj.u_ref.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    traj.t[k] = static_cast<double>(k) * dt;
    QuadState s;
    s.p_W = flat[k].p;
    s.v_W = flat[k].v;
    s.q_WB = flatness_attitude(flat[k].a, flat[k].yaw);
    traj.x_ref[k] = s;
    traj.u_ref[k] = Vec4::Constant(std::clamp(collective_input(flat[k].a, qp), 0.0, 1.0));
  }
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t k1 = std::min(k + 1, n - 1);
    if (k1 == k) {
      traj.x_ref[k].omega_B = (n >= 2) ? traj.x_ref[k - 1].omega_B : Vec3::Zero();
    } else {
      traj.x_ref[k].omega_B =
          body_rate_from_quats(traj.x_ref[k].q_WB, traj.x_ref[k1].q_WB, dt);
    }
  }
  return traj;
}

}  // namespace

SampledTrajectory sample_trajectory(const PiecewisePoly& poly, double f_s) {
  if (!(f_s > 0.0)) {
    throw std::invalid_argument("sample_trajectory: f_s must be positive");
  }
  const double T = poly.duration();
  const std::size_t n = static_cast<std::size_t>(std::floor(T * f_s)) + 1;
  std::vector<FlatSample> flat(n);
  double yaw = 0.0;
  bool yaw_init = false;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / f_s;
    flat[k].p = poly.eval(t, 0);
    flat[k].v = poly.eval(t, 1);
    flat[k].a = poly.eval(t, 2);
    const double vxy = std::hypot(flat[k].v.x(), flat[k].v.y());
    if (vxy > 0.05) {
      yaw = std::atan2(flat[k].v.y(), flat[k].v.x());
      yaw_init = true;
    } else if (!yaw_init) {
      yaw = 0.0;
    }
    flat[k].yaw = yaw;
  }
  // Hold the first defined yaw backwards over the initial standstill.
  for (std::size_t k = n; k-- > 1;) {
    const double vxy = std::hypot(flat[k - 1].v.x(), flat[k - 1].v.y());
    if (vxy <= 0.05) {
      flat[k - 1].yaw = flat[k].yaw;
    }
  }

  double v_peak = 0.0;
  for (const auto& s : flat) v_peak = std::max(v_peak, s.v.norm());
  SampledTrajectory traj = assemble_from_flat(flat, f_s, v_peak);
  traj.validate();
  return traj;
}

SampledTrajectory circle_trajectory(double radius, double v_max, double f_s, double altitude) {
  CircleConfig cfg;
  cfg.radius = radius;
  cfg.altitude = altitude;
  return circle_trajectory(cfg, v_max, f_s);
}

SampledTrajectory circle_trajectory(const CircleConfig& cfg, double v_max, double f_s) {
  if (!(cfg.radius > 0.0) || !(v_max > 0.0) || !(f_s > 0.0) || !(cfg.ramp_accel > 0.0)) {
    throw std::invalid_argument("circle_trajectory: radius, v_max, f_s, ramp_accel must be positive");
  }
  const double r = cfg.radius;
  const double t_ramp = v_max / cfg.ramp_accel;
  const double theta_ramp = 0.5 * cfg.ramp_accel * t_ramp * t_ramp / r;
  const double t_hold = 2.0 * M_PI * cfg.hold_laps * r / v_max;
  const double theta_hold = theta_ramp + v_max * t_hold / r;
  // Speed ramps back down to zero after the hold laps and the reference rests
  // briefly at the final point, so episodes end at an equilibrium.
  const double t_down = t_ramp + t_hold + t_ramp;
  const double T = t_down + 0.5;

  const std::size_t n = static_cast<std::size_t>(std::floor(T * f_s)) + 1;
  std::vector<FlatSample> flat(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / f_s;
    double speed, theta, tangential_accel;
    if (t <= t_ramp) {
      speed = cfg.ramp_accel * t;
      theta = 0.5 * cfg.ramp_accel * t * t / r;
      tangential_accel = cfg.ramp_accel;
    } else if (t <= t_ramp + t_hold) {
      speed = v_max;
      theta = theta_ramp + v_max * (t - t_ramp) / r;
      tangential_accel = 0.0;
    } else if (t <= t_down) {
      const double td = t - t_ramp - t_hold;
      speed = v_max - cfg.ramp_accel * td;
      theta = theta_hold + (v_max * td - 0.5 * cfg.ramp_accel * td * td) / r;
      tangential_accel = -cfg.ramp_accel;
    } else {
      const double td = t_ramp;
      speed = 0.0;
      theta = theta_hold + (v_max * td - 0.5 * cfg.ramp_accel * td * td) / r;
      tangential_accel = 0.0;
    }
    const Vec3 radial(std::cos(theta), std::sin(theta), 0.0);
    const Vec3 tangent(-std::sin(theta), std::cos(theta), 0.0);
    flat[k].p = r * radial + Vec3(0.0, 0.0, cfg.altitude);
    flat[k].v = speed * tangent;
    flat[k].a = tangential_accel * tangent - (speed * speed / r) * radial;
    flat[k].yaw = theta + 0.5 * M_PI;  // velocity direction, defined at speed 0
  }
  SampledTrajectory traj = assemble_from_flat(flat, f_s, v_max);
  traj.validate();
  return traj;
}

void save_trajectory_csv(const SampledTrajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("save_trajectory_csv: cannot open " + path);
  }
  out << "t,px,py,pz,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz,u1,u2,u3,u4\n";
  char buf[64];
  const auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf << sep;
  };
  for (std::size_t k = 0; k < traj.size(); ++k) {
    put(traj.t[k], ',');
    const StateVec x = traj.x_ref[k].pack();
    for (int i = 0; i < 13; ++i) put(x(i), ',');
    for (int i = 0; i < 4; ++i) put(traj.u_ref[k](i), i == 3 ? '\n' : ',');
  }
  if (!out) {
    throw std::runtime_error("save_trajectory_csv: write failed for " + path);
  }
}

SampledTrajectory load_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_trajectory_csv: cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("load_trajectory_csv: empty file " + path);
  }
  SampledTrajectory traj;
  std::vector<double> row;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    row.clear();
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      row.push_back(std::stod(cell));
    }
    if (row.size() != 18) {
      throw std::runtime_error("load_trajectory_csv: bad row in " + path);
    }
    traj.t.push_back(row[0]);
    StateVec x;
    for (int i = 0; i < 13; ++i) x(i) = row[1 + i];
    traj.x_ref.push_back(QuadState::unpack(x));
    traj.u_ref.push_back(Vec4(row[14], row[15], row[16], row[17]));
  }
  if (traj.t.size() >= 2) {
    traj.f_s = 1.0 / (traj.t[1] - traj.t[0]);
  }
  double v_peak = 0.0;
  for (const auto& s : traj.x_ref) v_peak = std::max(v_peak, s.v_W.norm());
  traj.v_max = v_peak;
  traj.validate();
  return traj;
}

}  // namespace quadmpc
