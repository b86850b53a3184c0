#include "quadmpc/ocp.hpp"

#include <chrono>
#include <cmath>

namespace quadmpc {

OcpModel make_prediction_model(const QuadParams& qp, const RgpParamVector& rp) {
  return [qp, rp](const StateVec& x, const Vec4& u) {
    return f_pred(x, ControlInput(u), qp, rp);
  };
}

StateVec integrate_interval(const OcpModel& f, const StateVec& x, const Vec4& u, double T,
                            int substeps) {
  // No quaternion renormalization here: the projection onto the unit sphere
  // would turn the state sensitivity into a tangent projector and break the
  // T -> 0 identity limit. RK4 keeps the norm to O(dt^5) per substep, which
  // is plenty over one shooting interval; the plant integrator renormalizes.
  const double dt = T / substeps;
  StateVec cur = x;
  for (int s = 0; s < substeps; ++s) {
    const StateVec k1 = f(cur, u);
    const StateVec k2 = f(cur + 0.5 * dt * k1, u);
    const StateVec k3 = f(cur + 0.5 * dt * k2, u);
    const StateVec k4 = f(cur + dt * k3, u);
    cur += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!cur.allFinite()) {
    throw std::runtime_error("integrate_interval: non-finite state");
  }
  return cur;
}

DiscreteStep discretize(const OcpModel& f, const StateVec& x, const Vec4& u, double T,
                        int substeps, double fd_step) {
  if (!(T > 0.0)) {
    throw std::invalid_argument("discretize: interval must be positive");
  }
  DiscreteStep out;
  out.x_next = integrate_interval(f, x, u, T, substeps);

  const double h = fd_step;
  for (int i = 0; i < 13; ++i) {
    StateVec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    out.A.col(i) =
        (integrate_interval(f, xp, u, T, substeps) - integrate_interval(f, xm, u, T, substeps)) /
        (2.0 * h);
  }
  for (int i = 0; i < 4; ++i) {
    Vec4 up = u, um = u;
    up(i) += h;
    um(i) -= h;
    out.B.col(i) =
        (integrate_interval(f, x, up, T, substeps) - integrate_interval(f, x, um, T, substeps)) /
        (2.0 * h);
  }
  return out;
}

namespace {

// Sign-corrected attitude error quaternion q_ref^-1 * q, w >= 0.
Quaternion attitude_error_quat(const Quaternion& q, const Quaternion& q_ref) {
  Quaternion e = q_ref.conjugate() * q;
  if (e.w() < 0.0) {
    e.coeffs() = -e.coeffs();
  }
  return e;
}

}  // namespace

Eigen::Matrix<double, 12, 1> state_error(const QuadState& x, const QuadState& x_ref) {
  Eigen::Matrix<double, 12, 1> e;
  e.segment<3>(0) = x.p_W - x_ref.p_W;
  const Quaternion eq = attitude_error_quat(x.q_WB, x_ref.q_WB);
  e.segment<3>(3) = 2.0 * eq.vec();
  e.segment<3>(6) = x.v_W - x_ref.v_W;
  e.segment<3>(9) = x.omega_B - x_ref.omega_B;
  return e;
}

Eigen::Matrix<double, 12, 13> state_error_jacobian(const QuadState& x, const QuadState& x_ref) {
  Eigen::Matrix<double, 12, 13> E = Eigen::Matrix<double, 12, 13>::Zero();
  E.block<3, 3>(0, 0).setIdentity();
  E.block<3, 3>(6, 7).setIdentity();
  E.block<3, 3>(9, 10).setIdentity();

  // vec(p * q) is linear in q with p = q_ref^-1; rows of the left-product
  // matrix, times the double-cover sign.
  Quaternion p = x_ref.q_WB.conjugate();
  const Quaternion e = p * x.q_WB;
  const double sign = (e.w() < 0.0) ? -1.0 : 1.0;
  const double pw = p.w(), px = p.x(), py = p.y(), pz = p.z();
  Eigen::Matrix<double, 3, 4> L;
  L << px, pw, -pz, py,
       py, pz, pw, -px,
       pz, -py, px, pw;
  E.block<3, 4>(3, 3) = 2.0 * sign * L;
  return E;
}

OcpSolution hover_warm_start(const OcpConfig& cfg, const QuadState& x0, const QuadParams& qp) {
  OcpSolution w;
  w.u_traj.assign(cfg.n_h, Vec4::Constant(qp.hover_input()));
  w.x_traj.assign(cfg.n_h + 1, x0);
  return w;
}

struct SqpRtiWorkspace {
  explicit SqpRtiWorkspace(int n_h)
      : u_bar(n_h),
        x_bar(n_h + 1),
        steps(n_h),
        dx_du(n_h),
        J(Eigen::MatrixXd::Zero(16 * n_h, 4 * n_h)),
        r(Eigen::VectorXd::Zero(16 * n_h)),
        H(4 * n_h, 4 * n_h),
        g(4 * n_h),
        lo(4 * n_h),
        hi(4 * n_h) {}

  std::vector<Vec4> u_bar;
  std::vector<StateVec> x_bar;
  std::vector<DiscreteStep> steps;
  std::vector<Eigen::Matrix<double, 13, 4>> dx_du;
  Eigen::MatrixXd J;
  Eigen::VectorXd r;
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

namespace {

OcpSolution rti_step_on(SqpRtiWorkspace& ws, const OcpConfig& cfg, const QuadState& x0,
                        const ReferenceWindow& ref, const OcpSolution& warm,
                        const QuadParams& qp, const RgpParamVector& rp) {
  const auto t_start = std::chrono::steady_clock::now();
  const int n_h = cfg.n_h;
  if (static_cast<int>(warm.u_traj.size()) != n_h ||
      static_cast<int>(ref.x_ref.size()) != n_h + 1 ||
      static_cast<int>(ref.u_ref.size()) != n_h) {
    throw std::invalid_argument("sqp_rti_step: warm/reference shapes do not match config");
  }

  const OcpModel model = make_prediction_model(qp, rp);
  const double T = cfg.interval();

  // Forward pass from the measured state along the warm inputs.
  for (int i = 0; i < n_h; ++i) {
    ws.u_bar[i] = warm.u_traj[i].cwiseMax(cfg.u_min).cwiseMin(cfg.u_max);
  }
  ws.x_bar[0] = x0.pack();
  for (int i = 0; i < n_h; ++i) {
    ws.steps[i] =
        discretize(model, ws.x_bar[i], ws.u_bar[i], T, cfg.integrator_substeps, cfg.fd_step);
    ws.x_bar[i + 1] = ws.steps[i].x_next;
  }

  // Condensed Gauss-Newton least squares over the stacked input increments:
  // rows are sqrt(Q)-weighted state errors at nodes 1..n_h and sqrt(R)-weighted
  // input deviations. delta x_0 = 0, so node 0 contributes a constant.
  const Eigen::Matrix<double, 12, 1> q_sqrt = cfg.q_weights.cwiseSqrt();
  const Vec4 r_sqrt = cfg.r_weights.cwiseSqrt();

  ws.J.setZero();
  ws.r.setZero();
  for (auto& m : ws.dx_du) m.setZero();

  // Sensitivity of x_bar[i] w.r.t. each input block, built incrementally:
  // dx_{i} = A_{i-1} dx_{i-1} + B_{i-1} du_{i-1}.
  for (int i = 1; i <= n_h; ++i) {
    for (int j = 0; j < i - 1; ++j) {
      ws.dx_du[j] = ws.steps[i - 1].A * ws.dx_du[j];
    }
    ws.dx_du[i - 1] = ws.steps[i - 1].B;

    const QuadState xi = QuadState::unpack(ws.x_bar[i]);
    const Eigen::Matrix<double, 12, 13> E = state_error_jacobian(xi, ref.x_ref[i]);
    const Eigen::Matrix<double, 12, 1> e = state_error(xi, ref.x_ref[i]);

    const int row = 12 * (i - 1);
    ws.r.segment<12>(row) = q_sqrt.asDiagonal() * e;
    for (int j = 0; j < i; ++j) {
      ws.J.block<12, 4>(row, 4 * j) = q_sqrt.asDiagonal() * (E * ws.dx_du[j]);
    }
  }
  for (int i = 0; i < n_h; ++i) {
    const int row = 12 * n_h + 4 * i;
    ws.r.segment<4>(row) = r_sqrt.asDiagonal() * (ws.u_bar[i] - ref.u_ref[i]);
    ws.J.block<4, 4>(row, 4 * i) = r_sqrt.asDiagonal();
  }

  ws.H.noalias() = ws.J.transpose() * ws.J;
  ws.g.noalias() = ws.J.transpose() * ws.r;

  for (int i = 0; i < n_h; ++i) {
    ws.lo.segment<4>(4 * i) = Vec4::Constant(cfg.u_min) - ws.u_bar[i];
    ws.hi.segment<4>(4 * i) = Vec4::Constant(cfg.u_max) - ws.u_bar[i];
  }

  OcpSolution sol;
  // First-order stationarity of the tracking NLP at the linearization point
  // (g is its exact gradient there).
  sol.kkt_residual =
      Eigen::VectorXd((-ws.g).cwiseMax(ws.lo).cwiseMin(ws.hi)).cwiseAbs().maxCoeff();

  Eigen::VectorXd du = Eigen::VectorXd::Zero(4 * n_h);
  const QpSolution qp_sol = solve_box_qp(ws.H, ws.g, ws.lo, ws.hi);
  if (qp_sol.max_iter_reached || !qp_sol.x.allFinite()) {
    sol.qp_fallback = true;  // keep the warm inputs
  } else {
    du = qp_sol.x;
  }

  sol.u_traj.resize(n_h);
  for (int i = 0; i < n_h; ++i) {
    sol.u_traj[i] =
        (ws.u_bar[i] + du.segment<4>(4 * i)).cwiseMax(cfg.u_min).cwiseMin(cfg.u_max);
  }

  // Predicted trajectory under the updated inputs.
  sol.x_traj.resize(n_h + 1);
  sol.x_traj[0] = x0;
  StateVec cur = x0.pack();
  for (int i = 0; i < n_h; ++i) {
    cur = integrate_interval(model, cur, sol.u_traj[i], T, cfg.integrator_substeps);
    sol.x_traj[i + 1] = QuadState::unpack(cur);
  }

  sol.solve_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
          .count();
  return sol;
}

}  // namespace

OcpSolution sqp_rti_step(const OcpConfig& cfg, const QuadState& x0, const ReferenceWindow& ref,
                         const OcpSolution& warm, const QuadParams& qp,
                         const RgpParamVector& rp) {
  cfg.validate();
  SqpRtiWorkspace ws(cfg.n_h);
  return rti_step_on(ws, cfg, x0, ref, warm, qp, rp);
}

SqpRtiController::SqpRtiController(OcpConfig cfg, QuadParams quad, int expected_rgp_m)
    : cfg_(std::move(cfg)), quad_(std::move(quad)), expected_rgp_m_(expected_rgp_m) {
  cfg_.validate();
  quad_.validate();
  workspace_ = std::make_unique<SqpRtiWorkspace>(cfg_.n_h);
}

SqpRtiController::~SqpRtiController() = default;
SqpRtiController::SqpRtiController(SqpRtiController&&) noexcept = default;
SqpRtiController& SqpRtiController::operator=(SqpRtiController&&) noexcept = default;

namespace {

void check_param_dims(const RgpParamVector& rp, int expected_m) {
  for (const auto& axis : rp.axes) {
    if (axis.basis_v.size() != expected_m || axis.mean.size() != expected_m ||
        axis.alpha.size() != expected_m) {
      throw std::invalid_argument("update_rgp_params: dimension mismatch with configured m");
    }
  }
}

}  // namespace

void SqpRtiController::update_rgp_params(const RgpParamVector& rp) {
  if (expected_rgp_m_ > 0 && !rp.is_zero()) {
    check_param_dims(rp, expected_rgp_m_);
  }
  rgp_params_ = rp;
}

void SqpRtiController::update_rgp_params(RgpParamVector&& rp) {
  if (expected_rgp_m_ > 0 && !rp.is_zero()) {
    check_param_dims(rp, expected_rgp_m_);
  }
  rgp_params_ = std::move(rp);
}

const OcpSolution& SqpRtiController::solve(const QuadState& x0, const ReferenceWindow& ref) {
  if (!has_warm_) {
    warm_ = hover_warm_start(cfg_, x0, quad_);
    has_warm_ = true;
  }
  last_ = rti_step_on(*workspace_, cfg_, x0, ref, warm_, quad_, rgp_params_);

  // Next warm start: the returned solution. The classic shift-by-one-interval
  // applies when the control period equals the shooting interval; here the
  // loop re-solves many times per interval, so the window moves by only a
  // fraction of a node and the unshifted solution is the better predictor.
  warm_ = last_;
  return last_;
}

}  // namespace quadmpc
