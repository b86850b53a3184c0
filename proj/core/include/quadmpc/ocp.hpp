#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "quadmpc/augmented.hpp"
#include "quadmpc/qp.hpp"
#include "quadmpc/types.hpp"

namespace quadmpc {

struct OcpConfig {
  double t_h{1.0};  ///< horizon look-forward time [s]
  int n_h{5};       ///< shooting intervals

  /// State-error weights: position(3), attitude(3), velocity(3), body rate(3).
  Eigen::Matrix<double, 12, 1> q_weights{
      (Eigen::Matrix<double, 12, 1>() << 10, 10, 10, 5, 5, 5, 1, 1, 1, 0.1, 0.1, 0.1).finished()};
  Vec4 r_weights{0.1, 0.1, 0.1, 0.1};

  double u_min{0.0};
  double u_max{1.0};

  int integrator_substeps{4};  ///< RK4 substeps per shooting interval
  double fd_step{1e-6};        ///< central-difference step for sensitivities

  double interval() const { return t_h / n_h; }

  void validate() const {
    if (!(t_h > 0.0) || n_h < 1) {
      throw std::invalid_argument("OcpConfig: need t_h > 0 and n_h >= 1");
    }
    if ((q_weights.array() < 0.0).any()) {
      throw std::invalid_argument("OcpConfig: Q weights must be nonnegative");
    }
    if ((r_weights.array() <= 0.0).any()) {
      throw std::invalid_argument("OcpConfig: R weights must be strictly positive");
    }
    if (integrator_substeps < 1 || !(fd_step > 0.0) || !(u_min < u_max)) {
      throw std::invalid_argument("OcpConfig: bad integrator/bounds settings");
    }
  }
};

/// Reference states at the n_h+1 shooting nodes plus per-node input feedforward.
struct ReferenceWindow {
  std::vector<QuadState> x_ref;  ///< n_h + 1 entries
  std::vector<Vec4> u_ref;       ///< n_h entries
};

struct OcpSolution {
  std::vector<Vec4> u_traj;       ///< n_h rows, each within bounds
  std::vector<QuadState> x_traj;  ///< n_h+1 rows, x_traj[0] = measured state
  double kkt_residual{0.0};       ///< NLP projected-gradient residual at the linearization point
  double solve_time_ms{0.0};
  bool qp_fallback{false};
};

/// Continuous-time model used by the OCP: (x, u) -> state derivative.
using OcpModel = std::function<StateVec(const StateVec&, const Vec4&)>;

/// Prediction model closure for given physical and RGP parameters.
OcpModel make_prediction_model(const QuadParams& qp, const RgpParamVector& rp);

struct DiscreteStep {
  StateVec x_next;
  Eigen::Matrix<double, 13, 13> A;  ///< d x_next / d x
  Eigen::Matrix<double, 13, 4> B;   ///< d x_next / d u
};

/// Fixed-substep RK4 over one shooting interval.
StateVec integrate_interval(const OcpModel& f, const StateVec& x, const Vec4& u, double T,
                            int substeps);

/// One shooting interval plus sensitivities by central differences on the
/// same integrator.
DiscreteStep discretize(const OcpModel& f, const StateVec& x, const Vec4& u, double T,
                        int substeps, double fd_step);

/// 12-dim tracking error [p; 2*vec(q_ref^-1 q); v; omega], sign-fixed so the
/// attitude term is invariant to the quaternion double cover.
Eigen::Matrix<double, 12, 1> state_error(const QuadState& x, const QuadState& x_ref);

/// Jacobian of state_error with respect to the packed 13-dim state.
Eigen::Matrix<double, 12, 13> state_error_jacobian(const QuadState& x, const QuadState& x_ref);

/// One Gauss-Newton real-time iteration: linearize along (x0, warm inputs),
/// condense onto the input increments, solve the box QP, take the full step.
OcpSolution sqp_rti_step(const OcpConfig& cfg, const QuadState& x0, const ReferenceWindow& ref,
                         const OcpSolution& warm, const QuadParams& qp,
                         const RgpParamVector& rp);

/// Hover-input warm start used before the first solve.
OcpSolution hover_warm_start(const OcpConfig& cfg, const QuadState& x0, const QuadParams& qp);

struct SqpRtiWorkspace;

/// Closed-loop controller wrapper: owns the warm start, the current RGP
/// parameter snapshot, and the preallocated condensing workspace.
class SqpRtiController {
 public:
  SqpRtiController(OcpConfig cfg, QuadParams quad, int expected_rgp_m = -1);
  ~SqpRtiController();
  SqpRtiController(SqpRtiController&&) noexcept;
  SqpRtiController& operator=(SqpRtiController&&) noexcept;

  /// Swaps in a new parameter snapshot for the next solve. Throws on
  /// dimension mismatch; the problem structure is untouched. The rvalue
  /// overload is the per-step injection path and does not allocate.
  void update_rgp_params(const RgpParamVector& rp);
  void update_rgp_params(RgpParamVector&& rp);

  const OcpSolution& solve(const QuadState& x0, const ReferenceWindow& ref);

  const OcpConfig& config() const { return cfg_; }
  const RgpParamVector& rgp_params() const { return rgp_params_; }

 private:
  OcpConfig cfg_;
  QuadParams quad_;
  int expected_rgp_m_;
  RgpParamVector rgp_params_{RgpParamVector::zero()};
  OcpSolution warm_;
  bool has_warm_{false};
  OcpSolution last_;
  std::unique_ptr<SqpRtiWorkspace> workspace_;
};

}  // namespace quadmpc
