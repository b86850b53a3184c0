#pragma once

#include "quadmpc/dynamics.hpp"
#include "quadmpc/rgp.hpp"
#include "quadmpc/types.hpp"

namespace quadmpc {

/// Snapshot of the RGP posterior means, packaged as the per-step parameter
/// vector of the prediction model. The mean function is evaluated with the
/// noise-free squared-exponential row so it stays smooth in the velocity
/// decision variable; alpha = K(V,V)^-1 mu is precomputed per snapshot.
struct RgpParamVector {
  struct Axis {
    Eigen::VectorXd basis_v;
    Eigen::VectorXd mean;
    Eigen::VectorXd alpha;
    KernelHyperparams hyper;
  };
  std::array<Axis, 3> axes;

  /// Parameter vector that evaluates to zero everywhere (nominal model).
  static RgpParamVector zero();

  static RgpParamVector from_ensemble(const RgpEnsemble& ens);

  bool is_zero() const;

  /// Smooth per-axis mean at a scalar body velocity.
  double mean_at(int axis, double v) const;

  /// All three axis means at the body-frame velocity components.
  Vec3 mean_vec(const Vec3& v_B) const;

  void validate_dims(int m) const;
};

/// Learned-drag derivative contribution: zeros except the velocity slots,
/// which carry the per-axis mean at body-frame velocity, rotated to world.
StateVec f_rgp(const QuadState& x, const RgpParamVector& params);
StateVec f_rgp(const StateVec& x, const RgpParamVector& params);

/// Prediction model: exact sum f_phys + f_rgp.
StateVec f_pred(const QuadState& x, const ControlInput& u, const QuadParams& qp,
                const RgpParamVector& rp);
StateVec f_pred(const StateVec& x, const ControlInput& u, const QuadParams& qp,
                const RgpParamVector& rp);

}  // namespace quadmpc
