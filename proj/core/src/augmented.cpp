#include "quadmpc/augmented.hpp"

#include <cmath>

namespace quadmpc {

RgpParamVector RgpParamVector::zero() {
  RgpParamVector p;
  for (auto& axis : p.axes) {
    axis.basis_v = Eigen::VectorXd();
    axis.mean = Eigen::VectorXd();
    axis.alpha = Eigen::VectorXd();
  }
  return p;
}

RgpParamVector RgpParamVector::from_ensemble(const RgpEnsemble& ens) {
  RgpParamVector p;
  for (int d = 0; d < 3; ++d) {
    const RgpDimState& s = ens.dims[d];
    p.axes[d].basis_v = s.basis_v;
    p.axes[d].mean = s.mean;
    p.axes[d].alpha = s.K_basis_inv * s.mean;
    p.axes[d].hyper = s.hyper;
  }
  return p;
}

bool RgpParamVector::is_zero() const {
  for (const auto& axis : axes) {
    if (axis.alpha.size() != 0 && axis.alpha.cwiseAbs().maxCoeff() != 0.0) {
      return false;
    }
  }
  return true;
}

double RgpParamVector::mean_at(int axis, double v) const {
  const Axis& a = axes[axis];
  const Eigen::Index m = a.basis_v.size();
  double mu = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    mu += kernel_se(v, a.basis_v(i), a.hyper) * a.alpha(i);
  }
  return mu;
}

Vec3 RgpParamVector::mean_vec(const Vec3& v_B) const {
  return Vec3(mean_at(0, v_B.x()), mean_at(1, v_B.y()), mean_at(2, v_B.z()));
}

void RgpParamVector::validate_dims(int m) const {
  for (const auto& axis : axes) {
    if (axis.basis_v.size() != m || axis.mean.size() != m || axis.alpha.size() != m) {
      throw std::invalid_argument("RgpParamVector: dimension mismatch with configured m");
    }
    if (!axis.mean.allFinite() || !axis.alpha.allFinite()) {
      throw std::invalid_argument("RgpParamVector: non-finite parameters");
    }
  }
}

StateVec f_rgp(const StateVec& x, const RgpParamVector& params) {
  StateVec dx = StateVec::Zero();
  if (params.is_zero()) {
    return dx;
  }
  const Quaternion q = Quaternion(x(3), x(4), x(5), x(6)).normalized();
  const Vec3 v_W = x.segment<3>(7);
  const Vec3 v_B = q.conjugate() * v_W;
  const Vec3 a_B = params.mean_vec(v_B);
  dx.segment<3>(7) = q * a_B;
  return dx;
}

StateVec f_rgp(const QuadState& x, const RgpParamVector& params) {
  return f_rgp(x.pack(), params);
}

StateVec f_pred(const StateVec& x, const ControlInput& u, const QuadParams& qp,
                const RgpParamVector& rp) {
  return f_phys(x, u, qp) + f_rgp(x, rp);
}

StateVec f_pred(const QuadState& x, const ControlInput& u, const QuadParams& qp,
                const RgpParamVector& rp) {
  return f_pred(x.pack(), u, qp, rp);
}

}  // namespace quadmpc
