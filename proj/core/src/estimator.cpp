#include "quadmpc/estimator.hpp"

namespace quadmpc {

ResidualOutcome estimate_drag_observation(const Vec3& v_meas_next_B, const Vec3& v_pred_next_B,
                                          double dt, double t, const ResidualConfig& cfg) {
  ResidualOutcome out;
  if (!v_meas_next_B.allFinite() || !v_pred_next_B.allFinite() || !std::isfinite(dt)) {
    out.reject = ResidualReject::NonFinite;
    return out;
  }
  if (dt < cfg.dt_min) {
    out.reject = ResidualReject::DtTooSmall;
    return out;
  }
  DragObservation obs;
  obs.v_B = v_meas_next_B;
  obs.a_tilde = ((v_meas_next_B - v_pred_next_B) / dt)
                    .cwiseMax(-cfg.outlier_cap)
                    .cwiseMin(cfg.outlier_cap);
  obs.t = t;
  out.observation = obs;
  return out;
}

}  // namespace quadmpc
