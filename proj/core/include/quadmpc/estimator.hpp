#pragma once

#include <optional>

#include "quadmpc/types.hpp"

namespace quadmpc {

/// One training sample for the drag model: measured body velocity paired with
/// the estimated drag acceleration at that velocity.
struct DragObservation {
  Vec3 v_B{Vec3::Zero()};
  Vec3 a_tilde{Vec3::Zero()};
  double t{0.0};
};

struct ResidualConfig {
  double dt_min{1e-6};        ///< reject observations with steps shorter than this [s]
  double outlier_cap{20.0};   ///< componentwise clip on the residual acceleration [m/s^2]

  void validate() const {
    if (!(dt_min > 0.0) || !(outlier_cap > 0.0)) {
      throw std::invalid_argument("ResidualConfig: dt_min and outlier_cap must be positive");
    }
  }
};

enum class ResidualReject {
  None,
  DtTooSmall,
  NonFinite,
};

struct ResidualOutcome {
  std::optional<DragObservation> observation;
  ResidualReject reject{ResidualReject::None};
};

/// Turns one step of measured vs physics-predicted body velocity into a drag
/// observation: a_tilde = (v_meas - v_pred) / dt, clipped to +-outlier_cap.
/// Too-small dt or non-finite inputs reject the observation instead of erroring.
ResidualOutcome estimate_drag_observation(const Vec3& v_meas_next_B, const Vec3& v_pred_next_B,
                                          double dt, double t, const ResidualConfig& cfg);

}  // namespace quadmpc
