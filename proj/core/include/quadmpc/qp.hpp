#pragma once

#include <Eigen/Dense>

namespace quadmpc {

struct QpSolution {
  Eigen::VectorXd x;
  double kkt_residual{0.0};
  int iterations{0};
  bool max_iter_reached{false};
};

/// Solves min 0.5 x'Hx + g'x subject to lo <= x <= hi for symmetric positive
/// definite H with a primal active-set method. Bounds are satisfied exactly at
/// every iterate. If the iteration cap is hit the best iterate is returned
/// with max_iter_reached set.
QpSolution solve_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                        const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                        const Eigen::VectorXd& x0);

QpSolution solve_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                        const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

/// Projected-gradient stationarity residual ||x - clip(x - (Hx+g))||_inf.
double box_qp_kkt_residual(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                           const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                           const Eigen::VectorXd& x);

}  // namespace quadmpc
