#include "quadmpc/qp.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace quadmpc {

double box_qp_kkt_residual(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                           const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                           const Eigen::VectorXd& x) {
  const Eigen::VectorXd grad = H * x + g;
  const Eigen::VectorXd proj = (x - grad).cwiseMax(lo).cwiseMin(hi);
  return (x - proj).cwiseAbs().maxCoeff();
}

QpSolution solve_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                        const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return solve_box_qp(H, g, lo, hi, Eigen::VectorXd::Zero(g.size()).cwiseMax(lo).cwiseMin(hi));
}

QpSolution solve_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                        const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                        const Eigen::VectorXd& x0) {
  const Eigen::Index n = g.size();
  if (H.rows() != n || H.cols() != n || lo.size() != n || hi.size() != n || x0.size() != n) {
    throw std::invalid_argument("solve_box_qp: dimension mismatch");
  }
  if ((lo.array() > hi.array()).any()) {
    throw std::invalid_argument("solve_box_qp: lo exceeds hi");
  }

  constexpr double kTol = 1e-12;

  QpSolution sol;
  sol.x = x0.cwiseMax(lo).cwiseMin(hi);

  // Active flags: -1 held at lower bound, +1 at upper, 0 free.
  std::vector<int> active(n, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sol.x(i) <= lo(i) + kTol) active[i] = -1;
    else if (sol.x(i) >= hi(i) - kTol) active[i] = +1;
  }

  const int max_iter = 40 * static_cast<int>(n) + 40;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    std::vector<Eigen::Index> free_idx;
    free_idx.reserve(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (active[i] == 0) free_idx.push_back(i);
    }

    const Eigen::VectorXd grad = H * sol.x + g;

    // Newton step on the free block, zero elsewhere.
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    if (!free_idx.empty()) {
      const Eigen::Index nf = static_cast<Eigen::Index>(free_idx.size());
      Eigen::MatrixXd Hff(nf, nf);
      Eigen::VectorXd gf(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        gf(a) = grad(free_idx[a]);
        for (Eigen::Index b = 0; b < nf; ++b) {
          Hff(a, b) = H(free_idx[a], free_idx[b]);
        }
      }
      Eigen::LLT<Eigen::MatrixXd> llt(Hff);
      if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("solve_box_qp: Hessian block not positive definite");
      }
      const Eigen::VectorXd pf = llt.solve(-gf);
      for (Eigen::Index a = 0; a < nf; ++a) p(free_idx[a]) = pf(a);
    }

    if (p.cwiseAbs().maxCoeff() <= kTol || free_idx.empty()) {
      // Stationary on the free block: check multiplier signs on the bounds.
      // Lower bound needs grad >= 0, upper bound needs grad <= 0.
      Eigen::Index worst = -1;
      double worst_val = -kTol;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (active[i] == 0) continue;
        const double lambda = (active[i] == -1) ? grad(i) : -grad(i);
        if (lambda < worst_val) {
          worst_val = lambda;
          worst = i;
        }
      }
      if (worst < 0) {
        break;  // KKT satisfied
      }
      active[worst] = 0;
      continue;
    }

    // Longest step along p that keeps the free variables inside the box.
    double alpha = 1.0;
    Eigen::Index blocking = -1;
    int blocking_side = 0;
    for (Eigen::Index i : free_idx) {
      if (p(i) > kTol) {
        const double a = (hi(i) - sol.x(i)) / p(i);
        if (a < alpha) {
          alpha = a;
          blocking = i;
          blocking_side = +1;
        }
      } else if (p(i) < -kTol) {
        const double a = (lo(i) - sol.x(i)) / p(i);
        if (a < alpha) {
          alpha = a;
          blocking = i;
          blocking_side = -1;
        }
      }
    }

    sol.x += std::max(alpha, 0.0) * p;
    if (blocking >= 0) {
      active[blocking] = blocking_side;
      sol.x(blocking) = (blocking_side > 0) ? hi(blocking) : lo(blocking);
    }
    sol.x = sol.x.cwiseMax(lo).cwiseMin(hi);
  }

  sol.iterations = iter;
  sol.max_iter_reached = (iter >= max_iter);
  sol.kkt_residual = box_qp_kkt_residual(H, g, lo, hi, sol.x);
  return sol;
}

}  // namespace quadmpc
