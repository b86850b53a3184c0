#pragma once

#include <array>
#include <vector>

#include "quadmpc/estimator.hpp"
#include "quadmpc/types.hpp"

namespace quadmpc {

/// Squared-exponential kernel hyperparameters (sigma_f, l, sigma_n).
struct KernelHyperparams {
  double sigma_f{1.0};
  double l{0.1};
  double sigma_n{0.1};

  void validate() const {
    if (!(sigma_f > 0.0) || !(l > 0.0) || !(sigma_n > 0.0)) {
      throw std::invalid_argument("KernelHyperparams: all entries must be strictly positive");
    }
  }
};

/// k(x,x') = sigma_f^2 exp(-0.5 (x-x')^2 / l), plus sigma_n^2 when the two
/// inputs are the same sample (x == x'). Applied elementwise to build Gram and
/// cross-covariance matrices, so diagonals carry the noise term and the
/// H(basis) = I identity holds at basis points.
double kernel(double x, double x2, const KernelHyperparams& hyper);

/// Noise-free squared-exponential part only; smooth in both arguments.
double kernel_se(double x, double x2, const KernelHyperparams& hyper);

Eigen::MatrixXd kernel_matrix(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                              const KernelHyperparams& hyper);

/// Posterior over drag accelerations at the fixed basis velocities of one axis.
struct RgpDimState {
  Eigen::VectorXd basis_v;       ///< m basis velocities, strictly increasing
  Eigen::VectorXd mean;          ///< posterior mean at the basis
  Eigen::MatrixXd cov;           ///< posterior covariance at the basis
  KernelHyperparams hyper;
  Eigen::MatrixXd K_basis_inv;   ///< cached inverse of k(basis, basis)

  int size() const { return static_cast<int>(basis_v.size()); }
};

/// One independent RGP per body axis d in {x, y, z}.
struct RgpEnsemble {
  std::array<RgpDimState, 3> dims;
};

/// Basis equidistant on [-v_max, v_max], zero prior mean, prior covariance
/// k(V,V). Requires m >= 2.
RgpDimState rgp_dim_init(double v_max, int m, const KernelHyperparams& hyper);
RgpEnsemble rgp_init(double v_max, int m, const KernelHyperparams& hyper);

/// Kalman-style recursive update with one scalar observation pair.
/// Throws std::runtime_error on a nonpositive innovation variance.
RgpDimState rgp_update(const RgpDimState& state, double v_obs, double a_obs);

struct RgpInference {
  double mean{0.0};
  double var{0.0};
};

/// Marginalized inference at an arbitrary velocity: mean H mu, variance
/// k(v,v) - H k(V,v) + H C H^T, clamped at zero.
RgpInference rgp_infer(const RgpDimState& state, double v_query);

/// Per-axis inference means stacked into a vector, matching v_B componentwise.
Vec3 ensemble_infer(const RgpEnsemble& ens, const Vec3& v_B);

/// Scalar training pair for the batch baseline.
struct VaSample {
  double v{0.0};
  double a{0.0};
};

struct BatchGpFit {
  RgpDimState state;   ///< predictor with the same inference interface
  bool converged{true};
  double log_marginal_likelihood{0.0};
};

/// Pre-trained baseline: picks m inducing inputs by farthest-point selection,
/// optimizes (sigma_f, l, sigma_n) by maximizing the log marginal likelihood
/// (Nelder-Mead in log-space, sigma_n floored at 1e-4), then conditions the
/// basis posterior on the full dataset in one batch solve.
BatchGpFit batch_gp_fit(const std::vector<VaSample>& data, int m,
                        const KernelHyperparams& hyper_init);

/// Batch fit of all three axes from a stream of accepted drag observations.
RgpEnsemble batch_gp_fit_ensemble(const std::vector<DragObservation>& observations, int m,
                                  const KernelHyperparams& hyper_init, bool* all_converged);

}  // namespace quadmpc
