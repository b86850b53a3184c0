#include "quadmpc/rgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace quadmpc {

double kernel_se(double x, double x2, const KernelHyperparams& hyper) {
  const double d = x - x2;
  return hyper.sigma_f * hyper.sigma_f * std::exp(-0.5 * d * d / hyper.l);
}

double kernel(double x, double x2, const KernelHyperparams& hyper) {
  double k = kernel_se(x, x2, hyper);
  if (x == x2) {
    k += hyper.sigma_n * hyper.sigma_n;
  }
  return k;
}

Eigen::MatrixXd kernel_matrix(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                              const KernelHyperparams& hyper) {
  Eigen::MatrixXd K(a.size(), b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      K(i, j) = kernel(a(i), b(j), hyper);
    }
  }
  return K;
}

namespace {

Eigen::VectorXd kernel_row(double x, const Eigen::VectorXd& basis,
                           const KernelHyperparams& hyper) {
  Eigen::VectorXd k(basis.size());
  for (Eigen::Index i = 0; i < basis.size(); ++i) {
    k(i) = kernel(x, basis(i), hyper);
  }
  return k;
}

// Inverse through Cholesky; adds growing jitter if the factorization fails.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& K) {
  const Eigen::Index n = K.rows();
  double jitter = 0.0;
  for (int attempt = 0; attempt < 6; ++attempt) {
    Eigen::MatrixXd Kj = K;
    if (jitter > 0.0) {
      Kj.diagonal().array() += jitter;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(Kj);
    if (llt.info() == Eigen::Success) {
      return llt.solve(Eigen::MatrixXd::Identity(n, n));
    }
    jitter = (jitter == 0.0) ? 1e-10 : jitter * 100.0;
  }
  throw std::runtime_error("spd_inverse: Cholesky failed even with jitter");
}

}  // namespace

RgpDimState rgp_dim_init(double v_max, int m, const KernelHyperparams& hyper) {
  if (m < 2) {
    throw std::invalid_argument("rgp_dim_init: need at least 2 basis points");
  }
  if (!(v_max > 0.0)) {
    throw std::invalid_argument("rgp_dim_init: v_max must be positive");
  }
  hyper.validate();

  RgpDimState s;
  s.hyper = hyper;
  s.basis_v = Eigen::VectorXd::LinSpaced(m, -v_max, v_max);
  s.mean = Eigen::VectorXd::Zero(m);
  s.cov = kernel_matrix(s.basis_v, s.basis_v, hyper);
  s.K_basis_inv = spd_inverse(s.cov);
  return s;
}

RgpEnsemble rgp_init(double v_max, int m, const KernelHyperparams& hyper) {
  RgpEnsemble ens;
  const RgpDimState proto = rgp_dim_init(v_max, m, hyper);
  ens.dims = {proto, proto, proto};
  return ens;
}

RgpDimState rgp_update(const RgpDimState& state, double v_obs, double a_obs) {
  const Eigen::VectorXd k_vV = kernel_row(v_obs, state.basis_v, state.hyper);
  const Eigen::VectorXd J = state.K_basis_inv * k_vV;

  const double b = std::max(kernel(v_obs, v_obs, state.hyper) - J.dot(k_vV), 0.0);
  const double S =
      b + J.dot(state.cov * J) + state.hyper.sigma_n * state.hyper.sigma_n;
  if (!(S > 0.0)) {
    throw std::runtime_error("rgp_update: nonpositive innovation variance");
  }

  const Eigen::VectorXd G = (state.cov * J) / S;

  RgpDimState next = state;
  next.mean += G * (a_obs - J.dot(state.mean));
  next.cov -= S * (G * G.transpose());
  next.cov = 0.5 * (next.cov + next.cov.transpose()).eval();
  return next;
}

RgpInference rgp_infer(const RgpDimState& state, double v_query) {
  const Eigen::VectorXd k_vV = kernel_row(v_query, state.basis_v, state.hyper);
  const Eigen::VectorXd H = state.K_basis_inv * k_vV;

  RgpInference out;
  out.mean = H.dot(state.mean);
  const double var =
      kernel(v_query, v_query, state.hyper) - H.dot(k_vV) + H.dot(state.cov * H);
  out.var = std::max(var, 0.0);
  return out;
}

Vec3 ensemble_infer(const RgpEnsemble& ens, const Vec3& v_B) {
  return Vec3(rgp_infer(ens.dims[0], v_B.x()).mean, rgp_infer(ens.dims[1], v_B.y()).mean,
              rgp_infer(ens.dims[2], v_B.z()).mean);
}

namespace {

constexpr double kSigmaNFloor = 1e-4;

// Greedy farthest-point (maximin) selection over the distinct input values,
// seeded with the two extremes. Deterministic; ties break to the lower value.
Eigen::VectorXd maximin_inducing(const std::vector<VaSample>& data, int m) {
  std::vector<double> values;
  values.reserve(data.size());
  for (const auto& s : data) values.push_back(s.v);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  if (static_cast<int>(values.size()) < m) {
    throw std::invalid_argument("batch_gp_fit: fewer distinct inputs than inducing points");
  }

  std::vector<double> selected{values.front(), values.back()};
  std::vector<char> used(values.size(), 0);
  used.front() = used.back() = 1;

  while (static_cast<int>(selected.size()) < m) {
    double best_dist = -1.0;
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (used[i]) continue;
      double dmin = std::numeric_limits<double>::infinity();
      for (double s : selected) dmin = std::min(dmin, std::abs(values[i] - s));
      if (dmin > best_dist) {
        best_dist = dmin;
        best_idx = i;
      }
    }
    used[best_idx] = 1;
    selected.push_back(values[best_idx]);
  }

  std::sort(selected.begin(), selected.end());
  return Eigen::Map<Eigen::VectorXd>(selected.data(), static_cast<Eigen::Index>(selected.size()));
}

// Full-GP log marginal likelihood on (x, y) with K = K_SE + sigma_n^2 I.
double log_marginal_likelihood(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                               const KernelHyperparams& hyper) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      K(i, j) = kernel_se(x(i), x(j), hyper);
    }
  }
  K.diagonal().array() += hyper.sigma_n * hyper.sigma_n + 1e-12;

  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) {
    return -std::numeric_limits<double>::infinity();
  }
  const Eigen::VectorXd alpha = llt.solve(y);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    logdet += 2.0 * std::log(llt.matrixL()(i, i));
  }
  return -0.5 * y.dot(alpha) - 0.5 * logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
}

KernelHyperparams hyper_from_log(const Eigen::Vector3d& logp) {
  KernelHyperparams h;
  h.sigma_f = std::max(std::exp(logp(0)), 1e-6);
  h.l = std::max(std::exp(logp(1)), 1e-6);
  h.sigma_n = std::max(std::exp(logp(2)), kSigmaNFloor);
  return h;
}

// Nelder-Mead on the negative LML in log-parameter space.
struct MleResult {
  KernelHyperparams hyper;
  double lml;
  bool converged;
};

MleResult optimize_hyperparameters(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                   const KernelHyperparams& init) {
  using Point = Eigen::Vector3d;
  const auto objective = [&](const Point& p) { return -log_marginal_likelihood(x, y, hyper_from_log(p)); };

  const Point p0(std::log(init.sigma_f), std::log(init.l), std::log(std::max(init.sigma_n, kSigmaNFloor)));
  std::vector<Point> simplex{p0};
  for (int i = 0; i < 3; ++i) {
    Point p = p0;
    p(i) += 0.5;
    simplex.push_back(p);
  }
  std::vector<double> fv(4);
  for (int i = 0; i < 4; ++i) fv[i] = objective(simplex[i]);

  const int max_iter = 250;
  bool converged = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    std::array<int, 4> order{0, 1, 2, 3};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    if (std::abs(fv[order[3]] - fv[order[0]]) < 1e-8 * (1.0 + std::abs(fv[order[0]]))) {
      converged = true;
      break;
    }
    const Point& best = simplex[order[0]];
    const int worst = order[3];
    Point centroid = Point::Zero();
    for (int i = 0; i < 4; ++i) {
      if (i != worst) centroid += simplex[i];
    }
    centroid /= 3.0;

    const Point reflected = centroid + (centroid - simplex[worst]);
    const double fr = objective(reflected);
    if (fr < fv[order[0]]) {
      const Point expanded = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = objective(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        fv[worst] = fe;
      } else {
        simplex[worst] = reflected;
        fv[worst] = fr;
      }
    } else if (fr < fv[order[2]]) {
      simplex[worst] = reflected;
      fv[worst] = fr;
    } else {
      const Point contracted = centroid + 0.5 * (simplex[worst] - centroid);
      const double fc = objective(contracted);
      if (fc < fv[worst]) {
        simplex[worst] = contracted;
        fv[worst] = fc;
      } else {
        for (int i = 0; i < 4; ++i) {
          if (i == order[0]) continue;
          simplex[i] = best + 0.5 * (simplex[i] - best);
          fv[i] = objective(simplex[i]);
        }
      }
    }
  }

  int best = 0;
  for (int i = 1; i < 4; ++i) {
    if (fv[i] < fv[best]) best = i;
  }
  return MleResult{hyper_from_log(simplex[best]), -fv[best], converged};
}

}  // namespace

BatchGpFit batch_gp_fit(const std::vector<VaSample>& data, int m,
                        const KernelHyperparams& hyper_init) {
  if (static_cast<int>(data.size()) < m) {
    throw std::invalid_argument("batch_gp_fit: need at least m observations");
  }
  hyper_init.validate();

  const Eigen::VectorXd basis = maximin_inducing(data, m);

  // MLE on a strided subset keeps the n^3 likelihood evaluations cheap.
  const std::size_t cap = 256;
  const std::size_t stride = std::max<std::size_t>(1, data.size() / cap);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < data.size(); i += stride) {
    xs.push_back(data[i].v);
    ys.push_back(data[i].a);
  }
  const Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  const Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));

  const MleResult mle = optimize_hyperparameters(x, y, hyper_init);

  // Batch conditioning of the basis prior on the full dataset (information form).
  RgpDimState s;
  s.hyper = mle.hyper;
  s.basis_v = basis;
  s.cov = kernel_matrix(basis, basis, s.hyper);
  s.K_basis_inv = spd_inverse(s.cov);

  const double noise_var = s.hyper.sigma_n * s.hyper.sigma_n;
  Eigen::MatrixXd lambda = s.K_basis_inv;
  Eigen::VectorXd info = Eigen::VectorXd::Zero(m);
  for (const auto& sample : data) {
    const Eigen::VectorXd k_vV = kernel_row(sample.v, basis, s.hyper);
    const Eigen::VectorXd J = s.K_basis_inv * k_vV;
    const double b = std::max(kernel(sample.v, sample.v, s.hyper) - J.dot(k_vV), 0.0);
    const double noise = b + noise_var;
    lambda.noalias() += (J * J.transpose()) / noise;
    info.noalias() += J * (sample.a / noise);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(lambda);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("batch_gp_fit: conditioning failed");
  }
  s.cov = llt.solve(Eigen::MatrixXd::Identity(m, m));
  s.cov = 0.5 * (s.cov + s.cov.transpose()).eval();
  s.mean = s.cov * info;

  return BatchGpFit{std::move(s), mle.converged, mle.lml};
}

RgpEnsemble batch_gp_fit_ensemble(const std::vector<DragObservation>& observations, int m,
                                  const KernelHyperparams& hyper_init, bool* all_converged) {
  RgpEnsemble ens;
  bool ok = true;
  for (int d = 0; d < 3; ++d) {
    std::vector<VaSample> data;
    data.reserve(observations.size());
    for (const auto& obs : observations) {
      data.push_back({obs.v_B(d), obs.a_tilde(d)});
    }
    BatchGpFit fit = batch_gp_fit(data, m, hyper_init);
    ok = ok && fit.converged;
    ens.dims[d] = std::move(fit.state);
  }
  if (all_converged != nullptr) {
    *all_converged = ok;
  }
  return ens;
}

}  // namespace quadmpc
