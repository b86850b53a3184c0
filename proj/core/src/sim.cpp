#include "quadmpc/sim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "quadmpc/augmented.hpp"
#include "quadmpc/dynamics.hpp"

namespace quadmpc {

ControllerVariant variant_from_name(const std::string& name) {
  if (name == "nominal") return ControllerVariant::Nominal;
  if (name == "gp") return ControllerVariant::Gp;
  if (name == "rgp") return ControllerVariant::Rgp;
  throw std::invalid_argument("unknown controller variant: " + name);
}

std::string variant_name(ControllerVariant v) {
  switch (v) {
    case ControllerVariant::Nominal: return "nominal";
    case ControllerVariant::Gp: return "gp";
    case ControllerVariant::Rgp: return "rgp";
  }
  throw std::invalid_argument("unknown variant enum value");
}

void SimConfig::validate() const {
  if (!(delta_t_sim > 0.0) || !(control_dt > 0.0)) {
    throw std::invalid_argument("SimConfig: time steps must be positive");
  }
  const double ratio = control_dt / delta_t_sim;
  if (std::abs(ratio - std::lround(ratio)) > 1e-9) {
    throw std::invalid_argument("SimConfig: control_dt must be an integer multiple of delta_t_sim");
  }
  quad.validate();
  ocp.validate();
  residual.validate();
  drag.validate();
  rgp.hyper.validate();
  if (rgp.m < 2) {
    throw std::invalid_argument("SimConfig: rgp.m must be at least 2");
  }
}

QuadState plant_step(const QuadState& x, const ControlInput& u, const SimConfig& cfg) {
  const auto deriv = [&cfg](const StateVec& xs, const ControlInput& uu) {
    StateVec dx = f_phys(xs, uu, cfg.quad);
    if (cfg.drag_profile != DragProfile::None) {
      const QuadState s = QuadState::unpack(xs);
      const Quaternion q = s.q_WB.normalized();
      QuadState sn = s;
      sn.q_WB = q;
      const Vec3 a_B = plant_drag_accel(sn, uu, cfg.drag_profile, cfg.drag, cfg.quad.mass);
      dx.segment<3>(7) += q * a_B;
    }
    return dx;
  };
  return rk4_step(deriv, x, u, cfg.delta_t_sim);
}

ReferenceWindow reference_window(const SampledTrajectory& traj, double t, const OcpConfig& cfg) {
  ReferenceWindow w;
  w.x_ref.resize(cfg.n_h + 1);
  w.u_ref.resize(cfg.n_h);
  const double T = cfg.interval();
  const std::size_t last = traj.size() - 1;
  for (int i = 0; i <= cfg.n_h; ++i) {
    const double ti = t + static_cast<double>(i) * T;
    std::size_t idx = static_cast<std::size_t>(std::lround(ti * traj.f_s));
    if (idx > last) idx = last;
    w.x_ref[i] = traj.x_ref[idx];
    if (i < cfg.n_h) {
      w.u_ref[i] = traj.u_ref[idx];
    }
  }
  return w;
}

std::uint64_t rgp_param_hash(const RgpParamVector& params) {
  std::uint64_t h = 1469598103934665603ull;
  const auto mix = [&h](const Eigen::VectorXd& v) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(v.data());
    const std::size_t nbytes = static_cast<std::size_t>(v.size()) * sizeof(double);
    for (std::size_t i = 0; i < nbytes; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& axis : params.axes) {
    mix(axis.mean);
  }
  return h;
}

namespace {

// Portable standard normal from explicit 53-bit uniforms (Box-Muller).
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : rng_(seed) {}
  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

 private:
  double uniform01() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  std::mt19937_64 rng_;
  bool have_spare_{false};
  double spare_{0.0};
};

}  // namespace

EpisodeLog run_episode(const SampledTrajectory& traj, const SimConfig& cfg,
                       const RgpEnsemble* pretrained) {
  cfg.validate();
  traj.validate();

  EpisodeLog log;
  log.variant = variant_name(cfg.variant);
  log.seed = cfg.seed;

  if (cfg.variant == ControllerVariant::Gp && pretrained == nullptr) {
    throw std::invalid_argument("run_episode: gp variant requires a pretrained ensemble");
  }

  const int steps_per_control = cfg.substeps_per_control();
  const std::size_t n_steps = traj.size() - 1;

  const double basis_v_max =
      (cfg.rgp.v_max_basis > 0.0) ? cfg.rgp.v_max_basis : std::max(traj.v_max, 1.0);

  RgpEnsemble ensemble = (cfg.variant == ControllerVariant::Gp)
                             ? *pretrained
                             : rgp_init(basis_v_max, cfg.rgp.m, cfg.rgp.hyper);

  SqpRtiController controller(cfg.ocp, cfg.quad,
                              cfg.variant == ControllerVariant::Nominal ? -1 : cfg.rgp.m);
  RgpParamVector params = RgpParamVector::zero();
  if (cfg.variant == ControllerVariant::Gp) {
    params = RgpParamVector::from_ensemble(ensemble);
    controller.update_rgp_params(params);
  }

  NormalSampler noise(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  const bool with_noise = cfg.meas_noise_pos > 0.0 || cfg.meas_noise_vel > 0.0;

  QuadState x_plant = traj.x_ref.front();
  log.steps.reserve(n_steps);

  try {
    for (std::size_t k = 0; k < n_steps; ++k) {
      const double t = traj.t[k];

      QuadState x_meas = x_plant;
      if (with_noise) {
        for (int i = 0; i < 3; ++i) x_meas.p_W(i) += cfg.meas_noise_pos * noise();
        for (int i = 0; i < 3; ++i) x_meas.v_W(i) += cfg.meas_noise_vel * noise();
      }

      const ReferenceWindow window = reference_window(traj, t, cfg.ocp);
      const OcpSolution& sol = controller.solve(x_meas, window);
      const ControlInput u_apply = ControlInput(sol.u_traj.front()).clamped();

      // Plant truth and the physics-only one-step prediction share the same
      // integration grid, so the residual isolates the drag.
      QuadState x_pred = x_meas;
      for (int s = 0; s < steps_per_control; ++s) {
        x_plant = plant_step(x_plant, u_apply, cfg);
        x_pred = rk4_step(
            [&cfg](const StateVec& xs, const ControlInput& uu) {
              return f_phys(xs, uu, cfg.quad);
            },
            x_pred, u_apply, cfg.delta_t_sim);
      }

      EpisodeStep row;
      row.t = t;
      row.x_ref = traj.x_ref[k].pack();
      row.x_meas = x_meas.pack();
      row.u = u_apply.u;
      row.solve_time_ms = sol.solve_time_ms;
      row.kkt_residual = sol.kkt_residual;
      row.qp_fallback = sol.qp_fallback;

      if (cfg.variant == ControllerVariant::Rgp) {
        const Vec3 v_meas_B = x_plant.q_WB.conjugate() * x_plant.v_W;
        const Vec3 v_pred_B = x_pred.q_WB.conjugate() * x_pred.v_W;
        const ResidualOutcome res =
            estimate_drag_observation(v_meas_B, v_pred_B, cfg.control_dt, t, cfg.residual);
        if (res.observation.has_value()) {
          const DragObservation& obs = *res.observation;
          log.observations.push_back(obs);
          for (int d = 0; d < 3; ++d) {
            ensemble.dims[d] = rgp_update(ensemble.dims[d], obs.v_B(d), obs.a_tilde(d));
          }
          params = RgpParamVector::from_ensemble(ensemble);
          controller.update_rgp_params(std::move(params));
          row.a_tilde = obs.a_tilde;
          row.reject_flag = 0;
        } else {
          row.reject_flag = (res.reject == ResidualReject::DtTooSmall) ? 1 : 2;
          ++log.rejected_count;
        }
      } else {
        row.reject_flag = 3;
        // The residual stream is still recorded for training data collection
        // and posterior export, it just never feeds back into the controller.
        const Vec3 v_meas_B = x_plant.q_WB.conjugate() * x_plant.v_W;
        const Vec3 v_pred_B = x_pred.q_WB.conjugate() * x_pred.v_W;
        const ResidualOutcome res =
            estimate_drag_observation(v_meas_B, v_pred_B, cfg.control_dt, t, cfg.residual);
        if (res.observation.has_value()) {
          log.observations.push_back(*res.observation);
        }
      }

      row.mu_hash = rgp_param_hash(controller.rgp_params());
      log.steps.push_back(row);
    }
  } catch (const std::exception& e) {
    log.failed = true;
    log.failure_reason = e.what();
  }

  log.final_ensemble = ensemble;
  log.has_ensemble = (cfg.variant != ControllerVariant::Nominal);
  return log;
}

EpisodeMetrics compute_metrics(const EpisodeLog& log) {
  if (log.steps.empty()) {
    throw std::invalid_argument("compute_metrics: empty episode log");
  }
  EpisodeMetrics m;
  m.steps = log.steps.size();
  const double n = static_cast<double>(log.steps.size());

  double sq_sum = 0.0;
  Vec3 sq_axis = Vec3::Zero();
  Vec3 e_mean = Vec3::Zero(), v_mean = Vec3::Zero();
  for (const auto& s : log.steps) {
    const Vec3 e = s.x_meas.segment<3>(0) - s.x_ref.segment<3>(0);
    const Vec3 v = s.x_meas.segment<3>(7);
    sq_sum += e.squaredNorm();
    sq_axis += e.cwiseProduct(e);
    e_mean += e;
    v_mean += v;
    m.v_peak = std::max(m.v_peak, v.norm());
    m.mean_solve_ms += s.solve_time_ms;
    m.max_solve_ms = std::max(m.max_solve_ms, s.solve_time_ms);
    m.mean_kkt += s.kkt_residual;
    if (s.reject_flag == 1 || s.reject_flag == 2) ++m.rejected;
  }
  e_mean /= n;
  v_mean /= n;
  m.rmse_pos_mm = std::sqrt(sq_sum / n) * 1000.0;
  m.rmse_pos_mm_axis = (sq_axis / n).cwiseSqrt() * 1000.0;
  m.mean_solve_ms /= n;
  m.mean_kkt /= n;

  Vec3 cov = Vec3::Zero();
  for (const auto& s : log.steps) {
    const Vec3 e = s.x_meas.segment<3>(0) - s.x_ref.segment<3>(0);
    const Vec3 v = s.x_meas.segment<3>(7);
    cov += (v - v_mean).cwiseProduct(e - e_mean);
  }
  m.cov_v_e_abs = (cov / n).cwiseAbs();
  return m;
}

namespace {

void put_num(std::ofstream& out, double v, char sep) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf << sep;
}

}  // namespace

void save_episode(const EpisodeLog& log, const std::string& base_path) {
  {
    std::ofstream out(base_path + ".csv");
    if (!out) throw std::runtime_error("save_episode: cannot open " + base_path + ".csv");
    out << "t";
    const char* ref_cols[] = {"px", "py", "pz", "qw", "qx", "qy", "qz",
                              "vx", "vy", "vz", "wx", "wy", "wz"};
    for (const char* c : ref_cols) out << ",ref_" << c;
    for (const char* c : ref_cols) out << ",meas_" << c;
    out << ",u1,u2,u3,u4,at_x,at_y,at_z,mu_hash,kkt,reject,qp_fallback\n";
    for (const auto& s : log.steps) {
      put_num(out, s.t, ',');
      for (int i = 0; i < 13; ++i) put_num(out, s.x_ref(i), ',');
      for (int i = 0; i < 13; ++i) put_num(out, s.x_meas(i), ',');
      for (int i = 0; i < 4; ++i) put_num(out, s.u(i), ',');
      for (int i = 0; i < 3; ++i) put_num(out, s.a_tilde(i), ',');
      char hash_buf[32];
      std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                    static_cast<unsigned long long>(s.mu_hash));
      out << hash_buf << ',';
      put_num(out, s.kkt_residual, ',');
      out << s.reject_flag << ',' << (s.qp_fallback ? 1 : 0) << '\n';
    }
    if (!out) throw std::runtime_error("save_episode: write failed");
  }
  {
    std::ofstream out(base_path + ".timing.csv");
    if (!out) throw std::runtime_error("save_episode: cannot open timing csv");
    out << "t,solve_time_ms\n";
    for (const auto& s : log.steps) {
      put_num(out, s.t, ',');
      put_num(out, s.solve_time_ms, '\n');
    }
  }
  {
    std::ofstream out(base_path + ".json");
    if (!out) throw std::runtime_error("save_episode: cannot open header json");
    out << log.config_json;
  }
}

EpisodeLog load_episode_csv(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("load_episode_csv: cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_episode_csv: empty file");

  EpisodeLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 38) throw std::runtime_error("load_episode_csv: bad row");
    EpisodeStep s;
    s.t = std::stod(cells[0]);
    for (int i = 0; i < 13; ++i) s.x_ref(i) = std::stod(cells[1 + i]);
    for (int i = 0; i < 13; ++i) s.x_meas(i) = std::stod(cells[14 + i]);
    for (int i = 0; i < 4; ++i) s.u(i) = std::stod(cells[27 + i]);
    for (int i = 0; i < 3; ++i) s.a_tilde(i) = std::stod(cells[31 + i]);
    s.mu_hash = std::stoull(cells[34], nullptr, 16);
    s.kkt_residual = std::stod(cells[35]);
    s.reject_flag = std::stoi(cells[36]);
    s.qp_fallback = (cells[37] != "0");
    if (s.reject_flag == 1 || s.reject_flag == 2) ++log.rejected_count;
    log.steps.push_back(s);
  }
  return log;
}

}  // namespace quadmpc
