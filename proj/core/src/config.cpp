#include "quadmpc/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace quadmpc {

using nlohmann::json;

namespace {

Vec3 vec3_from(const json& j, const Vec3& fallback) {
  if (!j.is_array() || j.size() != 3) return fallback;
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

void parse_sim_config(const json& root, SimConfig& cfg) {
  if (root.contains("quad")) {
    const json& q = root["quad"];
    cfg.quad.mass = q.value("mass", cfg.quad.mass);
    const Vec3 jd = vec3_from(q.value("inertia_diag", json()), cfg.quad.inertia.diagonal());
    cfg.quad.inertia = jd.asDiagonal();
    cfg.quad.d_x = q.value("d_x", cfg.quad.d_x);
    cfg.quad.d_y = q.value("d_y", cfg.quad.d_y);
    cfg.quad.c_tau = q.value("c_tau", cfg.quad.c_tau);
    cfg.quad.thrust_max = q.value("thrust_max", cfg.quad.thrust_max);
  }
  if (root.contains("drag")) {
    const json& d = root["drag"];
    cfg.drag_profile = drag_profile_from_name(d.value("profile", drag_profile_name(cfg.drag_profile)));
    cfg.drag.c_d = d.value("c_d", cfg.drag.c_d);
    cfg.drag.rho = d.value("rho", cfg.drag.rho);
    cfg.drag.area = vec3_from(d.value("area", json()), cfg.drag.area);
    cfg.drag.c_rd = d.value("c_rd", cfg.drag.c_rd);
    cfg.drag.omega_rotor_max = d.value("omega_rotor_max", cfg.drag.omega_rotor_max);
  }
  if (root.contains("mpc")) {
    const json& m = root["mpc"];
    cfg.ocp.t_h = m.value("t_h", cfg.ocp.t_h);
    cfg.ocp.n_h = m.value("n_h", cfg.ocp.n_h);
    const double q_pos = m.value("q_pos", cfg.ocp.q_weights(0));
    const double q_att = m.value("q_att", cfg.ocp.q_weights(3));
    const double q_vel = m.value("q_vel", cfg.ocp.q_weights(6));
    const double q_rate = m.value("q_rate", cfg.ocp.q_weights(9));
    cfg.ocp.q_weights << q_pos, q_pos, q_pos, q_att, q_att, q_att, q_vel, q_vel, q_vel, q_rate,
        q_rate, q_rate;
    cfg.ocp.r_weights = Vec4::Constant(m.value("r_input", cfg.ocp.r_weights(0)));
    cfg.ocp.integrator_substeps = m.value("integrator_substeps", cfg.ocp.integrator_substeps);
    cfg.ocp.fd_step = m.value("fd_step", cfg.ocp.fd_step);
  }
  if (root.contains("rgp")) {
    const json& r = root["rgp"];
    cfg.rgp.m = r.value("m", cfg.rgp.m);
    cfg.rgp.hyper.sigma_f = r.value("sigma_f", cfg.rgp.hyper.sigma_f);
    cfg.rgp.hyper.l = r.value("l", cfg.rgp.hyper.l);
    cfg.rgp.hyper.sigma_n = r.value("sigma_n", cfg.rgp.hyper.sigma_n);
    cfg.rgp.v_max_basis = r.value("v_max_basis", cfg.rgp.v_max_basis);
  }
  if (root.contains("residual")) {
    const json& r = root["residual"];
    cfg.residual.dt_min = r.value("dt_min", cfg.residual.dt_min);
    cfg.residual.outlier_cap = r.value("outlier_cap", cfg.residual.outlier_cap);
  }
  if (root.contains("sim")) {
    const json& s = root["sim"];
    cfg.delta_t_sim = s.value("delta_t_sim", cfg.delta_t_sim);
    cfg.control_dt = s.value("control_dt", cfg.control_dt);
    cfg.meas_noise_pos = s.value("meas_noise_pos", cfg.meas_noise_pos);
    cfg.meas_noise_vel = s.value("meas_noise_vel", cfg.meas_noise_vel);
  }
}

json sim_config_to_json(const SimConfig& cfg) {
  json root;
  root["quad"] = {
      {"mass", cfg.quad.mass},
      {"inertia_diag", {cfg.quad.inertia(0, 0), cfg.quad.inertia(1, 1), cfg.quad.inertia(2, 2)}},
      {"d_x", cfg.quad.d_x},
      {"d_y", cfg.quad.d_y},
      {"c_tau", cfg.quad.c_tau},
      {"thrust_max", cfg.quad.thrust_max},
  };
  root["drag"] = {
      {"profile", drag_profile_name(cfg.drag_profile)},
      {"c_d", cfg.drag.c_d},
      {"rho", cfg.drag.rho},
      {"area", {cfg.drag.area(0), cfg.drag.area(1), cfg.drag.area(2)}},
      {"c_rd", cfg.drag.c_rd},
      {"omega_rotor_max", cfg.drag.omega_rotor_max},
  };
  root["mpc"] = {
      {"t_h", cfg.ocp.t_h},
      {"n_h", cfg.ocp.n_h},
      {"q_pos", cfg.ocp.q_weights(0)},
      {"q_att", cfg.ocp.q_weights(3)},
      {"q_vel", cfg.ocp.q_weights(6)},
      {"q_rate", cfg.ocp.q_weights(9)},
      {"r_input", cfg.ocp.r_weights(0)},
      {"integrator_substeps", cfg.ocp.integrator_substeps},
      {"fd_step", cfg.ocp.fd_step},
  };
  root["rgp"] = {
      {"m", cfg.rgp.m},
      {"sigma_f", cfg.rgp.hyper.sigma_f},
      {"l", cfg.rgp.hyper.l},
      {"sigma_n", cfg.rgp.hyper.sigma_n},
      {"v_max_basis", cfg.rgp.v_max_basis},
  };
  root["residual"] = {
      {"dt_min", cfg.residual.dt_min},
      {"outlier_cap", cfg.residual.outlier_cap},
  };
  root["sim"] = {
      {"delta_t_sim", cfg.delta_t_sim},
      {"control_dt", cfg.control_dt},
      {"meas_noise_pos", cfg.meas_noise_pos},
      {"meas_noise_vel", cfg.meas_noise_vel},
      {"variant", variant_name(cfg.variant)},
      {"seed", cfg.seed},
  };
  return root;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (trajectory_kind != "circle" && trajectory_kind != "random" && trajectory_kind != "file") {
    throw std::invalid_argument("ExperimentSpec: trajectory kind must be circle|random|file");
  }
  if (trajectory_kind == "file" && trajectory_file.empty()) {
    throw std::invalid_argument("ExperimentSpec: trajectory file path missing");
  }
  if (v_max_list.empty() || variants.empty() || seeds.empty()) {
    throw std::invalid_argument("ExperimentSpec: empty experiment grid");
  }
  for (const auto& v : variants) {
    variant_from_name(v);
  }
  if (workers < 1) {
    throw std::invalid_argument("ExperimentSpec: workers must be >= 1");
  }
  sim.validate();
}

ExperimentSpec experiment_spec_from_json(const std::string& text) {
  const json root = json::parse(text);
  ExperimentSpec spec;
  parse_sim_config(root, spec.sim);
  if (root.contains("experiment")) {
    const json& e = root["experiment"];
    spec.trajectory_kind = e.value("trajectory", spec.trajectory_kind);
    spec.trajectory_file = e.value("trajectory_file", spec.trajectory_file);
    if (e.contains("v_max")) {
      spec.v_max_list = e["v_max"].get<std::vector<double>>();
    }
    if (e.contains("variants")) {
      spec.variants = e["variants"].get<std::vector<std::string>>();
    }
    if (e.contains("seeds")) {
      spec.seeds = e["seeds"].get<std::vector<std::uint64_t>>();
    }
    spec.output_dir = e.value("output_dir", spec.output_dir);
    spec.workers = e.value("workers", spec.workers);
    spec.f_s = e.value("f_s", spec.f_s);
    if (e.contains("circle")) {
      const json& c = e["circle"];
      spec.circle.radius = c.value("radius", spec.circle.radius);
      spec.circle.altitude = c.value("altitude", spec.circle.altitude);
      spec.circle.ramp_accel = c.value("ramp_accel", spec.circle.ramp_accel);
      spec.circle.hold_laps = c.value("hold_laps", spec.circle.hold_laps);
    }
    if (e.contains("random")) {
      const json& r = e["random"];
      spec.random.hsize = r.value("hsize", spec.random.hsize);
      spec.random.n_waypoints = r.value("n_waypoints", spec.random.n_waypoints);
      spec.random.a_max = r.value("a_max", spec.random.a_max);
    }
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_experiment_spec: cannot open " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return experiment_spec_from_json(ss.str());
}

std::string experiment_spec_to_json(const ExperimentSpec& spec) {
  json root = sim_config_to_json(spec.sim);
  root["experiment"] = {
      {"trajectory", spec.trajectory_kind},
      {"trajectory_file", spec.trajectory_file},
      {"v_max", spec.v_max_list},
      {"variants", spec.variants},
      {"seeds", spec.seeds},
      {"output_dir", spec.output_dir},
      {"workers", spec.workers},
      {"f_s", spec.f_s},
      {"circle",
       {{"radius", spec.circle.radius},
        {"altitude", spec.circle.altitude},
        {"ramp_accel", spec.circle.ramp_accel},
        {"hold_laps", spec.circle.hold_laps}}},
      {"random",
       {{"hsize", spec.random.hsize},
        {"n_waypoints", spec.random.n_waypoints},
        {"a_max", spec.random.a_max}}},
  };
  return root.dump(2);
}

std::string episode_header_json(const SimConfig& cfg, const std::string& traj_desc,
                                const std::string& name) {
  json root = sim_config_to_json(cfg);
  root["episode"] = {
      {"name", name},
      {"trajectory", traj_desc},
      {"version", kVersion},
  };
  return root.dump(2);
}

}  // namespace quadmpc
