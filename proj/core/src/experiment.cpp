#include "quadmpc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace quadmpc {

using nlohmann::json;

namespace {

std::string format_double(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

std::string cell_name(const std::string& traj, double v_max, const std::string& variant,
                      std::uint64_t seed) {
  std::ostringstream os;
  os << traj << "_" << format_double(v_max, "%g") << "_" << variant << "_" << seed;
  return os.str();
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  return v;
}

}  // namespace

RgpDimState make_rgp_dim_state(const Eigen::VectorXd& basis_v, const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& cov, const KernelHyperparams& hyper) {
  hyper.validate();
  if (basis_v.size() != mean.size() || cov.rows() != basis_v.size() ||
      cov.cols() != basis_v.size()) {
    throw std::invalid_argument("make_rgp_dim_state: inconsistent dimensions");
  }
  RgpDimState s;
  s.basis_v = basis_v;
  s.mean = mean;
  s.cov = cov;
  s.hyper = hyper;
  const Eigen::MatrixXd K = kernel_matrix(basis_v, basis_v, hyper);
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("make_rgp_dim_state: Gram matrix not positive definite");
  }
  s.K_basis_inv = llt.solve(Eigen::MatrixXd::Identity(basis_v.size(), basis_v.size()));
  return s;
}

SampledTrajectory build_trajectory(const ExperimentSpec& spec, double v_max, std::uint64_t seed) {
  if (spec.trajectory_kind == "circle") {
    return circle_trajectory(spec.circle, v_max, spec.f_s);
  }
  if (spec.trajectory_kind == "random") {
    const auto wps = random_waypoints(spec.random.hsize, spec.random.n_waypoints, seed);
    const PiecewisePoly poly = fit_polynomial(wps, v_max, spec.random.a_max);
    return sample_trajectory(poly, spec.f_s);
  }
  return load_trajectory_csv(spec.trajectory_file);
}

RgpEnsemble pretrain_gp_ensemble(const ExperimentSpec& spec, double v_max) {
  // Training run: nominal controller on a random trajectory, residuals only
  // collected, never fed back.
  constexpr std::uint64_t kTrainSeedOffset = 0x7261696e64617461ull;
  const std::uint64_t train_seed = spec.seeds.front() + kTrainSeedOffset;

  ExperimentSpec train_spec = spec;
  train_spec.trajectory_kind = "random";
  const SampledTrajectory traj = build_trajectory(train_spec, v_max, train_seed);

  SimConfig cfg = spec.sim;
  cfg.variant = ControllerVariant::Nominal;
  cfg.seed = train_seed;
  EpisodeLog log = run_episode(traj, cfg);
  if (log.failed) {
    throw std::runtime_error("pretrain_gp_ensemble: training episode failed: " +
                             log.failure_reason);
  }
  if (static_cast<int>(log.observations.size()) < cfg.rgp.m) {
    throw std::runtime_error("pretrain_gp_ensemble: too few residual observations");
  }
  bool converged = true;
  RgpEnsemble ens = batch_gp_fit_ensemble(log.observations, cfg.rgp.m, cfg.rgp.hyper, &converged);
  if (!converged) {
    std::fprintf(stderr,
                 "warning: gp hyperparameter optimization did not converge, using best found\n");
  }
  return ens;
}

void export_posterior(const RgpEnsemble& ens, const std::vector<DragObservation>& observations,
                      const std::string& path, int grid_n) {
  if (grid_n < 2) {
    throw std::invalid_argument("export_posterior: grid_n must be >= 2");
  }
  json root;
  root["grid_n"] = grid_n;
  json axes = json::array();
  const char* names[3] = {"x", "y", "z"};
  for (int d = 0; d < 3; ++d) {
    const RgpDimState& s = ens.dims[d];
    json axis;
    axis["name"] = names[d];
    axis["hyper"] = {
        {"sigma_f", s.hyper.sigma_f}, {"l", s.hyper.l}, {"sigma_n", s.hyper.sigma_n}};
    axis["basis_v"] = vector_to_json(s.basis_v);
    axis["mean"] = vector_to_json(s.mean);
    json cov = json::array();
    for (Eigen::Index i = 0; i < s.cov.rows(); ++i) {
      cov.push_back(vector_to_json(s.cov.row(i)));
    }
    axis["cov"] = cov;
    axis["std"] = vector_to_json(s.cov.diagonal().cwiseMax(0.0).cwiseSqrt());

    const double lo = s.basis_v.minCoeff();
    const double hi = s.basis_v.maxCoeff();
    Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(grid_n, lo, hi);
    Eigen::VectorXd grid_mean(grid_n), grid_two_std(grid_n);
    for (int i = 0; i < grid_n; ++i) {
      const RgpInference inf = rgp_infer(s, grid(i));
      grid_mean(i) = inf.mean;
      grid_two_std(i) = 2.0 * std::sqrt(inf.var);
    }
    axis["grid_v"] = vector_to_json(grid);
    axis["grid_mean"] = vector_to_json(grid_mean);
    axis["grid_two_std"] = vector_to_json(grid_two_std);

    json obs_v = json::array(), obs_a = json::array();
    for (const auto& o : observations) {
      obs_v.push_back(o.v_B(d));
      obs_a.push_back(o.a_tilde(d));
    }
    axis["obs_v"] = obs_v;
    axis["obs_a"] = obs_a;
    axes.push_back(axis);
  }
  root["axes"] = axes;
  json obs_t = json::array();
  for (const auto& o : observations) obs_t.push_back(o.t);
  root["obs_t"] = obs_t;

  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("export_posterior: cannot open " + path);
  }
  out << root.dump(2);
  if (!out) {
    throw std::runtime_error("export_posterior: write failed for " + path);
  }
}

PosteriorSnapshot load_posterior(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_posterior: cannot open " + path);
  }
  json root;
  in >> root;

  PosteriorSnapshot snap;
  snap.grid_n = root.value("grid_n", 201);
  const json& axes = root.at("axes");
  if (axes.size() != 3) {
    throw std::runtime_error("load_posterior: expected 3 axes");
  }
  std::array<std::vector<double>, 3> obs_v, obs_a;
  for (int d = 0; d < 3; ++d) {
    const json& axis = axes[d];
    KernelHyperparams hyper;
    hyper.sigma_f = axis.at("hyper").at("sigma_f").get<double>();
    hyper.l = axis.at("hyper").at("l").get<double>();
    hyper.sigma_n = axis.at("hyper").at("sigma_n").get<double>();
    const Eigen::VectorXd basis = vector_from_json(axis.at("basis_v"));
    const Eigen::VectorXd mean = vector_from_json(axis.at("mean"));
    Eigen::MatrixXd cov(basis.size(), basis.size());
    const json& cov_json = axis.at("cov");
    for (Eigen::Index i = 0; i < basis.size(); ++i) {
      cov.row(i) = vector_from_json(cov_json[static_cast<std::size_t>(i)]).transpose();
    }
    snap.ensemble.dims[d] = make_rgp_dim_state(basis, mean, cov, hyper);
    obs_v[d] = axis.at("obs_v").get<std::vector<double>>();
    obs_a[d] = axis.at("obs_a").get<std::vector<double>>();
  }
  const std::vector<double> obs_t = root.value("obs_t", std::vector<double>());
  const std::size_t n_obs = obs_v[0].size();
  for (std::size_t i = 0; i < n_obs; ++i) {
    DragObservation o;
    o.v_B = Vec3(obs_v[0][i], obs_v[1][i], obs_v[2][i]);
    o.a_tilde = Vec3(obs_a[0][i], obs_a[1][i], obs_a[2][i]);
    o.t = (i < obs_t.size()) ? obs_t[i] : 0.0;
    snap.observations.push_back(o);
  }
  return snap;
}

std::string render_aggregate_table(const std::vector<EpisodeResult>& episodes,
                                   const std::vector<std::string>& variant_order) {
  // Seed-averaged RMSE per (trajectory, v_max, variant).
  struct Acc {
    double sum{0.0};
    int count{0};
  };
  std::map<std::pair<std::string, double>, std::map<std::string, Acc>> rows;
  for (const auto& ep : episodes) {
    if (!ep.ok) continue;
    auto& acc = rows[{ep.trajectory_kind, ep.v_max}][ep.variant];
    acc.sum += ep.metrics.rmse_pos_mm;
    acc.count += 1;
  }

  std::ostringstream os;
  os << "trajectory,v_max";
  for (const auto& v : variant_order) {
    os << "," << v << "_rmse_mm," << v << "_pct";
  }
  os << "\n";
  for (const auto& [key, by_variant] : rows) {
    os << key.first << "," << format_double(key.second, "%g");
    double nominal = -1.0;
    if (auto it = by_variant.find("nominal"); it != by_variant.end() && it->second.count > 0) {
      nominal = it->second.sum / it->second.count;
    }
    for (const auto& v : variant_order) {
      auto it = by_variant.find(v);
      if (it == by_variant.end() || it->second.count == 0) {
        os << ",,";
        continue;
      }
      const double rmse = it->second.sum / it->second.count;
      os << "," << format_double(rmse, "%.3f") << ",";
      if (nominal > 0.0) {
        os << format_double(100.0 * rmse / nominal, "%.1f");
      }
    }
    os << "\n";
  }
  return os.str();
}

std::string render_covariance_summary(const std::vector<EpisodeResult>& episodes) {
  std::ostringstream os;
  os << "trajectory,v_max,variant,seed,v_peak,cov_x,cov_y,cov_z\n";
  std::vector<const EpisodeResult*> sorted;
  for (const auto& ep : episodes) {
    if (ep.ok) sorted.push_back(&ep);
  }
  std::sort(sorted.begin(), sorted.end(), [](const EpisodeResult* a, const EpisodeResult* b) {
    return std::tie(a->trajectory_kind, a->v_max, a->variant, a->seed) <
           std::tie(b->trajectory_kind, b->v_max, b->variant, b->seed);
  });
  for (const auto* ep : sorted) {
    os << ep->trajectory_kind << "," << format_double(ep->v_max, "%g") << "," << ep->variant
       << "," << ep->seed << "," << format_double(ep->metrics.v_peak, "%.6f");
    for (int d = 0; d < 3; ++d) {
      os << "," << format_double(ep->metrics.cov_v_e_abs(d), "%.9e");
    }
    os << "\n";
  }
  return os.str();
}

SuiteReport run_suite(const ExperimentSpec& spec) {
  spec.validate();
  namespace fs = std::filesystem;
  fs::create_directories(spec.output_dir);

  // gp pretraining happens up front and serially; cells only read the result.
  std::map<double, RgpEnsemble> pretrained;
  const bool wants_gp =
      std::find(spec.variants.begin(), spec.variants.end(), "gp") != spec.variants.end();
  if (wants_gp) {
    for (double v_max : spec.v_max_list) {
      pretrained.emplace(v_max, pretrain_gp_ensemble(spec, v_max));
    }
  }

  struct Cell {
    double v_max;
    std::string variant;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (double v_max : spec.v_max_list) {
    for (const auto& variant : spec.variants) {
      for (std::uint64_t seed : spec.seeds) {
        cells.push_back({v_max, variant, seed});
      }
    }
  }

  std::vector<EpisodeResult> results(cells.size());
  json index_episodes = json::array();
  std::mutex index_mutex;

  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) break;
      const Cell& cell = cells[i];
      EpisodeResult& res = results[i];
      res.trajectory_kind = spec.trajectory_kind;
      res.v_max = cell.v_max;
      res.variant = cell.variant;
      res.seed = cell.seed;
      res.name = cell_name(spec.trajectory_kind, cell.v_max, cell.variant, cell.seed);
      const std::string base = (fs::path(spec.output_dir) / res.name).string();
      json entry;
      entry["name"] = res.name;
      entry["trajectory"] = spec.trajectory_kind;
      entry["v_max"] = cell.v_max;
      entry["variant"] = cell.variant;
      entry["seed"] = cell.seed;
      entry["csv"] = res.name + ".csv";
      try {
        const SampledTrajectory traj = build_trajectory(spec, cell.v_max, cell.seed);
        SimConfig cfg = spec.sim;
        cfg.variant = variant_from_name(cell.variant);
        cfg.seed = cell.seed;

        const RgpEnsemble* pre = nullptr;
        if (cfg.variant == ControllerVariant::Gp) {
          pre = &pretrained.at(cell.v_max);
        }

        if (cfg.variant == ControllerVariant::Rgp) {
          const double basis_v_max =
              (cfg.rgp.v_max_basis > 0.0) ? cfg.rgp.v_max_basis : std::max(traj.v_max, 1.0);
          export_posterior(rgp_init(basis_v_max, cfg.rgp.m, cfg.rgp.hyper), {},
                           base + "_posterior_start.json");
          entry["posterior_start"] = res.name + "_posterior_start.json";
        }

        EpisodeLog log = run_episode(traj, cfg, pre);
        log.name = res.name;
        log.config_json = episode_header_json(cfg, spec.trajectory_kind, res.name);
        save_episode(log, base);

        if (log.has_ensemble && cfg.variant == ControllerVariant::Rgp) {
          export_posterior(log.final_ensemble, log.observations, base + "_posterior_end.json");
          entry["posterior_end"] = res.name + "_posterior_end.json";
        }

        if (log.failed) {
          res.ok = false;
          res.error = log.failure_reason;
        } else {
          res.metrics = compute_metrics(log);
          res.ok = true;
        }
      } catch (const std::exception& e) {
        res.ok = false;
        res.error = e.what();
      }
      entry["ok"] = res.ok;
      if (!res.ok) entry["error"] = res.error;
      if (res.ok) {
        entry["rmse_pos_mm"] = res.metrics.rmse_pos_mm;
        entry["v_peak"] = res.metrics.v_peak;
        entry["mean_solve_ms"] = res.metrics.mean_solve_ms;
        entry["rejected"] = res.metrics.rejected;
      }
      {
        std::lock_guard<std::mutex> lock(index_mutex);
        index_episodes.push_back(entry);
      }
    }
  };

  const int n_workers = std::max(1, std::min<int>(spec.workers, static_cast<int>(cells.size())));
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) threads.emplace_back(worker);
  for (auto& th : threads) th.join();

  SuiteReport report;
  report.episodes = results;
  report.all_ok = std::all_of(results.begin(), results.end(),
                              [](const EpisodeResult& r) { return r.ok; });
  report.aggregate_table = render_aggregate_table(results, spec.variants);
  report.covariance_summary = render_covariance_summary(results);

  {
    std::ofstream out(fs::path(spec.output_dir) / "aggregate_table.csv");
    out << report.aggregate_table;
  }
  {
    std::ofstream out(fs::path(spec.output_dir) / "covariance_summary.csv");
    out << report.covariance_summary;
  }

  // Deterministic index ordering regardless of worker scheduling.
  std::sort(index_episodes.begin(), index_episodes.end(),
            [](const json& a, const json& b) { return a["name"] < b["name"]; });
  json index;
  index["version"] = kVersion;
  index["spec"] = json::parse(experiment_spec_to_json(spec));
  index["episodes"] = index_episodes;
  index["artifacts"] = {{"aggregate_table", "aggregate_table.csv"},
                        {"covariance_summary", "covariance_summary.csv"}};
  report.index_path = (fs::path(spec.output_dir) / "index.json").string();
  {
    std::ofstream out(report.index_path);
    out << index.dump(2);
  }
  return report;
}

RecomputedReport recompute_report(const std::string& index_path) {
  std::ifstream in(index_path);
  if (!in) {
    throw std::runtime_error("recompute_report: cannot open " + index_path);
  }
  json index;
  in >> index;
  const std::filesystem::path dir = std::filesystem::path(index_path).parent_path();

  std::vector<EpisodeResult> episodes;
  std::vector<std::string> variant_order;
  if (index.contains("spec") && index["spec"].contains("experiment")) {
    variant_order =
        index["spec"]["experiment"]["variants"].get<std::vector<std::string>>();
  }
  for (const auto& entry : index.at("episodes")) {
    EpisodeResult res;
    res.name = entry.at("name").get<std::string>();
    res.trajectory_kind = entry.at("trajectory").get<std::string>();
    res.v_max = entry.at("v_max").get<double>();
    res.variant = entry.at("variant").get<std::string>();
    res.seed = entry.at("seed").get<std::uint64_t>();
    res.ok = entry.at("ok").get<bool>();
    if (res.ok) {
      const EpisodeLog log = load_episode_csv((dir / entry.at("csv").get<std::string>()).string());
      res.metrics = compute_metrics(log);
    }
    episodes.push_back(res);
  }
  RecomputedReport out;
  out.aggregate_table = render_aggregate_table(episodes, variant_order);
  out.covariance_summary = render_covariance_summary(episodes);
  return out;
}

}  // namespace quadmpc
