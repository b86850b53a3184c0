#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "quadmpc/augmented.hpp"
#include "quadmpc/dynamics.hpp"
#include "quadmpc/ocp.hpp"
#include "quadmpc/rgp.hpp"
#include "quadmpc/sim.hpp"
#include "quadmpc/trajectory.hpp"

namespace {

using namespace quadmpc;

RgpEnsemble trained_ensemble(double v_max, int m) {
  RgpEnsemble ens = rgp_init(v_max, m, KernelHyperparams{});
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const double v = v_max * (2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0);
    for (int d = 0; d < 3; ++d) {
      ens.dims[d] = rgp_update(ens.dims[d], v, -0.01 * v * std::abs(v));
    }
  }
  return ens;
}

void BM_FPhys(benchmark::State& state) {
  const QuadParams qp;
  QuadState x;
  x.v_W = Vec3(1.0, -2.0, 0.5);
  x.omega_B = Vec3(0.1, 0.2, -0.1);
  const ControlInput u(Vec4::Constant(qp.hover_input()));
  for (auto _ : state) {
    benchmark::DoNotOptimize(f_phys(x, u, qp));
  }
}
BENCHMARK(BM_FPhys);

void BM_RgpUpdate(benchmark::State& state) {
  RgpDimState s = rgp_dim_init(6.0, static_cast<int>(state.range(0)), KernelHyperparams{});
  double v = 0.0;
  for (auto _ : state) {
    s = rgp_update(s, v, -0.01 * v * std::abs(v));
    v += 0.01;
    if (v > 6.0) v = -6.0;
  }
}
BENCHMARK(BM_RgpUpdate)->Arg(20);

void BM_RgpInfer(benchmark::State& state) {
  const RgpDimState s = rgp_dim_init(6.0, 20, KernelHyperparams{});
  double v = -6.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rgp_infer(s, v));
    v += 0.01;
    if (v > 6.0) v = -6.0;
  }
}
BENCHMARK(BM_RgpInfer);

void BM_SqpRtiStep(benchmark::State& state) {
  const QuadParams qp;
  OcpConfig cfg;
  const SampledTrajectory traj = circle_trajectory(10.0, 6.0, 100.0, 10.0);
  const RgpParamVector params = RgpParamVector::from_ensemble(trained_ensemble(6.0, 20));
  QuadState x0 = traj.x_ref.front();
  OcpSolution warm = hover_warm_start(cfg, x0, qp);
  const ReferenceWindow window = reference_window(traj, 5.0, cfg);
  for (auto _ : state) {
    warm = sqp_rti_step(cfg, x0, window, warm, qp, params);
    benchmark::DoNotOptimize(warm);
  }
}
BENCHMARK(BM_SqpRtiStep)->Unit(benchmark::kMillisecond);

// Parameter re-injection vs rebuilding the whole controller.
void BM_UpdateRgpParams(benchmark::State& state) {
  const QuadParams qp;
  SqpRtiController controller(OcpConfig{}, qp, 20);
  const RgpParamVector params = RgpParamVector::from_ensemble(trained_ensemble(6.0, 20));
  for (auto _ : state) {
    controller.update_rgp_params(params);
    benchmark::DoNotOptimize(controller);
  }
}
BENCHMARK(BM_UpdateRgpParams);

void BM_ControllerConstruction(benchmark::State& state) {
  const QuadParams qp;
  for (auto _ : state) {
    SqpRtiController controller(OcpConfig{}, qp, 20);
    benchmark::DoNotOptimize(controller);
  }
}
BENCHMARK(BM_ControllerConstruction);

}  // namespace

BENCHMARK_MAIN();
