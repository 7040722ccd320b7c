#include <benchmark/benchmark.h>

#include <numbers>

#include "pilotloc/cerf.hpp"
#include "pilotloc/config.hpp"
#include "pilotloc/rng.hpp"

namespace {

using namespace pilotloc;

ScenarioSpec table_scenario(int antennas, int subframes) {
  ScenarioSpec s;
  s.geometry = make_array(antennas, 0.0016);
  DroneState d1, d2;
  d1.doa_rad = 20.0 * std::numbers::pi / 180.0;
  d2.doa_rad = 40.0 * std::numbers::pi / 180.0;
  d1.range_m = d2.range_m = 80.0;
  d1.doppler_hz = 2000.0;
  d2.doppler_hz = 4000.0;
  s.drones = {d1, d2};
  s.config.subframes = subframes;
  s.config.sampling_hz = 100000.0;
  s.config.modulation_order = 8;
  return s;
}

void BM_SteeringVector(benchmark::State& state) {
  const ArrayGeometry g = make_array(8, 0.0016);
  double theta = 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(steering_vector(g, theta));
    theta += 1e-6;
  }
}
BENCHMARK(BM_SteeringVector);

void BM_SynthSubframe(benchmark::State& state) {
  ScenarioSpec s = table_scenario(8, 5);
  RngStream rng(1);
  const std::vector<int> symbols{3, 5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(synth_received(s.geometry, s.drones, s.config, 1, 1, symbols, rng));
  }
}
BENCHMARK(BM_SynthSubframe);

void BM_MleEstimate(benchmark::State& state) {
  const int pilots = static_cast<int>(state.range(0));
  ScenarioSpec s = table_scenario(6, pilots);
  apply_snr(s, 0.0);
  SearchSpec spec;
  spec.num_drones = 2;
  spec.tx_powers = {s.drones[0].tx_power, s.drones[1].tx_power};
  spec.theta_bounds = {0.0, 1.1};
  spec.range_bounds = {20.0, 200.0};
  spec.doppler_bounds = {0.0, 6000.0};
  RngStream rng(7);
  std::vector<SignalBlock> blocks;
  for (int l = 1; l <= pilots; ++l)
    blocks.push_back(synth_received(s.geometry, s.drones, s.config, l, 0, {}, rng));
  const Eigen::VectorXcd y1 = stack_pilots(blocks);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mle_estimate(y1, s.geometry, s.config, spec));
  }
}
BENCHMARK(BM_MleEstimate)->Arg(5)->Arg(20)->Arg(50);

void BM_AverageSer(benchmark::State& state) {
  ScenarioSpec s = table_scenario(6, 5);
  apply_snr(s, 9.0);
  ErrorModel em;
  em.sigma_theta = 0.004;
  em.sigma_fd = 60.0;
  TaylorSpec taylor;
  taylor.order = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(average_ser_mpsk(s, em, taylor));
  }
}
BENCHMARK(BM_AverageSer)->Arg(2)->Arg(6)->Arg(10);

void BM_FaddeevaW(benchmark::State& state) {
  std::complex<double> z{1.7, 0.4};
  for (auto _ : state) {
    benchmark::DoNotOptimize(faddeeva_w(z));
    z += std::complex<double>(1e-9, 1e-9);
  }
}
BENCHMARK(BM_FaddeevaW);

}  // namespace

BENCHMARK_MAIN();
