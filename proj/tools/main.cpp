#include <CLI11.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "pilotloc/crlb.hpp"
#include "pilotloc/harness.hpp"
#include "pilotloc/rng.hpp"

namespace {

using namespace pilotloc;

struct Options {
  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
  std::string format = "csv";
};

ExperimentConfig load(const Options& opt) {
  if (opt.config_path.empty()) throw CLI::ValidationError("--config is required");
  if (opt.format != "csv") throw CLI::ValidationError("--format only supports csv");
  ExperimentConfig cfg = load_config(opt.config_path);
  if (opt.seed_set) cfg.seed = opt.seed;
  if (!opt.out.empty()) cfg.out = opt.out;
  return cfg;
}

// Writes through to cfg.out when set, stdout otherwise.
int emit(const ExperimentConfig& cfg, const std::string& text) {
  if (cfg.out.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) {
    std::cerr << "cannot open output path: " << cfg.out << "\n";
    return 1;
  }
  f << text;
  std::cout << "wrote " << cfg.out << "\n";
  return 0;
}

int cmd_simulate(const Options& opt) {
  ExperimentConfig cfg = load(opt);
  std::vector<ResultRow> rows{run_point(cfg, cfg.sweep.values.front(), split_seed(cfg.seed, 0),
                                        opt.threads)};
  std::ostringstream os;
  write_sweep_csv(os, cfg, rows);
  return emit(cfg, os.str());
}

int cmd_sweep(const Options& opt) {
  ExperimentConfig cfg = load(opt);
  const std::vector<ResultRow> rows = run_sweep(cfg, opt.threads);
  std::ostringstream os;
  write_sweep_csv(os, cfg, rows);
  return emit(cfg, os.str());
}

int cmd_trajectory(const Options& opt) {
  ExperimentConfig cfg = load(opt);
  const std::vector<TrajectoryRow> rows = run_trajectory(cfg, opt.threads);
  std::ostringstream os;
  write_trajectory_csv(os, cfg, rows);
  return emit(cfg, os.str());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

// Square-root CRLB per pilot count 1..subframes at the first sweep point.
int cmd_crlb(const Options& opt) {
  ExperimentConfig cfg = load(opt);
  const ResolvedPoint pt = resolve_point(cfg, cfg.sweep.values.front());
  const ScenarioSpec& sc = pt.scenario;
  const ParameterVector truth = parameters_of(sc.drones);
  std::vector<double> powers;
  for (const auto& d : sc.drones) powers.push_back(d.tx_power);
  const int num_drones = static_cast<int>(sc.drones.size());

  std::ostringstream os;
  os << "pilots (count)";
  for (int k = 1; k <= num_drones; ++k)
    os << ",sqrt_crlb_theta_" << k << " (deg)"
       << ",sqrt_crlb_range_" << k << " (m)"
       << ",sqrt_crlb_doppler_" << k << " (Hz)";
  os << "\n";
  for (int l = 1; l <= sc.config.subframes; ++l) {
    const Eigen::VectorXd b = crlb_bounds(
        fisher_information(truth, powers, sc.geometry, sc.config, l, sc.config.noise_variance));
    os << l;
    for (int k = 0; k < num_drones; ++k)
      os << ',' << fmt(std::sqrt(b(k)) * kRadToDeg) << ',' << fmt(std::sqrt(b(num_drones + k)))
         << ',' << fmt(std::sqrt(b(2 * num_drones + k)));
    os << "\n";
  }
  return emit(cfg, os.str());
}

// Closed-form SER exactly as the sweep's analytic column prices it: each
// decoded subframe's Doppler geometry scaled in, CRLB-sourced error sigmas.
int cmd_ser_analytic(const Options& opt) {
  ExperimentConfig cfg = load(opt);
  const ResolvedPoint pt = resolve_point(cfg, cfg.sweep.values.front());
  const ScenarioSpec& sc = pt.scenario;
  const int num_drones = static_cast<int>(sc.drones.size());
  const ParameterVector truth = parameters_of(sc.drones);
  std::vector<double> powers;
  for (const auto& d : sc.drones) powers.push_back(d.tx_power);

  std::vector<int> slots;
  if (pt.decode_subframe == 0) {
    for (int l = 1; l <= sc.config.subframes; ++l) slots.push_back(l);
  } else {
    slots.push_back(pt.decode_subframe);
  }

  double value = 0.0;
  std::uint64_t terms = 0;
  for (const int l : slots) {
    const int sigma_pilots =
        cfg.decode_estimate == DecodeEstimate::kRunning ? l : sc.config.subframes;
    const Eigen::VectorXd b = crlb_bounds(fisher_information(
        truth, powers, sc.geometry, sc.config, sigma_pilots, sc.config.noise_variance));
    ScenarioSpec sub = sc;
    for (auto& d : sub.drones)
      d.doppler_hz = std::remainder(d.doppler_hz * l, sc.config.sampling_hz);
    for (int k = 0; k < num_drones; ++k) {
      sub.target = k;
      ErrorModel em;
      em.sigma_theta = std::sqrt(b(k));
      em.sigma_fd = l * std::sqrt(b(2 * num_drones + k));
      const SerBreakdown out = average_ser_mpsk_detailed(sub, em, pt.taylor);
      value += out.value;
      terms += out.terms;
    }
  }
  value /= static_cast<double>(slots.size()) * num_drones;
  std::cout << "ser_analytic = " << fmt(value) << " (taylor order " << pt.taylor.order
            << ", terms = " << terms << ")\n";
  return 0;
}

// Oracle-agreement suite: the closed forms against independent quadrature
// and finite differences.
int cmd_validate(const Options&) {
  using boost::math::quadrature::gauss_kronrod;
  int failures = 0;
  const auto report = [&failures](const char* name, double err, double tol) {
    const bool ok = err <= tol;
    if (!ok) ++failures;
    std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "  max_err=" << fmt(err)
              << "  tol=" << fmt(tol) << "\n";
  };

  // gaussian_trig_integral vs direct quadrature, 1000 seeded random cases
  {
    RngStream rng(7);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double c = -40.0 + 80.0 * rng.uniform();
      const double sigma = 0.01 + 3.0 * rng.uniform();
      const double lo = -6.0 * rng.uniform();
      const double hi = 6.0 * rng.uniform();
      if (lo > hi) continue;
      const std::complex<double> got = gaussian_trig_integral(c, sigma, lo, hi);
      const auto re = gauss_kronrod<double, 61>::integrate(
          [&](double x) { return std::cos(c * x) * std::exp(-x * x / (2 * sigma * sigma)); }, lo,
          hi, 12, 1e-13);
      const auto im = gauss_kronrod<double, 61>::integrate(
          [&](double x) { return std::sin(c * x) * std::exp(-x * x / (2 * sigma * sigma)); }, lo,
          hi, 12, 1e-13);
      worst = std::max(worst, std::abs(got - std::complex<double>(re, im)));
    }
    report("gaussian_trig_integral vs quadrature (1000 cases)", worst, 1e-9);
  }

  // moment_e67 vs 2-D quadrature on single-drone two-antenna cases
  {
    RngStream rng(11);
    double worst = 0.0;
    for (int i = 0; i < 40; ++i) {
      ScenarioSpec s;
      s.geometry = make_array(2, 0.0016);
      DroneState d;
      d.doa_rad = -0.8 + 1.6 * rng.uniform();
      d.range_m = 40.0 + 80.0 * rng.uniform();
      d.doppler_hz = 4000.0 * rng.uniform();
      d.tx_power = 0.5 + rng.uniform();
      s.drones = {d};
      s.config.subframes = 1;
      s.config.sampling_hz = 100000.0;
      s.config.modulation_order = 8;
      ErrorModel em;
      em.sigma_theta = 0.002 + 0.01 * rng.uniform();
      em.sigma_fd = 20.0 + 100.0 * rng.uniform();
      const auto lim = resolve_fd_limits(em);

      const double w = std::sqrt(d.tx_power) * path_loss(s.geometry.wavelength_m, d.range_m);
      const double ct = 2.0 * std::numbers::pi * s.geometry.spacing_m * std::cos(d.doa_rad) /
                        s.geometry.wavelength_m;
      const double cf = 2.0 * std::numbers::pi / s.config.sampling_hz;
      const auto nu = [&](double dth, double dfd) {
        const std::complex<double> v =
            w * std::exp(std::complex<double>(0.0, -cf * dfd)) *
            (1.0 + std::exp(std::complex<double>(0.0, ct * dth)));
        return v;
      };
      for (int q1 = 0; q1 <= 3; ++q1) {
        for (int q2 = 0; q2 <= q1; ++q2) {
          const double got = moment_e67(s, q1, q2, {0}, em);
          const auto inner = [&](double dth) {
            return gauss_kronrod<double, 31>::integrate(
                [&](double dfd) {
                  const std::complex<double> v = nu(dth, dfd);
                  return std::pow(v.real(), q2) * std::pow(v.imag(), q1 - q2) *
                         std::exp(-dfd * dfd / (2 * em.sigma_fd * em.sigma_fd)) /
                         (std::sqrt(2 * std::numbers::pi) * em.sigma_fd);
                },
                lim.first, lim.second, 10, 1e-12);
          };
          const double want = gauss_kronrod<double, 61>::integrate(
              [&](double dth) {
                return inner(dth) *
                       std::exp(-dth * dth / (2 * em.sigma_theta * em.sigma_theta)) /
                       (std::sqrt(2 * std::numbers::pi) * em.sigma_theta);
              },
              -std::numbers::pi, std::numbers::pi, 10, 1e-12);
          const double scale = std::max(1.0, std::abs(want));
          worst = std::max(worst, std::abs(got - want) / scale);
        }
      }
    }
    report("moment_e67 vs 2-D quadrature (40 cases, q1<=3)", worst, 1e-6);
  }

  // mean_jacobian vs central finite differences
  {
    ArrayGeometry g = make_array(4, 0.0016);
    FrameConfig c;
    c.subframes = 3;
    c.sampling_hz = 100000.0;
    ParameterVector psi;
    psi.theta_rad = {0.35, 0.70};
    psi.range_m = {80.0, 90.0};
    psi.doppler_hz = {2000.0, 4000.0};
    const std::vector<double> powers = {1.0, 1.3};
    const Eigen::MatrixXcd jac = mean_jacobian(psi, powers, g, c, c.subframes);
    double worst = 0.0;
    const std::vector<double> flat = psi.flatten();
    for (int j = 0; j < static_cast<int>(flat.size()); ++j) {
      const double h = std::max(1e-6, 1e-7 * std::abs(flat[static_cast<size_t>(j)]));
      auto perturbed = [&](double delta) {
        ParameterVector p = psi;
        const int k = j % 2;
        if (j < 2) p.theta_rad[static_cast<size_t>(k)] += delta;
        else if (j < 4) p.range_m[static_cast<size_t>(k)] += delta;
        else p.doppler_hz[static_cast<size_t>(k)] += delta;
        return mean_vector(p, powers, g, c, c.subframes);
      };
      const Eigen::VectorXcd diff = (perturbed(h) - perturbed(-h)) / (2.0 * h);
      const double denom = std::max(1.0, jac.col(j).norm());
      worst = std::max(worst, (diff - jac.col(j)).norm() / denom);
    }
    report("mean_jacobian vs finite differences", worst, 1e-6);
  }

  // conditional_ser at zero error vs the classical MPSK union bound
  {
    double worst = 0.0;
    for (const int antennas : {2, 4, 8}) {
      ScenarioSpec s;
      s.geometry = make_array(antennas, 0.0016);
      DroneState d;
      d.doa_rad = 0.5;
      d.range_m = 80.0;
      d.doppler_hz = 2000.0;
      s.drones = {d};
      s.config.subframes = 1;
      s.config.sampling_hz = 100000.0;
      s.config.modulation_order = 8;
      s.config.noise_variance = 2.5;
      const double eta = path_loss(s.geometry.wavelength_m, d.range_m);
      const double gamma = d.tx_power * eta * eta / s.config.noise_variance;
      const double want =
          2.0 * q_function(std::sqrt(2.0 * antennas * gamma) *
                           std::sin(std::numbers::pi / s.config.modulation_order));
      const double got = conditional_ser(s, {0}, DeltaPsi{});
      worst = std::max(worst, std::abs(got - want));
    }
    report("conditional_ser zero error vs union bound", worst, 1e-12);
  }

  // end-to-end: Taylor closed form vs adaptive quadrature
  {
    ScenarioSpec s;
    s.geometry = make_array(6, 0.0016);
    DroneState d1, d2;
    d1.doa_rad = 20.0 * std::numbers::pi / 180.0;
    d2.doa_rad = 40.0 * std::numbers::pi / 180.0;
    d1.range_m = d2.range_m = 80.0;
    d1.doppler_hz = 2000.0;
    d2.doppler_hz = 4000.0;
    s.drones = {d1, d2};
    s.config.subframes = 5;
    s.config.sampling_hz = 100000.0;
    s.config.modulation_order = 8;
    apply_snr(s, 9.0);
    ErrorModel em;
    em.sigma_theta = 0.004;
    em.sigma_fd = 60.0;
    TaylorSpec taylor;
    taylor.order = 8;
    double worst = 0.0;
    for (int k = 0; k < 2; ++k) {
      s.target = k;
      worst = std::max(worst, std::abs(average_ser_mpsk(s, em, taylor) -
                                       average_ser_numeric_oracle(s, em, QuadratureSpec{})));
    }
    report("average_ser_mpsk vs numeric oracle (R=8)", worst, 1e-4);
  }

  std::cout << (failures == 0 ? "all checks passed\n" : "checks failed\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pilot-aided localisation and MPSK decoding toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  app.add_option("--config", opt.config_path, "JSON experiment config");
  app.add_option("--seed", opt.seed, "override the config's master seed")
      ->each([&opt](const std::string&) { opt.seed_set = true; });
  app.add_option("--threads", opt.threads, "worker threads for Monte-Carlo trials");
  app.add_option("--out", opt.out, "override the config's output path");
  app.add_option("--format", opt.format, "output format (csv)");

  auto* simulate = app.add_subcommand("simulate", "run one Monte-Carlo point");
  auto* sweep = app.add_subcommand("sweep", "run the configured sweep");
  auto* trajectory = app.add_subcommand("trajectory", "constant-velocity tracking run");
  auto* crlb = app.add_subcommand("crlb", "square-root CRLB per pilot count");
  auto* ser = app.add_subcommand("ser-analytic", "closed-form average SER");
  auto* validate = app.add_subcommand("validate", "oracle-agreement suite");
  for (auto* sub : {simulate, sweep, trajectory, crlb, ser, validate}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(opt);
    if (sweep->parsed()) return cmd_sweep(opt);
    if (trajectory->parsed()) return cmd_trajectory(opt);
    if (crlb->parsed()) return cmd_crlb(opt);
    if (ser->parsed()) return cmd_ser_analytic(opt);
    if (validate->parsed()) return cmd_validate(opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
