#include "pilotloc/signal_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pilotloc {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

ArrayGeometry make_array(int antennas, double wavelength_m) {
  return make_array(antennas, wavelength_m, 0.5 * wavelength_m);
}

ArrayGeometry make_array(int antennas, double wavelength_m, double spacing_m) {
  ArrayGeometry g{antennas, wavelength_m, spacing_m};
  validate(g);
  return g;
}

void validate(const ArrayGeometry& g) {
  if (g.antennas < 2) throw std::invalid_argument("array needs at least 2 antennas");
  if (!(g.wavelength_m > 0.0)) throw std::invalid_argument("wavelength must be positive");
  if (!(g.spacing_m > 0.0)) throw std::invalid_argument("antenna spacing must be positive");
}

void validate(const DroneState& d) {
  if (!(d.range_m > 0.0)) throw std::invalid_argument("drone range must be positive");
  if (!(d.tx_power > 0.0)) throw std::invalid_argument("drone power must be positive");
  if (!(std::abs(d.doa_rad) < 0.5 * std::numbers::pi))
    throw std::invalid_argument("DOA must lie in (-pi/2, pi/2)");
  if (!std::isfinite(d.doppler_hz)) throw std::invalid_argument("Doppler must be finite");
}

void validate(const FrameConfig& c) {
  if (c.frames < 1) throw std::invalid_argument("frames must be >= 1");
  if (c.subframes < 1) throw std::invalid_argument("subframes must be >= 1");
  if (c.symbols < 0) throw std::invalid_argument("symbols per subframe must be >= 0");
  if (!(c.sampling_hz > 0.0)) throw std::invalid_argument("sampling rate must be positive");
  if (c.modulation_order < 2) throw std::invalid_argument("modulation order must be >= 2");
  if (!(c.noise_variance >= 0.0)) throw std::invalid_argument("noise variance must be >= 0");
}

void validate_scenario(const ArrayGeometry& g, const std::vector<DroneState>& drones,
                       const FrameConfig& c) {
  validate(g);
  validate(c);
  if (drones.empty()) throw std::invalid_argument("scenario needs at least one drone");
  for (const auto& d : drones) {
    validate(d);
    if (!(c.sampling_hz > 2.0 * std::abs(d.doppler_hz)))
      throw std::invalid_argument("sampling rate must exceed twice the largest Doppler");
  }
}

Eigen::VectorXcd steering_vector(const ArrayGeometry& g, double theta_rad) {
  Eigen::VectorXcd a(g.antennas);
  const double step = -kTwoPi * g.spacing_m * std::sin(theta_rad) / g.wavelength_m;
  for (int n = 0; n < g.antennas; ++n) {
    const double ph = step * n;
    a(n) = std::complex<double>(std::cos(ph), std::sin(ph));
  }
  return a;
}

double path_loss(double wavelength_m, double range_m) {
  if (!(range_m > 0.0)) throw std::invalid_argument("range must be positive");
  return wavelength_m / (4.0 * std::numbers::pi * range_m);
}

Eigen::VectorXcd channel_column(const ArrayGeometry& g, const DroneState& drone,
                                const FrameConfig& c, int subframe_l) {
  const double eta = path_loss(g.wavelength_m, drone.range_m);
  const double ph = kTwoPi * drone.doppler_hz * subframe_l / c.sampling_hz;
  const std::complex<double> rot(std::cos(ph), std::sin(ph));
  return (eta * rot) * steering_vector(g, drone.doa_rad);
}

Eigen::MatrixXcd channel_matrix(const ArrayGeometry& g, const std::vector<DroneState>& drones,
                                const FrameConfig& c, int subframe_l) {
  Eigen::MatrixXcd h(g.antennas, static_cast<Eigen::Index>(drones.size()));
  for (size_t k = 0; k < drones.size(); ++k)
    h.col(static_cast<Eigen::Index>(k)) = channel_column(g, drones[k], c, subframe_l);
  return h;
}

SignalBlock synth_received(const ArrayGeometry& g, const std::vector<DroneState>& drones,
                           const FrameConfig& c, int subframe_l, int slot_t,
                           const std::vector<int>& symbols, RngStream& rng) {
  if (subframe_l < 1 || subframe_l > c.subframes) throw std::out_of_range("subframe index");
  if (slot_t < 0 || slot_t > c.symbols) throw std::out_of_range("slot index");
  if (slot_t > 0 && symbols.size() != drones.size())
    throw std::invalid_argument("data slot needs one symbol per drone");

  SignalBlock block;
  block.subframe = subframe_l;
  block.slot = slot_t;
  block.samples = Eigen::VectorXcd::Zero(g.antennas);
  for (size_t k = 0; k < drones.size(); ++k) {
    std::complex<double> s(1.0, 0.0);
    if (slot_t > 0) {
      const double ph = kTwoPi * symbols[k] / c.modulation_order;
      s = {std::cos(ph), std::sin(ph)};
    }
    s *= std::sqrt(drones[k].tx_power);
    block.samples += channel_column(g, drones[k], c, subframe_l) * s;
  }
  if (c.noise_variance > 0.0) {
    for (int n = 0; n < g.antennas; ++n)
      block.samples(n) += rng.complex_gaussian(c.noise_variance);
  }
  return block;
}

Eigen::VectorXcd stack_pilots(const std::vector<SignalBlock>& pilot_blocks) {
  if (pilot_blocks.empty()) throw std::invalid_argument("need at least one pilot block");
  const Eigen::Index n = pilot_blocks.front().samples.size();
  Eigen::VectorXcd y(n * static_cast<Eigen::Index>(pilot_blocks.size()));
  for (size_t i = 0; i < pilot_blocks.size(); ++i) {
    const auto& b = pilot_blocks[i];
    if (b.slot != 0) throw std::invalid_argument("stack_pilots expects pilot slots");
    if (b.subframe != static_cast<int>(i) + 1)
      throw std::invalid_argument("pilot blocks must cover subframes 1..l in order");
    if (b.samples.size() != n) throw std::invalid_argument("pilot block size mismatch");
    y.segment(static_cast<Eigen::Index>(i) * n, n) = b.samples;
  }
  return y;
}

}  // namespace pilotloc
