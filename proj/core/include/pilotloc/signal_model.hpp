#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "pilotloc/rng.hpp"

namespace pilotloc {

// Uniform linear array at the base station. Spacing defaults to half the
// carrier wavelength.
struct ArrayGeometry {
  int antennas = 0;
  double wavelength_m = 0.0;
  double spacing_m = 0.0;
};

ArrayGeometry make_array(int antennas, double wavelength_m);
ArrayGeometry make_array(int antennas, double wavelength_m, double spacing_m);
void validate(const ArrayGeometry& g);

// One drone's uplink state: direction of arrival (radians, measured from
// array boresight), line-of-sight range, Doppler shift, transmit power, and
// ground speed (used only by trajectory runs).
struct DroneState {
  double doa_rad = 0.0;
  double range_m = 0.0;
  double doppler_hz = 0.0;
  double tx_power = 1.0;
  double velocity_mps = 0.0;
};

void validate(const DroneState& d);

// Frame layout and channel constants. A frame holds `subframes` subframes,
// each carrying one pilot slot followed by `symbols` data slots. The Doppler
// phase of every slot in subframe l is exp(j 2 pi fD l / fs): the phase
// advances with the subframe index only, and data slots reuse the subframe
// phase.
struct FrameConfig {
  int frames = 1;
  int subframes = 1;
  int symbols = 0;
  double sampling_hz = 0.0;
  int modulation_order = 2;
  double noise_variance = 1.0;
};

void validate(const FrameConfig& c);

// Aliasing guard: every drone's Doppler must satisfy fs > 2 |fD|.
void validate_scenario(const ArrayGeometry& g, const std::vector<DroneState>& drones,
                       const FrameConfig& c);

// One received slot: samples is antennas x 1, slot 0 is the pilot.
struct SignalBlock {
  Eigen::VectorXcd samples;
  int subframe = 0;  // l, 1-based
  int slot = 0;      // t, 0 = pilot, 1..T = data
};

// a(theta): unit-modulus phase ramp across the array, element 1 = 1.
Eigen::VectorXcd steering_vector(const ArrayGeometry& g, double theta_rad);

// Free-space amplitude gain eta = lambda / (4 pi d).
double path_loss(double wavelength_m, double range_m);

// h_k(l) = eta_k a(theta_k) exp(j 2 pi fD_k l / fs) for subframe l.
Eigen::VectorXcd channel_column(const ArrayGeometry& g, const DroneState& drone,
                                const FrameConfig& c, int subframe_l);

// N x K matrix of channel columns for all drones at subframe l.
Eigen::MatrixXcd channel_matrix(const ArrayGeometry& g, const std::vector<DroneState>& drones,
                                const FrameConfig& c, int subframe_l);

// Synthesize one received slot. For the pilot slot (t = 0) every drone sends
// the constant symbol 1; for data slots `symbols` holds one MPSK index per
// drone. Noise is circular complex Gaussian with total variance
// c.noise_variance per antenna sample; nothing is drawn when the variance is
// zero, so a zero-noise config is exactly deterministic.
SignalBlock synth_received(const ArrayGeometry& g, const std::vector<DroneState>& drones,
                           const FrameConfig& c, int subframe_l, int slot_t,
                           const std::vector<int>& symbols, RngStream& rng);

// Stack pilot blocks for subframes 1..l into one column (subframe-major).
Eigen::VectorXcd stack_pilots(const std::vector<SignalBlock>& pilot_blocks);

}  // namespace pilotloc
