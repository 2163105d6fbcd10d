#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "rha/types.hpp"

namespace rha::array {

using Rng = std::mt19937_64;

enum class GainModel { fixed_magnitude, rayleigh };

// One physical scenario. Lengths share one unit (wavelengths by default, so
// wavelength = 1 and k0 = 2*pi); powers are linear.
struct ScenarioConfig {
  int num_antennas = 4;            // M
  int elements_per_antenna = 8;    // N
  double antenna_spacing = 2.5;    // d
  double element_spacing = 0.25;   // d_e
  double wavelength = 1.0;
  double waveguide_attenuation = 0.1;                  // alpha_t, nepers per unit length
  double waveguide_phase = 2.0 * kPi * 2.5;            // beta_t = 2 pi n_g / lambda
  int control_bits = 3;            // B
  int adc_bits = 5;                // K
  double adc_fullscale = 1.0;      // V_f
  double lna_gain = 1.0;           // A_i
  double signal_power = 100.0;     // P_a
  double jam_power = 1e4;          // P_j
  double noise_power = 1.0;        // sigma_n^2
  int num_paths_alice = 4;         // L_a
  int num_paths_jam = 4;           // L_j
  std::optional<double> blocking_ratio;  // xi; default 2^(K-1)
  double coupling_efficiency = 1.0;      // synthetic per-element efficiency
  GainModel gain_model = GainModel::fixed_magnitude;
  int pilot_length = 16;

  void validate() const;
  double k0() const { return kTwoPi / wavelength; }
  double xi() const;
  RVec antenna_positions() const;  // (m-1) d
  RVec element_positions() const;  // (n-1) d_e
  std::vector<double> phase_set() const;  // 2 pi b / 2^B
};

struct ChannelRealization {
  RVec doa_alice;
  RVec doa_jam;
  CVec gains_alice;
  CVec gains_jam;
  CVec pilots_alice;
  CVec pilots_jam;

  void validate(const ScenarioConfig& s) const;
};

// omega: M x N phase shifts (row m is omega_m), weights: length M.
struct RhaConfiguration {
  CMat phase_shifts;
  CVec weights;

  // v_{mN+n} = w_m omega_{m,n}
  CVec stacked() const;
  static RhaConfiguration from_stacked(const CVec& v, int M, int N);
  bool unit_modulus(double tol = 1e-12) const;
  bool discrete(int bits, double tol = 1e-9) const;
};

struct AdcModel {
  int bits = 5;
  double fullscale = 1.0;

  double lsb() const { return fullscale / static_cast<double>(1ull << bits); }
  // Mid-rise uniform quantizer clipping at +-V_f/2.
  double quantize(double x, bool* saturated = nullptr) const;
  cd quantize(cd x, bool* saturated = nullptr) const;
};

// Draw a channel: DoAs uniform inside (-pi/2, pi/2), path gains per gain model,
// QPSK pilots.
ChannelRealization draw_channel(const ScenarioConfig& s, Rng& rng);

CVec steering_vector(double theta, const RVec& positions, double k0);
CMat waveguide_matrix(int N, double d_e, double alpha_t, double beta_t);
CVec waveguide_taps(const ScenarioConfig& s);  // diagonal of T, times coupling efficiency

// omega_m^H T delta(theta) for each angle.
CVec radiation_pattern(const CVec& omega_m, const CMat& T, const RVec& thetas, const RVec& element_positions,
                       double k0);

// Per-antenna effective channel of one source: h_m = sum_l (omega_m^H T delta(theta_l)) a_m(theta_l) g_l.
CVec rha_antenna_channel(const ScenarioConfig& s, const CMat& omega, const RVec& thetas, const CVec& gains);
// Element-level channel c (length NM) with w^H h = v^H c.
CVec stacked_channel(const ScenarioConfig& s, const RVec& thetas, const CVec& gains);
// Omnidirectional array at the given positions with a per-antenna amplitude gain.
CVec ula_channel(const RVec& positions, double k0, const RVec& thetas, const CVec& gains, double amplitude = 1.0);

struct ReceivedSamples {
  CMat pre_adc;    // M x T
  CMat post_adc;   // M x T
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> saturated;
  double adc_input_gain = 1.0;  // automatic gain applied before quantization
};

// Samples at every antenna before combining. rng == nullptr disables noise.
ReceivedSamples received_samples(const ScenarioConfig& s, const ChannelRealization& ch, const RhaConfiguration& cfg,
                                 const CVec& symbols_alice, const CVec& symbols_jam, Rng* rng);

// true iff |signal| / (|signal| + |jam|) < LSB / V_f (strict).
bool blocking_predicate(double signal_component, double jam_component, const AdcModel& adc);
struct RailBlocking {
  bool in_phase;
  bool quadrature;
};
RailBlocking blocking_predicate(cd signal_component, cd jam_component, const AdcModel& adc);

struct Sinr {
  double linear = 0.0;
  double db = -100.0;
};

// Generic combiner SINR with noise referenced to unit-modulus weights:
//   P_a |w^H h_a|^2 / (P_j |w^H h_j|^2 + sigma^2 |w|^2 / len(w)).
// Antennas flagged in `lost` contribute no desired signal.
Sinr combiner_sinr(const CVec& w, const CVec& h_a, const CVec& h_j, double Pa, double Pj, double noise,
                   const std::vector<bool>* lost = nullptr);

Sinr received_sinr(const ScenarioConfig& s, const ChannelRealization& ch, const RhaConfiguration& cfg);
Sinr received_sinr_stacked(const ScenarioConfig& s, const ChannelRealization& ch, const CVec& v);

// Virtual-antenna identity residual: max of the two diag-form rewritings against (A o B) w.
double hadamard_mix_identity_check(const CMat& A, const CMat& B, const CVec& w);

// P_a M^2 N^2 L_a^2 / sigma^2
double gamma_upper_bound(const ScenarioConfig& s);

}  // namespace rha::array
