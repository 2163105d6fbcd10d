#include "rha/array_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rha::array {

namespace {

constexpr double kAngleSlack = 1e-12;

void require(bool ok, const std::string& msg) {
  if (!ok) throw DomainError(msg);
}

void check_angle(double theta) {
  if (!std::isfinite(theta) || std::abs(theta) > kPi / 2 + kAngleSlack)
    throw DomainError("angle " + std::to_string(theta) + " outside [-pi/2, pi/2]");
}

}  // namespace

void ScenarioConfig::validate() const {
  require(num_antennas >= 1 && elements_per_antenna >= 1, "M and N must be positive");
  require(element_spacing >= 0 && antenna_spacing > 0, "spacings must be positive");
  require(element_spacing <= antenna_spacing, "element spacing d_e must not exceed antenna spacing d");
  require(wavelength > 0, "wavelength must be positive");
  require(control_bits >= 1 && control_bits <= 16, "control bits must be in [1, 16]");
  require(adc_bits >= 1 && adc_bits <= 30, "ADC bits must be in [1, 30]");
  require(adc_fullscale > 0, "ADC full scale must be positive");
  require(signal_power > 0 && jam_power > 0 && noise_power > 0, "all powers must be positive");
  require(num_paths_alice >= 1 && num_paths_jam >= 1, "path counts must be positive");
  require(!blocking_ratio || *blocking_ratio > 0, "blocking ratio must be positive");
  require(coupling_efficiency > 0 && coupling_efficiency <= 1, "coupling efficiency must be in (0, 1]");
  require(pilot_length >= 1, "pilot length must be positive");
}

double ScenarioConfig::xi() const { return blocking_ratio ? *blocking_ratio : std::ldexp(1.0, adc_bits - 1); }

RVec ScenarioConfig::antenna_positions() const {
  return RVec::LinSpaced(num_antennas, 0.0, antenna_spacing * (num_antennas - 1));
}

RVec ScenarioConfig::element_positions() const {
  return RVec::LinSpaced(elements_per_antenna, 0.0, element_spacing * (elements_per_antenna - 1));
}

std::vector<double> ScenarioConfig::phase_set() const {
  const int P = 1 << control_bits;
  std::vector<double> out(P);
  for (int b = 0; b < P; ++b) out[b] = kTwoPi * b / P;
  return out;
}

void ChannelRealization::validate(const ScenarioConfig& s) const {
  if (doa_alice.size() != s.num_paths_alice || gains_alice.size() != s.num_paths_alice)
    throw DimensionError("alice path count does not match scenario");
  if (doa_jam.size() != s.num_paths_jam || gains_jam.size() != s.num_paths_jam)
    throw DimensionError("jammer path count does not match scenario");
  for (double t : doa_alice) check_angle(t);
  for (double t : doa_jam) check_angle(t);
}

CVec RhaConfiguration::stacked() const {
  const Eigen::Index M = phase_shifts.rows(), N = phase_shifts.cols();
  if (weights.size() != M) throw DimensionError("weights length must equal number of antennas");
  CVec v(M * N);
  for (Eigen::Index m = 0; m < M; ++m)
    for (Eigen::Index n = 0; n < N; ++n) v(m * N + n) = weights(m) * phase_shifts(m, n);
  return v;
}

RhaConfiguration RhaConfiguration::from_stacked(const CVec& v, int M, int N) {
  if (v.size() != static_cast<Eigen::Index>(M) * N) throw DimensionError("stacked vector has wrong length");
  RhaConfiguration c;
  c.phase_shifts.resize(M, N);
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < N; ++n) c.phase_shifts(m, n) = v(m * N + n);
  c.weights = CVec::Ones(M);
  return c;
}

bool RhaConfiguration::unit_modulus(double tol) const {
  auto ok = [tol](const auto& X) { return ((X.array().abs() - 1.0).abs() <= tol).all(); };
  return ok(phase_shifts) && ok(weights);
}

bool RhaConfiguration::discrete(int bits, double tol) const {
  const double step = kTwoPi / (1 << bits);
  for (Eigen::Index i = 0; i < phase_shifts.size(); ++i) {
    double r = std::arg(phase_shifts(i)) / step;
    if (std::abs(r - std::round(r)) * step > tol) return false;
  }
  return true;
}

double AdcModel::quantize(double x, bool* saturated) const {
  const double half = 0.5 * fullscale, q = lsb();
  const bool sat = std::abs(x) > half;
  if (saturated) *saturated = sat;
  double level = (std::floor(x / q) + 0.5) * q;
  return std::clamp(level, -half + 0.5 * q, half - 0.5 * q);
}

cd AdcModel::quantize(cd x, bool* saturated) const {
  bool si = false, sq = false;
  cd out(quantize(x.real(), &si), quantize(x.imag(), &sq));
  if (saturated) *saturated = si || sq;
  return out;
}

ChannelRealization draw_channel(const ScenarioConfig& s, Rng& rng) {
  s.validate();
  const double lim = kPi / 2 - 1e-6;
  std::uniform_real_distribution<double> angle(-lim, lim), phase(0.0, kTwoPi);
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  auto gain = [&] {
    if (s.gain_model == GainModel::rayleigh) return cd(gauss(rng), gauss(rng));
    return std::polar(1.0, phase(rng));
  };
  auto qpsk = [&] {
    std::uniform_int_distribution<int> sym(0, 3);
    return std::polar(1.0, kPi / 4 + kPi / 2 * sym(rng));
  };
  ChannelRealization ch;
  ch.doa_alice.resize(s.num_paths_alice);
  ch.gains_alice.resize(s.num_paths_alice);
  ch.doa_jam.resize(s.num_paths_jam);
  ch.gains_jam.resize(s.num_paths_jam);
  for (int l = 0; l < s.num_paths_alice; ++l) {
    ch.doa_alice(l) = angle(rng);
    ch.gains_alice(l) = gain();
  }
  for (int l = 0; l < s.num_paths_jam; ++l) {
    ch.doa_jam(l) = angle(rng);
    ch.gains_jam(l) = gain();
  }
  ch.pilots_alice.resize(s.pilot_length);
  ch.pilots_jam.resize(s.pilot_length);
  for (int t = 0; t < s.pilot_length; ++t) ch.pilots_alice(t) = qpsk();
  for (int t = 0; t < s.pilot_length; ++t) ch.pilots_jam(t) = qpsk();
  return ch;
}

CVec steering_vector(double theta, const RVec& positions, double k0) {
  check_angle(theta);
  if (!positions.allFinite()) throw DomainError("steering_vector: positions must be finite");
  const double st = std::sin(theta);
  CVec a(positions.size());
  for (Eigen::Index n = 0; n < positions.size(); ++n) a(n) = std::polar(1.0, -k0 * positions(n) * st);
  return a;
}

CMat waveguide_matrix(int N, double d_e, double alpha_t, double beta_t) {
  if (N < 1) throw DimensionError("waveguide_matrix: N must be positive");
  CMat T = CMat::Zero(N, N);
  for (int n = 0; n < N; ++n) T(n, n) = std::exp(-(n * d_e) * cd(alpha_t, beta_t));
  return T;
}

CVec waveguide_taps(const ScenarioConfig& s) {
  return s.coupling_efficiency *
         waveguide_matrix(s.elements_per_antenna, s.element_spacing, s.waveguide_attenuation, s.waveguide_phase)
             .diagonal();
}

CVec radiation_pattern(const CVec& omega_m, const CMat& T, const RVec& thetas, const RVec& element_positions,
                       double k0) {
  const Eigen::Index N = omega_m.size();
  if (T.rows() != N || T.cols() != N || element_positions.size() != N)
    throw DimensionError("radiation_pattern: omega, T and element positions must agree");
  CVec out(thetas.size());
  const CVec wT = T.adjoint() * omega_m;  // (omega^H T)^H
  for (Eigen::Index i = 0; i < thetas.size(); ++i)
    out(i) = wT.dot(steering_vector(thetas(i), element_positions, k0));
  return out;
}

CVec rha_antenna_channel(const ScenarioConfig& s, const CMat& omega, const RVec& thetas, const CVec& gains) {
  const int M = s.num_antennas, N = s.elements_per_antenna;
  if (omega.rows() != M || omega.cols() != N) throw DimensionError("phase shift matrix must be M x N");
  if (thetas.size() != gains.size()) throw DimensionError("angles and gains differ in length");
  const CVec t = waveguide_taps(s);
  const RVec re = s.element_positions(), ra = s.antenna_positions();
  const double k0 = s.k0();
  CVec h = CVec::Zero(M);
  for (Eigen::Index l = 0; l < thetas.size(); ++l) {
    const CVec td = t.cwiseProduct(steering_vector(thetas(l), re, k0));
    const CVec a = steering_vector(thetas(l), ra, k0);
    for (int m = 0; m < M; ++m) h(m) += omega.row(m).transpose().dot(td) * a(m) * gains(l);
  }
  return h;
}

CVec stacked_channel(const ScenarioConfig& s, const RVec& thetas, const CVec& gains) {
  const int M = s.num_antennas, N = s.elements_per_antenna;
  if (thetas.size() != gains.size()) throw DimensionError("angles and gains differ in length");
  const CVec t = waveguide_taps(s);
  const RVec re = s.element_positions(), ra = s.antenna_positions();
  const double k0 = s.k0();
  CVec c = CVec::Zero(static_cast<Eigen::Index>(M) * N);
  for (Eigen::Index l = 0; l < thetas.size(); ++l) {
    const CVec td = t.cwiseProduct(steering_vector(thetas(l), re, k0));
    const CVec a = steering_vector(thetas(l), ra, k0);
    for (int m = 0; m < M; ++m) c.segment(m * N, N) += (a(m) * gains(l)) * td;
  }
  return c;
}

CVec ula_channel(const RVec& positions, double k0, const RVec& thetas, const CVec& gains, double amplitude) {
  if (thetas.size() != gains.size()) throw DimensionError("angles and gains differ in length");
  CVec h = CVec::Zero(positions.size());
  for (Eigen::Index l = 0; l < thetas.size(); ++l) h += gains(l) * steering_vector(thetas(l), positions, k0);
  return amplitude * h;
}

ReceivedSamples received_samples(const ScenarioConfig& s, const ChannelRealization& ch, const RhaConfiguration& cfg,
                                 const CVec& symbols_alice, const CVec& symbols_jam, Rng* rng) {
  s.validate();
  ch.validate(s);
  if (symbols_alice.size() != symbols_jam.size()) throw DimensionError("symbol streams differ in length");
  const CVec ha = rha_antenna_channel(s, cfg.phase_shifts, ch.doa_alice, ch.gains_alice);
  const CVec hj = rha_antenna_channel(s, cfg.phase_shifts, ch.doa_jam, ch.gains_jam);
  const Eigen::Index M = s.num_antennas, T = symbols_alice.size();
  ReceivedSamples out;
  out.pre_adc = std::sqrt(s.signal_power) * ha * symbols_alice.transpose() +
                std::sqrt(s.jam_power) * hj * symbols_jam.transpose();
  if (rng) {
    std::normal_distribution<double> g(0.0, std::sqrt(0.5 * s.noise_power));
    for (Eigen::Index i = 0; i < out.pre_adc.size(); ++i) out.pre_adc(i) += cd(g(*rng), g(*rng));
  }
  // Automatic gain control: the strongest antenna's expected rail RMS maps to V_f / 4.
  double peak = 0;
  for (Eigen::Index m = 0; m < M; ++m)
    peak = std::max(peak, s.signal_power * std::norm(ha(m)) + s.jam_power * std::norm(hj(m)) + s.noise_power);
  out.adc_input_gain = 0.25 * s.adc_fullscale / std::sqrt(0.5 * peak);
  const AdcModel adc{s.adc_bits, s.adc_fullscale};
  const double g = s.lna_gain * out.adc_input_gain;
  out.post_adc.resize(M, T);
  out.saturated.resize(M, T);
  for (Eigen::Index m = 0; m < M; ++m)
    for (Eigen::Index t = 0; t < T; ++t) {
      bool sat = false;
      out.post_adc(m, t) = adc.quantize(g * out.pre_adc(m, t), &sat) / g;
      out.saturated(m, t) = sat;
    }
  return out;
}

bool blocking_predicate(double signal_component, double jam_component, const AdcModel& adc) {
  const double a = std::abs(signal_component), b = std::abs(jam_component);
  if (b == 0) return false;
  if (a + b == 0) return false;
  return a / (a + b) < adc.lsb() / adc.fullscale;
}

RailBlocking blocking_predicate(cd signal_component, cd jam_component, const AdcModel& adc) {
  return {blocking_predicate(signal_component.real(), jam_component.real(), adc),
          blocking_predicate(signal_component.imag(), jam_component.imag(), adc)};
}

Sinr combiner_sinr(const CVec& w, const CVec& h_a, const CVec& h_j, double Pa, double Pj, double noise,
                   const std::vector<bool>* lost) {
  if (w.size() != h_a.size() || w.size() != h_j.size()) throw DimensionError("combiner and channels differ in length");
  cd sig = 0;
  for (Eigen::Index m = 0; m < w.size(); ++m)
    if (!lost || !(*lost)[m]) sig += std::conj(w(m)) * h_a(m);
  const double num = Pa * std::norm(sig);
  const double den = Pj * std::norm(w.dot(h_j)) + noise * w.squaredNorm() / static_cast<double>(w.size());
  Sinr r;
  r.linear = den > 0 ? num / den : 0.0;
  r.db = to_db(r.linear);
  return r;
}

Sinr received_sinr(const ScenarioConfig& s, const ChannelRealization& ch, const RhaConfiguration& cfg) {
  const CVec ha = rha_antenna_channel(s, cfg.phase_shifts, ch.doa_alice, ch.gains_alice);
  const CVec hj = rha_antenna_channel(s, cfg.phase_shifts, ch.doa_jam, ch.gains_jam);
  return combiner_sinr(cfg.weights, ha, hj, s.signal_power, s.jam_power, s.noise_power);
}

Sinr received_sinr_stacked(const ScenarioConfig& s, const ChannelRealization& ch, const CVec& v) {
  const CVec ca = stacked_channel(s, ch.doa_alice, ch.gains_alice);
  const CVec cj = stacked_channel(s, ch.doa_jam, ch.gains_jam);
  if (v.size() != ca.size()) throw DimensionError("stacked vector has wrong length");
  // unit-modulus v gives |w|^2 / M = 1, so the noise term is sigma^2
  const double num = s.signal_power * std::norm(v.dot(ca));
  const double den = s.jam_power * std::norm(v.dot(cj)) +
                     s.noise_power * v.squaredNorm() / static_cast<double>(v.size());
  Sinr r;
  r.linear = num / den;
  r.db = to_db(r.linear);
  return r;
}

double hadamard_mix_identity_check(const CMat& A, const CMat& B, const CVec& w) {
  if (A.rows() != B.rows() || A.cols() != B.cols() || A.cols() != w.size())
    throw DimensionError("hadamard_mix_identity_check: shapes do not conform");
  const CVec direct = A.cwiseProduct(B) * w;
  CVec viaB(A.rows()), viaA(A.rows());
  for (Eigen::Index m = 0; m < A.rows(); ++m) {
    // b_m^T diag(a_m) w and a_m^T diag(b_m) w
    viaB(m) = (B.row(m) * A.row(m).transpose().asDiagonal() * w)(0);
    viaA(m) = (A.row(m) * B.row(m).transpose().asDiagonal() * w)(0);
  }
  return std::max((direct - viaB).norm(), (direct - viaA).norm());
}

double gamma_upper_bound(const ScenarioConfig& s) {
  const double MN = static_cast<double>(s.num_antennas) * s.elements_per_antenna;
  const double L = s.num_paths_alice;
  return s.signal_power * MN * MN * L * L / s.noise_power;
}

}  // namespace rha::array
