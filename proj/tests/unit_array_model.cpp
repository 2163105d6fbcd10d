#include <gtest/gtest.h>

#include <cmath>

#include "rha/array_model.hpp"

using namespace rha;
using namespace rha::array;

namespace {

CVec random_cvec(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> g;
  CVec v(n);
  for (auto& x : v) x = cd(g(rng), g(rng));
  return v;
}

CVec random_phases(Eigen::Index n, Rng& rng) {
  std::uniform_real_distribution<double> u(0, kTwoPi);
  CVec v(n);
  for (auto& x : v) x = std::polar(1.0, u(rng));
  return v;
}

ScenarioConfig small_scenario() {
  ScenarioConfig s;
  s.num_antennas = 2;
  s.elements_per_antenna = 2;
  s.num_paths_alice = 1;
  s.num_paths_jam = 1;
  return s;
}

RhaConfiguration random_config(const ScenarioConfig& s, Rng& rng) {
  RhaConfiguration c;
  c.phase_shifts.resize(s.num_antennas, s.elements_per_antenna);
  for (int m = 0; m < s.num_antennas; ++m) c.phase_shifts.row(m) = random_phases(s.elements_per_antenna, rng).transpose();
  c.weights = random_phases(s.num_antennas, rng);
  return c;
}

// Brute-force expansion of the received signal at antenna m, written from
// scratch with scalar loops: sum_l sum_n conj(omega_mn) t_n e^{-jk0((n-1)d_e + (m-1)d) sin theta_l} g_l.
cd brute_antenna(const ScenarioConfig& s, const CMat& omega, int m, const RVec& th, const CVec& g) {
  cd acc = 0;
  const double k0 = 2 * kPi / s.wavelength;
  for (Eigen::Index l = 0; l < th.size(); ++l)
    for (int n = 0; n < s.elements_per_antenna; ++n) {
      double r = n * s.element_spacing;
      cd t = std::exp(-r * cd(s.waveguide_attenuation, s.waveguide_phase)) * s.coupling_efficiency;
      double phase = -k0 * (r + m * s.antenna_spacing) * std::sin(th(l));
      acc += std::conj(omega(m, n)) * t * cd(std::cos(phase), std::sin(phase)) * g(l);
    }
  return acc;
}

}  // namespace

TEST(SteeringVector, BroadsideIsAllOnes) {
  RVec pos = RVec::LinSpaced(5, 0.0, 1.0);
  CVec a = steering_vector(0.0, pos, kTwoPi);
  for (auto x : a) EXPECT_NEAR(std::abs(x - cd(1, 0)), 0.0, 1e-15);
}

TEST(SteeringVector, EndfireQuarterWave) {
  RVec pos(1);
  pos << 0.25;
  CVec a = steering_vector(kPi / 2, pos, kTwoPi);
  EXPECT_NEAR(std::abs(a(0) - cd(0, -1)), 0.0, 1e-12);
}

TEST(SteeringVector, MatchesScalarLoop) {
  RVec pos = RVec::LinSpaced(8, 0.0, 7 * 0.25);
  CVec a = steering_vector(0.3, pos, kTwoPi);
  for (int n = 0; n < 8; ++n) {
    double ph = -2 * kPi * (0.25 * n) * std::sin(0.3);
    EXPECT_NEAR(std::abs(a(n) - cd(std::cos(ph), std::sin(ph))), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(a(n)), 1.0, 1e-12);
  }
}

TEST(SteeringVector, RejectsOutOfDomain) {
  RVec pos = RVec::Zero(2);
  EXPECT_THROW(steering_vector(2.0, pos, kTwoPi), DomainError);
  EXPECT_THROW(steering_vector(-1.6, pos, kTwoPi), DomainError);
}

TEST(Waveguide, FirstTapAndLossless) {
  CMat T = waveguide_matrix(6, 0.25, 0.0, 2 * kPi * 2.5);
  EXPECT_NEAR(std::abs(T(0, 0) - cd(1, 0)), 0.0, 1e-15);
  for (int n = 0; n < 6; ++n) EXPECT_NEAR(std::abs(T(n, n)), 1.0, 1e-12);
}

TEST(Waveguide, MatchesScalarLoopAndDecays) {
  const double a = 0.1, b = 2 * kPi * 2.5;
  CMat T = waveguide_matrix(8, 0.25, a, b);
  for (int n = 0; n < 8; ++n) {
    double r = 0.25 * n;
    cd ref = std::exp(-r * a) * cd(std::cos(-r * b), std::sin(-r * b));
    EXPECT_NEAR(std::abs(T(n, n) - ref), 0.0, 1e-12);
    if (n > 0) EXPECT_LE(std::abs(T(n, n)), std::abs(T(n - 1, n - 1)));
    for (int k = 0; k < 8; ++k)
      if (k != n) EXPECT_EQ(T(n, k), cd(0, 0));
  }
}

TEST(RadiationPattern, ScalarIdentity) {
  CVec w = CVec::Ones(1);
  CMat T = CMat::Identity(1, 1);
  RVec th = RVec::LinSpaced(7, -1.5, 1.5);
  CVec p = radiation_pattern(w, T, th, RVec::Zero(1), kTwoPi);
  for (auto x : p) EXPECT_NEAR(std::abs(x - cd(1, 0)), 0.0, 1e-15);
}

TEST(RadiationPattern, AlignedIsMaximal) {
  ScenarioConfig s;
  CMat T = waveguide_matrix(8, 0.25, 0.1, s.waveguide_phase);
  RVec re = s.element_positions();
  const double th0 = 0.4;
  // omega^H T delta is maximal when omega is the phase of T delta
  CVec Td = T * steering_vector(th0, re, kTwoPi);
  CVec w = Td.array() / Td.array().abs();
  RVec th(1);
  th << th0;
  CVec p = radiation_pattern(w, T, th, re, kTwoPi);
  EXPECT_NEAR(std::abs(p(0)), T.diagonal().cwiseAbs().sum(), 1e-12);
}

TEST(RadiationPattern, MatchesInnerProductLoop) {
  Rng rng(11);
  ScenarioConfig s;
  CMat T = waveguide_matrix(8, 0.25, 0.1, s.waveguide_phase);
  CVec w = random_phases(8, rng);
  RVec th = RVec::LinSpaced(8, -1.2, 1.3);
  CVec p = radiation_pattern(w, T, th, s.element_positions(), kTwoPi);
  for (int i = 0; i < 8; ++i) {
    cd acc = 0;
    for (int n = 0; n < 8; ++n) {
      double ph = -kTwoPi * 0.25 * n * std::sin(th(i));
      acc += std::conj(w(n)) * T(n, n) * cd(std::cos(ph), std::sin(ph));
    }
    EXPECT_NEAR(std::abs(p(i) - acc), 0.0, 1e-12);
  }
}

TEST(RadiationPattern, DimensionMismatchThrows) {
  EXPECT_THROW(radiation_pattern(CVec::Ones(3), CMat::Identity(2, 2), RVec::Zero(1), RVec::Zero(2), kTwoPi),
               DimensionError);
}

TEST(ReceivedSamples, CoherentBroadside) {
  ScenarioConfig s;
  s.num_antennas = 3;
  s.num_paths_alice = s.num_paths_jam = 1;
  s.jam_power = 1e-300;  // effectively off; powers must be positive
  ChannelRealization ch;
  ch.doa_alice = RVec::Zero(1);
  ch.doa_jam = RVec::Constant(1, 0.5);
  ch.gains_alice = CVec::Constant(1, std::polar(1.0, 0.7));
  ch.gains_jam = CVec::Ones(1);
  RhaConfiguration c{CMat::Ones(3, 8), CVec::Ones(3)};
  CVec sa = CVec::Constant(4, cd(0.6, -0.8)), sj = CVec::Zero(4);
  ReceivedSamples r = received_samples(s, ch, c, sa, sj, nullptr);
  const cd sum_t = waveguide_taps(s).sum();
  for (int m = 0; m < 3; ++m)
    for (int t = 0; t < 4; ++t)
      EXPECT_NEAR(std::abs(r.pre_adc(m, t) - std::sqrt(s.signal_power) * ch.gains_alice(0) * sa(t) * sum_t), 0.0, 1e-9);
}

TEST(ReceivedSamples, MatchesBruteForceExpansion) {
  Rng rng(5);
  ScenarioConfig s = small_scenario();
  ChannelRealization ch = draw_channel(s, rng);
  RhaConfiguration c = random_config(s, rng);
  CVec sa = random_cvec(6, rng), sj = random_cvec(6, rng);
  ReceivedSamples r = received_samples(s, ch, c, sa, sj, nullptr);
  for (int m = 0; m < 2; ++m) {
    cd ha = brute_antenna(s, c.phase_shifts, m, ch.doa_alice, ch.gains_alice);
    cd hj = brute_antenna(s, c.phase_shifts, m, ch.doa_jam, ch.gains_jam);
    for (int t = 0; t < 6; ++t) {
      cd ref = std::sqrt(s.signal_power) * ha * sa(t) + std::sqrt(s.jam_power) * hj * sj(t);
      EXPECT_NEAR(std::abs(r.pre_adc(m, t) - ref), 0.0, 1e-10 * std::max(1.0, std::abs(ref)));
    }
  }
}

TEST(ReceivedSamples, QuantizedWithinHalfLsbUnlessSaturated) {
  Rng rng(9);
  ScenarioConfig s = small_scenario();
  ChannelRealization ch = draw_channel(s, rng);
  RhaConfiguration c = random_config(s, rng);
  CVec sa = random_cvec(64, rng), sj = random_cvec(64, rng);
  ReceivedSamples r = received_samples(s, ch, c, sa, sj, &rng);
  const double lsb_in = s.adc_fullscale / (1 << s.adc_bits) / r.adc_input_gain;
  int sat = 0;
  for (Eigen::Index i = 0; i < r.pre_adc.size(); ++i) {
    if (r.saturated(i)) {
      ++sat;
      continue;
    }
    EXPECT_LE(std::abs(r.pre_adc(i).real() - r.post_adc(i).real()), 0.5 * lsb_in + 1e-12);
    EXPECT_LE(std::abs(r.pre_adc(i).imag() - r.post_adc(i).imag()), 0.5 * lsb_in + 1e-12);
  }
  EXPECT_LT(sat, r.pre_adc.size());
}

TEST(Adc, LsbAndMidRise) {
  AdcModel adc{3, 1.0};
  EXPECT_DOUBLE_EQ(adc.lsb(), 0.125);
  EXPECT_DOUBLE_EQ(adc.quantize(0.01), 0.0625);
  EXPECT_DOUBLE_EQ(adc.quantize(0.124), 0.0625);
  EXPECT_DOUBLE_EQ(adc.quantize(-0.01), -0.0625);
  EXPECT_DOUBLE_EQ(adc.quantize(0.126), 0.1875);
  bool sat = false;
  EXPECT_DOUBLE_EQ(adc.quantize(3.0, &sat), 0.4375);
  EXPECT_TRUE(sat);
  adc.quantize(0.3, &sat);
  EXPECT_FALSE(sat);
}

TEST(Blocking, NoJamNeverBlocks) {
  AdcModel adc{3, 1.0};
  EXPECT_FALSE(blocking_predicate(1e-9, 0.0, adc));
  EXPECT_FALSE(blocking_predicate(0.0, 0.0, adc));
}

TEST(Blocking, BoundaryIsStrict) {
  AdcModel adc{3, 1.0};
  // fraction 1/8 exactly: 1 / (1 + 7)
  EXPECT_FALSE(blocking_predicate(1.0, 7.0, adc));
  EXPECT_TRUE(blocking_predicate(1.0, 7.0 + 1e-9, adc));
}

TEST(Blocking, SweepFlipsAtLsb) {
  AdcModel adc{3, 1.0};
  for (int i = 1; i < 1000; ++i) {
    double f = i / 1000.0;  // desired fraction of the mixed rail
    bool blocked = blocking_predicate(f, 1.0 - f, adc);
    EXPECT_EQ(blocked, f < 0.125) << f;
  }
}

TEST(Blocking, MoreBitsNeverBlockMore) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 2000; ++trial) {
    double a = u(rng), b = u(rng) * 100;
    for (int K = 1; K < 12; ++K)
      if (!blocking_predicate(a, b, AdcModel{K, 1.0})) EXPECT_FALSE(blocking_predicate(a, b, AdcModel{K + 1, 1.0}));
  }
}

TEST(Blocking, PerRail) {
  AdcModel adc{3, 1.0};
  RailBlocking r = blocking_predicate(cd(1.0, 0.01), cd(1.0, 1.0), adc);
  EXPECT_FALSE(r.in_phase);
  EXPECT_TRUE(r.quadrature);
}

TEST(Sinr, SingleElementNoJam) {
  ScenarioConfig s;
  s.num_antennas = s.elements_per_antenna = 1;
  s.num_paths_alice = s.num_paths_jam = 1;
  s.jam_power = 1e-300;
  ChannelRealization ch;
  ch.doa_alice = RVec::Constant(1, 0.3);
  ch.doa_jam = RVec::Constant(1, -0.3);
  ch.gains_alice = CVec::Constant(1, std::polar(1.0, 1.1));
  ch.gains_jam = CVec::Ones(1);
  RhaConfiguration c{CMat::Ones(1, 1), CVec::Ones(1)};
  Sinr r = received_sinr(s, ch, c);
  EXPECT_NEAR(r.linear, s.signal_power / s.noise_power, 1e-9);
  EXPECT_NEAR(r.db, 20.0, 1e-9);
}

TEST(Sinr, OrthogonalWeightGivesZero) {
  Rng rng(2);
  ScenarioConfig s = small_scenario();
  ChannelRealization ch = draw_channel(s, rng);
  RhaConfiguration c = random_config(s, rng);
  CVec ha = rha_antenna_channel(s, c.phase_shifts, ch.doa_alice, ch.gains_alice);
  CVec w(2);
  w << std::conj(ha(1)), -std::conj(ha(0));
  ASSERT_NEAR(std::abs(w.dot(ha)), 0.0, 1e-12);
  EXPECT_NEAR(combiner_sinr(w, ha, ha, 1.0, 1.0, 1.0).linear, 0.0, 1e-20);
}

TEST(Sinr, MatchesTripleLoopAndStackedForm) {
  Rng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    ScenarioConfig s = small_scenario();
    s.num_paths_alice = 2;
    s.num_paths_jam = 3;
    ChannelRealization ch = draw_channel(s, rng);
    RhaConfiguration c = random_config(s, rng);
    cd sa = 0, sj = 0;
    for (int m = 0; m < 2; ++m) {
      sa += std::conj(c.weights(m)) * brute_antenna(s, c.phase_shifts, m, ch.doa_alice, ch.gains_alice);
      sj += std::conj(c.weights(m)) * brute_antenna(s, c.phase_shifts, m, ch.doa_jam, ch.gains_jam);
    }
    double ref = s.signal_power * std::norm(sa) / (s.jam_power * std::norm(sj) + s.noise_power);
    double got = received_sinr(s, ch, c).linear;
    EXPECT_NEAR(got, ref, 1e-10 * std::max(1.0, ref));
    double st = received_sinr_stacked(s, ch, c.stacked()).linear;
    EXPECT_NEAR(st, got, 1e-9 * got);
  }
}

TEST(Sinr, BoundedByGammaMax) {
  Rng rng(8);
  ScenarioConfig s;
  for (int rep = 0; rep < 50; ++rep) {
    ChannelRealization ch = draw_channel(s, rng);
    RhaConfiguration c = random_config(s, rng);
    // also try the matched configuration for the strongest path set
    EXPECT_LE(received_sinr(s, ch, c).linear, gamma_upper_bound(s));
    CVec ca = stacked_channel(s, ch.doa_alice, ch.gains_alice);
    CVec v = ca.array() / ca.array().abs();
    EXPECT_LE(received_sinr_stacked(s, ch, v).linear, gamma_upper_bound(s));
  }
}

TEST(Sinr, IdealPatternOracle) {
  // Pattern values chosen per path so that every signal path arrives in phase
  // and the jamming paths cancel; the signal term is then sum |phi||g|.
  Rng rng(4);
  const int L = 4;
  CVec g = random_cvec(L, rng), gj = random_cvec(L, rng);
  RVec mag = RVec::LinSpaced(L, 0.5, 2.0);
  CVec phi(L), phij(L);
  for (int l = 0; l < L; ++l) phi(l) = mag(l) * std::polar(1.0, -std::arg(g(l)));
  // jam: choose phi_j with phi_j . g_j = 0
  phij = random_cvec(L, rng);
  phij(L - 1) = -(phij.head(L - 1).cwiseProduct(gj.head(L - 1))).sum() / gj(L - 1);
  cd sig = phi.cwiseProduct(g).sum(), jam = phij.cwiseProduct(gj).sum();
  EXPECT_NEAR(std::abs(sig), (mag.array() * g.array().abs()).sum(), 1e-9);
  EXPECT_NEAR(std::abs(jam), 0.0, 1e-9);
  // the same oracle through the SINR evaluator: one antenna whose channel is the combined value
  CVec ha = CVec::Constant(1, sig), hj = CVec::Constant(1, jam);
  Sinr r = combiner_sinr(CVec::Ones(1), ha, hj, 1.0, 1e6, 1.0);
  EXPECT_NEAR(r.linear, std::norm(sig), 1e-6 * std::norm(sig));
}

TEST(HadamardIdentity, Examples) {
  CMat A = CMat::Ones(2, 2), B = CMat::Ones(2, 2);
  CVec w = CVec::Ones(2);
  EXPECT_EQ(hadamard_mix_identity_check(A, B, w), 0.0);
  Rng rng(1);
  CMat R(2, 2);
  R << cd(1, 2), cd(-1, 0.5), cd(0.3, 0), cd(2, -2);
  EXPECT_NEAR(hadamard_mix_identity_check(R, CMat::Ones(2, 2), w), 0.0, 1e-15);
  CVec ref = R * w;
  EXPECT_NEAR((R.cwiseProduct(CMat::Ones(2, 2)) * w - ref).norm(), 0.0, 1e-15);
}

TEST(HadamardIdentity, RandomComplex) {
  Rng rng(13);
  for (int rep = 0; rep < 10; ++rep) {
    CMat A(4, 3), B(4, 3);
    for (int i = 0; i < 12; ++i) {
      A(i) = random_cvec(1, rng)(0);
      B(i) = random_cvec(1, rng)(0);
    }
    EXPECT_LT(hadamard_mix_identity_check(A, B, random_cvec(3, rng)), 1e-12);
  }
  EXPECT_THROW(hadamard_mix_identity_check(CMat::Ones(2, 3), CMat::Ones(2, 2), CVec::Ones(3)), DimensionError);
}

TEST(Configuration, UnitModulusAndDiscrete) {
  ScenarioConfig s;
  Rng rng(6);
  RhaConfiguration c = random_config(s, rng);
  EXPECT_TRUE(c.unit_modulus());
  EXPECT_FALSE(c.discrete(3));
  for (Eigen::Index i = 0; i < c.phase_shifts.size(); ++i) c.phase_shifts(i) = std::polar(1.0, kTwoPi * (i % 8) / 8);
  EXPECT_TRUE(c.discrete(3));
  RhaConfiguration back = RhaConfiguration::from_stacked(c.stacked(), s.num_antennas, s.elements_per_antenna);
  EXPECT_NEAR((back.stacked() - c.stacked()).norm(), 0.0, 1e-15);
}

TEST(Scenario, PhaseSetAndValidation) {
  ScenarioConfig s;
  s.control_bits = 2;
  auto ps = s.phase_set();
  ASSERT_EQ(ps.size(), 4u);
  EXPECT_DOUBLE_EQ(ps[1], kPi / 2);
  EXPECT_DOUBLE_EQ(s.xi(), 16.0);
  s.element_spacing = 3.0;
  EXPECT_THROW(s.validate(), DomainError);
  s = ScenarioConfig{};
  s.jam_power = 0;
  EXPECT_THROW(s.validate(), DomainError);
}

TEST(Channel, DrawIsDeterministicAndInDomain) {
  ScenarioConfig s;
  Rng a(77), b(77);
  ChannelRealization c1 = draw_channel(s, a), c2 = draw_channel(s, b);
  EXPECT_EQ(c1.doa_alice, c2.doa_alice);
  EXPECT_EQ(c1.gains_jam, c2.gains_jam);
  EXPECT_NO_THROW(c1.validate(s));
  for (auto g : c1.gains_alice) EXPECT_NEAR(std::abs(g), 1.0, 1e-12);
}
