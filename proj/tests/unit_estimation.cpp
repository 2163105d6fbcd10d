#include <gtest/gtest.h>

#include <cmath>

#include "rha/estimation.hpp"

using namespace rha;
using namespace rha::est;
using array::ChannelRealization;
using array::Rng;
using array::ScenarioConfig;

namespace {

ScenarioConfig toy(int M = 2, int N = 4) {
  ScenarioConfig s;
  s.num_antennas = M;
  s.elements_per_antenna = N;
  s.num_paths_alice = 1;
  s.num_paths_jam = 1;
  return s;
}

ChannelRealization fixed_channel(const ScenarioConfig& s, Rng& rng, std::vector<double> ta, std::vector<double> tj) {
  ChannelRealization ch = array::draw_channel(s, rng);
  ch.doa_alice = Eigen::Map<RVec>(ta.data(), static_cast<Eigen::Index>(ta.size()));
  ch.doa_jam = Eigen::Map<RVec>(tj.data(), static_cast<Eigen::Index>(tj.size()));
  return ch;
}

// Scalar-loop expansion of one raw observation under pattern p (length N):
// sum_z sqrt(P_z) sum_l (sum_n p_n t_n e^{-jk0 r_n sin th}) e^{-jk0 d_m sin th} g_l x_t
cd brute_obs(const ScenarioConfig& s, const ChannelRealization& ch, const RVec& p, int m, int t) {
  cd acc = 0;
  auto add = [&](const RVec& th, const CVec& g, const CVec& x, double P) {
    for (Eigen::Index l = 0; l < th.size(); ++l) {
      cd pat = 0;
      for (int n = 0; n < s.elements_per_antenna; ++n) {
        double r = n * s.element_spacing;
        cd tn = std::exp(-r * cd(s.waveguide_attenuation, s.waveguide_phase));
        pat += p(n) * tn * std::polar(1.0, -kTwoPi * r * std::sin(th(l)));
      }
      acc += std::sqrt(P) * pat * std::polar(1.0, -kTwoPi * m * s.antenna_spacing * std::sin(th(l))) * g(l) * x(t);
    }
  };
  add(ch.doa_alice, ch.gains_alice, ch.pilots_alice, s.signal_power);
  add(ch.doa_jam, ch.gains_jam, ch.pilots_jam, s.jam_power);
  return acc;
}

}  // namespace

TEST(Hadamard, SmallOrders) {
  EXPECT_EQ(hadamard(1), RMat::Ones(1, 1));
  for (int n : {2, 4, 8, 12, 16, 20, 24, 28, 32, 36, 44, 48}) {
    RMat H = hadamard(n);
    EXPECT_EQ((H.transpose() * H - n * RMat::Identity(n, n)).cwiseAbs().maxCoeff(), 0.0) << n;
    EXPECT_TRUE((H.array().abs() == 1.0).all()) << n;
  }
}

TEST(Hadamard, SylvesterEight) {
  RMat H = hadamard(8);
  EXPECT_EQ(H(0, 0), 1.0);
  EXPECT_TRUE((H.col(0).array() == 1.0).all());
  EXPECT_EQ(H, H.transpose());
}

TEST(Hadamard, UnsupportedOrderNamesNeighbours) {
  try {
    hadamard(6);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("4 and 8"), std::string::npos) << e.what();
  }
  EXPECT_THROW(build_pattern_schedule(8, 4), DomainError);
}

TEST(Snapshots, CoherentBroadsidePath) {
  ScenarioConfig s = toy(3, 4);
  Rng rng(1);
  ChannelRealization ch = fixed_channel(s, rng, {0.0}, {0.4});
  s.jam_power = 1e-300;
  PatternSchedule sch = build_pattern_schedule(4, 4);
  Observations o = collect_snapshots(s, ch, sch, nullptr);
  const cd sum_t = array::waveguide_taps(s).sum();
  for (int m = 0; m < 3; ++m)
    for (int t = 0; t < s.pilot_length; ++t)
      EXPECT_NEAR(std::abs(o.Y[0](m, t) - std::sqrt(s.signal_power) * sum_t * ch.gains_alice(0) * ch.pilots_alice(t)),
                  0.0, 1e-9);
}

TEST(Snapshots, NoiseOnlyVariance) {
  ScenarioConfig s = toy(1, 4);
  s.signal_power = s.jam_power = 1e-300;
  s.noise_power = 2.0;
  s.pilot_length = 2500;
  Rng rng(2);
  ChannelRealization ch = array::draw_channel(s, rng);
  Observations o = collect_snapshots(s, ch, build_pattern_schedule(4, 4), &rng);
  double acc = 0;
  int n = 0;
  for (const CMat& Y : o.Y)
    for (Eigen::Index i = 0; i < Y.size(); ++i, ++n) acc += std::norm(Y(i));
  ASSERT_EQ(n, 10000);
  EXPECT_NEAR(acc / n, 2.0, 0.1);
}

TEST(Snapshots, MatchesDirectExpansion) {
  Rng rng(3);
  ScenarioConfig s = toy(2, 4);
  s.num_paths_alice = 2;
  s.num_paths_jam = 2;
  ChannelRealization ch = array::draw_channel(s, rng);
  PatternSchedule sch = build_pattern_schedule(4, 4);
  Observations o = collect_snapshots(s, ch, sch, nullptr);
  for (int k = 0; k < 4; ++k)
    for (int m = 0; m < 2; ++m)
      for (int t = 0; t < s.pilot_length; ++t) {
        cd ref = brute_obs(s, ch, sch.patterns.col(k), m, t);
        EXPECT_NEAR(std::abs(o.Y[k](m, t) - ref), 0.0, 1e-10 * std::max(1.0, std::abs(ref)));
      }
}

TEST(VirtualAntennas, SingleSnapshotIsIdentity) {
  ScenarioConfig s = toy(2, 1);
  Rng rng(4);
  ChannelRealization ch = array::draw_channel(s, rng);
  PatternSchedule sch = build_pattern_schedule(1, 1);
  Observations o = collect_snapshots(s, ch, sch, &rng);
  VirtualArrayData v = combine_virtual_antennas(s, o, sch);
  EXPECT_NEAR((v.samples - o.Y[0]).norm(), 0.0, 1e-15);
}

TEST(VirtualAntennas, ClosedFormNoiseFree) {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    ScenarioConfig s = toy(2, 4);
    s.num_paths_alice = 2;
    ChannelRealization ch = array::draw_channel(s, rng);
    PatternSchedule sch = build_pattern_schedule(4, 4);
    VirtualArrayData v = combine_virtual_antennas(s, collect_snapshots(s, ch, sch, nullptr), sch);
    const CVec t = array::waveguide_taps(s);
    for (int m = 0; m < 2; ++m)
      for (int i = 0; i < 4; ++i)
        for (int tt = 0; tt < s.pilot_length; ++tt) {
          cd ref = 0;
          for (int l = 0; l < 2; ++l)
            ref += std::sqrt(s.signal_power) * 4.0 * t(i) *
                   std::polar(1.0, -kTwoPi * (m * s.antenna_spacing + i * s.element_spacing) * std::sin(ch.doa_alice(l))) *
                   ch.gains_alice(l) * ch.pilots_alice(tt);
          ref += std::sqrt(s.jam_power) * 4.0 * t(i) *
                 std::polar(1.0, -kTwoPi * (m * s.antenna_spacing + i * s.element_spacing) * std::sin(ch.doa_jam(0))) *
                 ch.gains_jam(0) * ch.pilots_jam(tt);
          EXPECT_NEAR(std::abs(v.samples(m * 4 + i, tt) - ref), 0.0, 1e-9 * std::max(1.0, std::abs(ref)));
        }
  }
}

TEST(VirtualAntennas, HadamardSelectionProperty) {
  ScenarioConfig s = toy(1, 8);
  PatternSchedule sch = build_pattern_schedule(8, 8);
  const CVec t = array::waveguide_taps(s);
  for (double th : {-1.2, -0.3, 0.0, 0.7}) {
    CVec d = array::steering_vector(th, s.element_positions(), s.k0());
    for (int i = 0; i < 8; ++i) {
      cd acc = 0;
      for (int k = 0; k < 8; ++k) acc += sch.H(i, k) * (sch.patterns.col(k).cast<cd>().dot(t.cwiseProduct(d)));
      EXPECT_NEAR(std::abs(acc - 8.0 * t(i) * d(i)), 0.0, 1e-12);
    }
  }
}

TEST(Anm, ZeroData) {
  AnmInput in;
  in.S = CMat::Zero(6, 1);
  in.observed.assign(6, true);
  AnmSolution a = solve_anm(in);
  ASSERT_EQ(a.status, conic::SolveStatus::optimal);
  EXPECT_LT(a.u.norm(), 1e-6);
  EXPECT_LT(a.Z.norm(), 1e-6);
  EXPECT_NEAR(a.objective, 0.0, 1e-6);
}

TEST(Anm, SingleAtomExact) {
  const int G = 14;
  const double f0 = 0.137;
  AnmInput in;
  in.S = grid_atom(f0, G) * cd(1.3, -0.4);
  in.observed.assign(G, true);
  for (int g : {4, 5, 6, 7, 8, 9}) in.observed[g] = false;  // M = 2, N = 4 gap
  AnmSolution a = solve_anm(in);
  ASSERT_EQ(a.status, conic::SolveStatus::optimal);
  EXPECT_GE(a.min_block_eigenvalue, -1e-7 * a.T.norm());
  Eigen::SelfAdjointEigenSolver<CMat> es(a.T);
  EXPECT_LT(es.eigenvalues()(G - 2), 1e-6 * es.eigenvalues()(G - 1));
  DoaResult d = extract_frequencies(a.T, 4);
  ASSERT_EQ(d.frequencies.size(), 1u);
  EXPECT_NEAR(d.frequencies[0], f0, 1e-4);
  // single atom c a(f): the optimum is 2 |c| sqrt(G)
  EXPECT_NEAR(a.objective, 2 * std::abs(cd(1.3, -0.4)) * std::sqrt(double(G)), 1e-5 * a.objective);
}

TEST(Anm, LocalOptimalitySmoke) {
  const int G = 10;
  AnmInput in;
  in.S = grid_atom(0.1, G) * 2.0 + grid_atom(-0.23, G) * cd(0, 1);
  in.observed.assign(G, true);
  AnmSolution a = solve_anm(in);
  ASSERT_EQ(a.status, conic::SolveStatus::optimal);
  // random perturbations made feasible by the smallest diagonal shift never do better
  Rng rng(1);
  std::normal_distribution<double> g;
  const int r = 1, n = r + G;
  for (int trial = 0; trial < 200; ++trial) {
    const double eps = trial < 100 ? 1e-4 : 1e-2;
    CVec du(G);
    for (auto& x : du) x = cd(g(rng), g(rng));
    du(0) = du(0).real();
    CVec u = a.u + eps * du;
    CMat Z = a.Z + eps * CMat::Constant(1, 1, g(rng));
    CMat T = toeplitz_hermitian(u);
    CMat B(n, n);
    B << Z, a.X.adjoint(), a.X, T;
    Eigen::SelfAdjointEigenSolver<CMat> es(B, Eigen::EigenvaluesOnly);
    const double shift = std::max(0.0, -es.eigenvalues()(0));
    const double obj = Z.trace().real() + T.trace().real() + shift * n;
    EXPECT_GE(obj, a.objective * (1 - 1e-6));
  }
  // atomic norm of a two-atom signal is at most the sum of amplitudes times sqrt(G)
  EXPECT_LE(0.5 * a.objective, (2.0 + 1.0) * std::sqrt(double(G)) + 1e-5);
  DoaResult d = extract_frequencies(a.T, 4);
  ASSERT_EQ(d.frequencies.size(), 2u);
  EXPECT_NEAR(d.frequencies[0], -0.23, 1e-4);
  EXPECT_NEAR(d.frequencies[1], 0.1, 1e-4);
}

TEST(Doa, RankOneToeplitz) {
  const double th0 = 0.52;
  const int G = 12;
  CVec a = grid_atom(0.25 * std::sin(th0), G);
  std::vector<double> th;
  AnmSolution fake;
  fake.T = a * a.adjoint();
  DoaResult d = extract_doa(fake, 3, 0.25, &th);
  ASSERT_EQ(th.size(), 1u);
  EXPECT_NEAR(th[0], th0, 1e-3);
  EXPECT_FALSE(d.truncated);
}

TEST(Doa, WhiteSpectrumIsEmpty) {
  DoaResult d = extract_frequencies(CMat::Identity(8, 8), 3);
  EXPECT_TRUE(d.frequencies.empty());
  EXPECT_TRUE(d.no_peaks);
}

TEST(Doa, ThreePathVandermonde) {
  const int G = 16;
  std::vector<double> th0 = {-0.9, 0.05, 0.8};
  CMat T = CMat::Zero(G, G);
  double p = 1.0;
  for (double t : th0) {
    CVec a = grid_atom(0.25 * std::sin(t), G);
    T += p * a * a.adjoint();
    p *= 1.7;
  }
  std::vector<double> th = frequencies_to_angles(extract_frequencies(T, 5).frequencies, 0.25);
  ASSERT_EQ(th.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(th[i], th0[i], 1e-3);
}

TEST(Doa, OrderAboveMaxPathsIsTruncated) {
  const int G = 16;
  CMat T = CMat::Zero(G, G);
  for (double f : {-0.3, -0.1, 0.1, 0.3}) {
    CVec a = grid_atom(f, G);
    T += a * a.adjoint();
  }
  DoaResult d = extract_frequencies(T, 2);
  EXPECT_TRUE(d.truncated);
  EXPECT_EQ(d.order, 4);
  EXPECT_EQ(d.frequencies.size(), 2u);
}

TEST(Classify, OrthogonalPilotsPerfect) {
  ScenarioConfig s = toy(2, 4);
  s.pilot_length = 8;
  Rng rng(7);
  ChannelRealization ch = fixed_channel(s, rng, {-0.6}, {0.5});
  RMat H = hadamard(8);
  ch.pilots_alice = H.col(1).cast<cd>();
  ch.pilots_jam = H.col(2).cast<cd>();
  PatternSchedule sch = build_pattern_schedule(4, 4);
  VirtualArrayData v = combine_virtual_antennas(s, collect_snapshots(s, ch, sch, nullptr), sch);
  Classification c = classify_paths({-0.6, 0.5}, s, v, ch.pilots_alice, ch.pilots_jam);
  ASSERT_EQ(c.alice.size(), 1u);
  ASSERT_EQ(c.jam.size(), 1u);
  EXPECT_EQ(c.alice[0], -0.6);
  EXPECT_EQ(c.jam[0], 0.5);
}

TEST(Classify, SinglePathGoesToHigherCorrelation) {
  ScenarioConfig s = toy(2, 4);
  Rng rng(8);
  ChannelRealization ch = fixed_channel(s, rng, {0.2}, {-0.7});
  s.jam_power = 1e-300;
  PatternSchedule sch = build_pattern_schedule(4, 4);
  VirtualArrayData v = combine_virtual_antennas(s, collect_snapshots(s, ch, sch, nullptr), sch);
  Classification c = classify_paths({0.2}, s, v, ch.pilots_alice, ch.pilots_jam);
  EXPECT_EQ(c.alice.size(), 1u);
  EXPECT_GT(c.corr_alice[0], c.corr_jam[0]);
}

TEST(Csi, ExactAnglesRecoverGains) {
  ScenarioConfig s = toy(2, 4);
  s.num_paths_alice = 2;
  Rng rng(9);
  ChannelRealization ch = fixed_channel(s, rng, {-0.4, 0.3}, {0.9});
  PatternSchedule sch = build_pattern_schedule(4, 4);
  VirtualArrayData v = combine_virtual_antennas(s, collect_snapshots(s, ch, sch, nullptr), sch);
  CsiEstimate e = estimate_csi({-0.4, 0.3}, {0.9}, s, v, ch.pilots_alice, ch.pilots_jam);
  EXPECT_FALSE(e.regularized);
  EXPECT_LT(e.residual, 1e-9);
  EXPECT_LT((e.gains_alice - ch.gains_alice).norm(), 1e-9);
  EXPECT_LT((e.gains_jam - ch.gains_jam).norm(), 1e-9);
}

TEST(Csi, DuplicateAnglesRegularized) {
  ScenarioConfig s = toy(2, 4);
  Rng rng(10);
  ChannelRealization ch = fixed_channel(s, rng, {0.1}, {0.6});
  PatternSchedule sch = build_pattern_schedule(4, 4);
  VirtualArrayData v = combine_virtual_antennas(s, collect_snapshots(s, ch, sch, nullptr), sch);
  CsiEstimate e = estimate_csi({0.1, 0.1}, {0.6}, s, v, ch.pilots_alice, ch.pilots_jam);
  EXPECT_TRUE(e.regularized);
}

TEST(Calibrate, ZeroNoiseAndFallback) {
  std::vector<CalibrationSample> z(40, CalibrationSample{0.0, 0.0, 1.0});
  ErrorRadii r = calibrate_error_radii(z);
  EXPECT_LE(r.angle, 1e-6);
  EXPECT_LE(r.gain, 1e-6);
  EXPECT_FALSE(r.fallback);
  std::vector<CalibrationSample> few(5, CalibrationSample{0.5, 0.5, 2.0});
  r = calibrate_error_radii(few);
  EXPECT_TRUE(r.fallback);
  EXPECT_DOUBLE_EQ(r.angle, 0.1);
  EXPECT_DOUBLE_EQ(r.gain, 0.1);
  EXPECT_DOUBLE_EQ(r.sigma, 2.0);
}

TEST(Calibrate, UniformPercentile) {
  Rng rng(12);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  std::vector<CalibrationSample> t;
  for (int i = 0; i < 4000; ++i) t.push_back({u(rng), u(rng), 1.0});
  ErrorRadii r = calibrate_error_radii(t);
  EXPECT_NEAR(r.angle, 0.19, 0.01);
  EXPECT_NEAR(r.gain, 0.19, 0.01);
}

TEST(Pipeline, NoiseFreeRecoversChannel) {
  ScenarioConfig s = toy(2, 4);
  Rng rng(13);
  ChannelRealization ch = fixed_channel(s, rng, {-0.5}, {0.45});
  EstimationResult e = estimate_channel(s, ch, nullptr);
  ASSERT_EQ(e.angles_alice.size(), 1);
  ASSERT_EQ(e.angles_jam.size(), 1);
  EXPECT_NEAR(e.angles_alice(0), -0.5, 1e-4);
  EXPECT_NEAR(e.angles_jam(0), 0.45, 1e-4);
  EXPECT_LT(std::abs(e.gains_alice(0) - ch.gains_alice(0)), 1e-3);
  EXPECT_LT(std::abs(e.gains_jam(0) - ch.gains_jam(0)), 1e-3);
}

TEST(Pipeline, JsonRoundTrip) {
  EstimationResult r;
  r.angles_alice = RVec::LinSpaced(2, -0.3, 0.2);
  r.gains_alice = CVec::Constant(2, cd(0.5, -1.5));
  r.angles_jam = RVec::Constant(1, 0.9);
  r.gains_jam = CVec::Constant(1, cd(-2, 0.25));
  r.radii_alice.angle = 0.05;
  r.radii_jam.sigma = 3.0;
  EstimationResult b = estimation_from_json(to_json(r));
  EXPECT_LT((b.angles_alice - r.angles_alice).norm(), 1e-14);
  EXPECT_EQ(b.gains_alice, r.gains_alice);
  EXPECT_EQ(b.gains_jam, r.gains_jam);
  EXPECT_DOUBLE_EQ(b.radii_alice.angle, 0.05);
  EXPECT_DOUBLE_EQ(b.radii_jam.sigma, 3.0);
  EXPECT_THROW(estimation_from_json("{]"), DomainError);
}
