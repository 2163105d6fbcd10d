#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rha/harness.hpp"

using namespace rha;
using namespace rha::harness;

namespace {

ExperimentConfig small() {
  ExperimentConfig c;
  c.scenario.num_antennas = 2;
  c.scenario.elements_per_antenna = 2;
  c.scenario.num_paths_alice = 1;
  c.scenario.num_paths_jam = 1;
  c.trials = 2;
  return c;
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char ch : s) n += ch == '\n';
  return n;
}

}  // namespace

TEST(Config, ParseOverridesAndComments) {
  const ExperimentConfig c = parse_config(
      "# desk scale\n"
      "M = 2\n"
      "elements_per_antenna=4   # trailing comment\n"
      "jam_power_db = 30\n"
      "schemes = rha_nonrobust, ula_equal_elements\n"
      "values = 10,20,30\n"
      "seed = 0x10\n"
      "rho = 0.05\n");
  EXPECT_EQ(c.scenario.num_antennas, 2);
  EXPECT_EQ(c.scenario.elements_per_antenna, 4);
  EXPECT_NEAR(c.scenario.jam_power, 1000.0 * c.scenario.noise_power, 1e-9);
  ASSERT_EQ(c.schemes.size(), 2u);
  EXPECT_EQ(c.schemes[1], "ula_equal_elements");
  EXPECT_EQ(c.values, (std::vector<double>{10, 20, 30}));
  EXPECT_EQ(c.seed, 16u);
  EXPECT_DOUBLE_EQ(c.rho_theta, 0.05);
  EXPECT_DOUBLE_EQ(c.rho_g, 0.05);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_config("colour = blue\n"), DomainError);
  EXPECT_THROW(parse_config("M 2\n"), DomainError);
  EXPECT_THROW(parse_config("trials = many\n"), std::exception);
  ExperimentConfig c = small();
  c.schemes = {"magic"};
  EXPECT_THROW(c.validate(), DomainError);
  c = small();
  c.values.clear();
  EXPECT_THROW(c.validate(), DomainError);
  c = small();
  c.trials = 0;
  EXPECT_THROW(c.validate(), DomainError);
}

TEST(Config, FormatRoundTrips) {
  ExperimentConfig c = small();
  c.values = {12.5, 40};
  c.schemes = {"rha_nonrobust", "ula_equal_aperture"};
  c.rho_theta = 0.02;
  const ExperimentConfig d = parse_config(format_config(c));
  EXPECT_EQ(format_config(d), format_config(c));
}

TEST(FeasibleProbability, CountingOracle) {
  std::vector<TrialRecord> r(100);
  for (int i = 0; i < 100; ++i) {
    r[i].antennas = 4;
    r[i].blocked = i < 30 ? 1 + i % 4 : 0;
  }
  EXPECT_DOUBLE_EQ(feasible_probability(r), 0.7);
  for (auto& x : r) x.blocked = 0;
  EXPECT_DOUBLE_EQ(feasible_probability(r), 1.0);
  r[3].failed = true;
  EXPECT_DOUBLE_EQ(feasible_probability(r), 0.99);
}

TEST(Aggregate, MinNotAboveMean) {
  std::vector<TrialRecord> r(3);
  r[0].sinr = 10;
  r[1].sinr = 100;
  r[2].sinr = 1000;
  const MetricsRow m = aggregate(r, "x", "jam_power_db", 40, false);
  EXPECT_NEAR(m.min_sinr_db, 10.0, 1e-12);
  EXPECT_NEAR(m.mean_sinr_db, 10 * std::log10(370.0), 1e-12);
  EXPECT_LE(m.min_sinr_db, m.mean_sinr_db);
  EXPECT_EQ(m.trials, 3);
}

TEST(Output, EmptyTableIsHeaderOnly) {
  ResultTable t;
  const std::string csv = to_csv(t);
  EXPECT_EQ(csv,
            "scheme,sweep_name,sweep_value,trials,mean_sinr_db,min_sinr_db,feasible_prob,blocked_count,failures,"
            "secs_per_trial\n");
}

TEST(Output, RowCardinalityAndJsonRoundTrip) {
  ExperimentConfig c = small();
  c.schemes = {"rha_nonrobust", "ula_equal_elements"};
  c.values = {10, 30, 50};
  const ResultTable t = run_experiment(c);
  EXPECT_EQ(t.rows.size(), 6u);
  EXPECT_EQ(count_lines(to_csv(t)), 7);
  const std::string j = to_json(t);
  EXPECT_EQ(to_json(table_from_json(j)), j);
  for (const auto& r : t.rows) {
    EXPECT_GE(r.feasible_prob, 0.0);
    EXPECT_LE(r.feasible_prob, 1.0);
    EXPECT_LE(r.min_sinr_db, r.mean_sinr_db + 1e-12);
  }
}

TEST(Output, EmitWritesFileAndReportsPath) {
  ExperimentConfig c = small();
  c.schemes = {"ula_equal_elements"};
  const ResultTable t = run_experiment(c);
  const std::string path = ::testing::TempDir() + "rha_emit.csv";
  emit_results(t, path, "csv");
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), to_csv(t));
  std::remove(path.c_str());
  try {
    emit_results(t, "/nonexistent-dir/x.csv", "csv");
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/x.csv"), std::string::npos);
  }
  EXPECT_THROW(emit_results(t, path, "xml"), DomainError);
}

TEST(Experiment, DeterministicAcrossRunsAndThreads) {
  ExperimentConfig c = small();
  c.schemes = {"rha_robust_discrete", "ula_equal_aperture"};
  c.rho_theta = c.rho_g = 0.02;
  c.trials = 3;
  const std::string a = to_csv(run_experiment(c));
  const std::string b = to_csv(run_experiment(c));
  c.threads = 3;
  const std::string d = to_csv(run_experiment(c));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, d);
}

TEST(Trial, UlaMatchesMvdrOracle) {
  // weak jammer: no element blocks, so the max-SINR combiner over all
  // elements gives P_a h^H R^{-1} h with R = P_j h_j h_j^H + (sigma^2 / n) I
  // (the combiner noise term is sigma^2 |w|^2 / n)
  ExperimentConfig c = small();
  c.scenario.num_paths_alice = 2;
  c.scenario.jam_power = 1.0;
  SweepPoint p;
  p.scenario = c.scenario;
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    const TrialRecord r = run_trial(c, p, "ula_equal_elements", seed);
    array::Rng rng(seed);
    const array::ChannelRealization ch = array::draw_channel(p.scenario, rng);
    const RVec pos = RVec::LinSpaced(4, 0.0, 1.5);
    const CVec ha = array::ula_channel(pos, kTwoPi, ch.doa_alice, ch.gains_alice);
    const CVec hj = array::ula_channel(pos, kTwoPi, ch.doa_jam, ch.gains_jam);
    const CMat R = p.scenario.jam_power * hj * hj.adjoint() + p.scenario.noise_power / 4.0 * CMat::Identity(4, 4);
    const double ref = p.scenario.signal_power * (ha.adjoint() * R.inverse() * ha)(0, 0).real();
    ASSERT_EQ(r.blocked, 0);
    EXPECT_NEAR(r.sinr, ref, 1e-9 * ref);
  }
}

TEST(Trial, NonrobustEqualsRobustAtZeroRadius) {
  ExperimentConfig c = small();
  SweepPoint p;
  p.scenario = c.scenario;
  for (std::uint64_t seed : {1u, 2u}) {
    const auto recs = run_trials(c, p, {"rha_robust_discrete", "rha_nonrobust"}, seed);
    EXPECT_NEAR(recs[0].sinr, recs[1].sinr, 1e-6 * std::max(1.0, recs[1].sinr));
    EXPECT_EQ(recs[0].blocked, recs[1].blocked);
  }
}

TEST(Trial, SingleRowForSinglePoint) {
  ExperimentConfig c = small();
  c.trials = 1;
  c.schemes = {"rha_nonrobust"};
  EXPECT_EQ(run_experiment(c).rows.size(), 1u);
}

TEST(Bootstrap, SeparatedSamplesExcludeZero) {
  std::vector<double> a(50), b(50);
  for (int i = 0; i < 50; ++i) {
    a[i] = 10.0 + 0.1 * (i % 7);
    b[i] = 5.0 + 0.1 * (i % 5);
  }
  const BootstrapInterval ci = bootstrap_mean_difference(a, b, 2000, 0.95, 1);
  EXPECT_GT(ci.low, 0.0);
  EXPECT_LT(ci.low, ci.high);
  EXPECT_THROW(bootstrap_mean_difference(a, {}, 10, 0.95, 1), DimensionError);
}
