#include "rha/invariants.hpp"

#include <algorithm>
#include <cmath>

#include "rha/estimation.hpp"
#include "rha/harness.hpp"
#include "rha/robust.hpp"

namespace rha::check {

namespace {

CVec unit_phases(Eigen::Index n, array::Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  CVec v(n);
  for (auto& x : v) x = std::polar(1.0, u(rng));
  return v;
}

InvariantResult make(std::string name, double value, double tol, std::string detail = {}) {
  InvariantResult r;
  r.name = std::move(name);
  r.value = value;
  r.tolerance = tol;
  r.pass = value <= tol;
  r.detail = std::move(detail);
  return r;
}

// per-antenna SINR evaluation against the stacked quadratic form
InvariantResult model_equivalence(array::Rng& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    array::ScenarioConfig s;
    s.num_antennas = 2 + rep % 3;
    s.elements_per_antenna = 2 + rep % 5;
    const array::ChannelRealization ch = array::draw_channel(s, rng);
    array::RhaConfiguration c;
    c.phase_shifts.resize(s.num_antennas, s.elements_per_antenna);
    for (int m = 0; m < s.num_antennas; ++m) c.phase_shifts.row(m) = unit_phases(s.elements_per_antenna, rng).transpose();
    c.weights = unit_phases(s.num_antennas, rng);
    const double a = array::received_sinr(s, ch, c).linear;
    const double b = array::received_sinr_stacked(s, ch, c.stacked()).linear;
    worst = std::max(worst, std::abs(a - b) / std::max(std::abs(a), 1e-300));
  }
  return make("sinr_stacked_form", worst, 1e-9, "100 random instances, relative error");
}

// Noise-free virtual antennas equal K_r t_i times the element response.
InvariantResult virtual_antennas(array::Rng& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    array::ScenarioConfig s;
    s.num_antennas = 2;
    s.elements_per_antenna = 4;
    s.num_paths_alice = 2;
    s.num_paths_jam = 1;
    const array::ChannelRealization ch = array::draw_channel(s, rng);
    const est::PatternSchedule sch = est::build_pattern_schedule(4, 4);
    const est::VirtualArrayData v =
        est::combine_virtual_antennas(s, est::collect_snapshots(s, ch, sch, nullptr), sch);
    const CVec t = array::waveguide_taps(s);
    for (int m = 0; m < 2; ++m)
      for (int i = 0; i < 4; ++i) {
        const double pos = m * s.antenna_spacing + i * s.element_spacing;
        for (int tt = 0; tt < s.pilot_length; ++tt) {
          cd ref = 0;
          auto add = [&](const RVec& th, const CVec& g, const CVec& x, double P) {
            for (Eigen::Index l = 0; l < th.size(); ++l)
              ref += std::sqrt(P) * 4.0 * t(i) * std::polar(1.0, -s.k0() * pos * std::sin(th(l))) * g(l) * x(tt);
          };
          add(ch.doa_alice, ch.gains_alice, ch.pilots_alice, s.signal_power);
          add(ch.doa_jam, ch.gains_jam, ch.pilots_jam, s.jam_power);
          worst = std::max(worst, std::abs(v.samples(m * 4 + i, tt) - ref) / std::max(1.0, std::abs(ref)));
        }
      }
  }
  return make("virtual_antenna_identity", worst, 1e-9, "20 noise-free scenarios");
}

InvariantResult gamma_max_formula() {
  array::ScenarioConfig s;  // M = 4, N = 8, L_a = 4, P_a / sigma^2 = 100
  const double got = array::gamma_upper_bound(s);
  return make("gamma_max_formula", std::abs(got - 1.6384e6), 0.0, "default scenario gives 1.6384e6");
}

// run the actual bisection on a small zero-radius model and compare its
// iteration count with ceil(log2(gamma_max / kappa))
InvariantResult bisection_count(array::Rng& rng) {
  array::ScenarioConfig s;
  s.num_antennas = 2;
  s.elements_per_antenna = 2;
  s.num_paths_alice = 1;
  s.num_paths_jam = 1;
  const array::ChannelRealization ch = array::draw_channel(s, rng);
  const robust::StackedModel m =
      robust::build_stacked_model(s, ch.doa_alice, ch.gains_alice, ch.doa_jam, ch.gains_jam);
  const double gmax = array::gamma_upper_bound(s);
  int worst = 0;
  for (double rel : {0.5, 0.1, 0.01}) {
    const robust::BisectionResult r = robust::bisection_search(m, robust::ErrorBalls{}, rel * gmax);
    worst = std::max(worst, std::abs(r.iterations - robust::expected_bisection_iterations(gmax, rel * gmax)));
  }
  return make("bisection_iteration_count", worst, 1.0, "ceil(log2(gamma_max / kappa)) +- 1");
}

InvariantResult discretization_monotone(array::Rng& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int M = 2 + rep % 3, N = 2 + rep % 4;
    const robust::DiscreteResult d = robust::discretize(unit_phases(M * N, rng), M, N, 3);
    for (std::size_t k = 1; k < d.trace.size(); ++k) worst = std::max(worst, d.trace[k - 1] - d.trace[k]);
  }
  return make("discretization_monotone", worst, 1e-12, "largest decrease of the objective trace");
}

InvariantResult determinism() {
  harness::ExperimentConfig c;
  c.scenario.num_antennas = 2;
  c.scenario.elements_per_antenna = 2;
  c.scenario.num_paths_alice = 1;
  c.scenario.num_paths_jam = 1;
  c.schemes = {"rha_nonrobust", "ula_equal_elements"};
  c.values = {20.0, 40.0};
  c.trials = 3;
  const std::string a = harness::to_json(harness::run_experiment(c));
  const std::string b = harness::to_json(harness::run_experiment(c));
  return make("determinism", a == b ? 0.0 : 1.0, 0.0, "two identical runs, JSON compared byte for byte");
}

}  // namespace

std::vector<InvariantResult> run_invariants(std::uint64_t seed) {
  array::Rng rng(seed);
  std::vector<InvariantResult> out;
  out.push_back(model_equivalence(rng));
  out.push_back(virtual_antennas(rng));
  out.push_back(gamma_max_formula());
  out.push_back(bisection_count(rng));
  out.push_back(discretization_monotone(rng));
  out.push_back(determinism());
  return out;
}

}  // namespace rha::check
