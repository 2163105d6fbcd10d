#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rha/estimation.hpp"
#include "rha/harness.hpp"
#include "rha/invariants.hpp"
#include "rha/robust.hpp"

using namespace rha;

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("RHA_SEED")) {
    try {
      return std::stoull(env, nullptr, 0);
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring malformed RHA_SEED='" << env << "'\n";
    }
  }
  return 1;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

struct Common {
  std::string config;
  std::vector<std::string> set;
  std::uint64_t seed = default_seed();
  std::string out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "key = value configuration file")->check(CLI::ExistingFile);
  app->add_option("--set", c.set, "extra key=value override (repeatable)");
  app->add_option("--seed", c.seed, "base seed (default: $RHA_SEED or 1)");
  app->add_option("--out", c.out, "output path ('-' or empty for stdout)");
}

harness::ExperimentConfig base_config(const Common& c) {
  harness::ExperimentConfig cfg;
  if (!c.config.empty()) cfg = harness::load_config(c.config, cfg);
  for (const auto& kv : c.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value, got '" + kv + "'");
    harness::set_option(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.seed = c.seed;
  return cfg;
}

void progress(const std::string& line) { std::cerr << line << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RHA anti-jamming simulator"};
  app.require_subcommand(1);

  Common sim_common;
  std::string trials, sweep, values, schemes, threads, format = "csv";
  bool timing = false, quiet = false;
  auto* sim = app.add_subcommand("simulate", "run a Monte Carlo sweep and emit the metrics table");
  add_common(sim, sim_common);
  sim->add_option("--trials", trials, "trials per sweep point");
  sim->add_option("--sweep", sweep, "sweep axis");
  sim->add_option("--values", values, "comma-separated sweep values");
  sim->add_option("--schemes", schemes, "comma-separated schemes");
  sim->add_option("--threads", threads, "worker threads");
  sim->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  sim->add_flag("--timing", timing, "fill secs_per_trial (makes output run-dependent)");
  sim->add_flag("--quiet", quiet, "no progress on stderr");

  Common est_common;
  auto* est_cmd = app.add_subcommand("estimate", "draw one channel, run the estimation pipeline, print JSON");
  add_common(est_cmd, est_common);

  Common bf_common;
  std::string input;
  bool continuous = false;
  auto* bf = app.add_subcommand("beamform", "robust beamformer from an estimation JSON");
  add_common(bf, bf_common);
  bf->add_option("--in", input, "estimation result JSON")->required()->check(CLI::ExistingFile);
  bf->add_flag("--continuous", continuous, "skip the discrete projection");

  std::uint64_t validate_seed = default_seed();
  auto* val = app.add_subcommand("validate", "run the invariant self-checks");
  val->add_option("--seed", validate_seed, "seed of the random instances");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      harness::ExperimentConfig cfg = base_config(sim_common);
      if (!trials.empty()) harness::set_option(cfg, "trials", trials);
      if (!sweep.empty()) harness::set_option(cfg, "sweep", sweep);
      if (!values.empty()) harness::set_option(cfg, "values", values);
      if (!schemes.empty()) harness::set_option(cfg, "schemes", schemes);
      if (!threads.empty()) harness::set_option(cfg, "threads", threads);
      if (timing) cfg.timing = true;
      cfg.validate();
      const harness::ResultTable t = harness::run_experiment(cfg, quiet ? nullptr : progress);
      if (sim_common.out.empty() || sim_common.out == "-")
        std::cout << (format == "csv" ? harness::to_csv(t) : harness::to_json(t));
      else
        harness::emit_results(t, sim_common.out, format);
    } else if (*est_cmd) {
      const harness::ExperimentConfig cfg = base_config(est_common);
      cfg.scenario.validate();
      array::Rng rng(cfg.seed);
      const array::ChannelRealization ch = array::draw_channel(cfg.scenario, rng);
      const est::EstimationResult r = est::estimate_channel(cfg.scenario, ch, &rng);
      write_text(est_common.out, est::to_json(r));
    } else if (*bf) {
      const harness::ExperimentConfig cfg = base_config(bf_common);
      cfg.scenario.validate();
      const est::EstimationResult e = est::estimation_from_json(read_file(input));
      robust::RobustParams p;
      p.kappa_relative = cfg.kappa_relative;
      p.rank1.samples = cfg.randomization_samples;
      p.feasibility.lmi.csi_ball = cfg.csi_ball;
      p.discretize = !continuous;
      p.seed = cfg.seed;
      const robust::BeamformerSolution sol = robust::solve_robust(cfg.scenario, e, p);
      for (const auto& w : sol.warnings) std::cerr << "warning: " << w << '\n';
      write_text(bf_common.out, robust::to_json(sol, cfg.scenario.control_bits));
    } else if (*val) {
      bool ok = true;
      for (const auto& r : check::run_invariants(validate_seed)) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "  value=" << r.value << " tol=" << r.tolerance
                  << "  (" << r.detail << ")\n";
        ok = ok && r.pass;
      }
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
