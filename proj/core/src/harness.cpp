#include "rha/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace rha::harness {

const std::vector<std::string>& scheme_names() {
  static const std::vector<std::string> names = {"rha_robust_discrete", "rha_robust_continuous", "rha_nonrobust",
                                                 "rha_csi_only_robust", "ula_equal_elements", "ula_equal_aperture"};
  return names;
}

const std::vector<std::string>& sweep_names() {
  static const std::vector<std::string> names = {"jam_power_db", "N",         "M",
                                                 "num_paths",    "rho_g",     "rho_theta",
                                                 "jam_power_with_estimation"};
  return names;
}

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (trim(v.substr(pos)).empty()) return x;
  } catch (const std::exception&) {
  }
  throw DomainError("option " + key + ": '" + v + "' is not a number");
}

long long to_int(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != std::floor(x)) throw DomainError("option " + key + ": '" + v + "' is not an integer");
  return static_cast<long long>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw DomainError("option " + key + ": '" + v + "' is not a boolean");
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

RVec real_ball(array::Rng& rng, int n, double rho) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RVec x(n);
  for (int i = 0; i < n; ++i) x(i) = g(rng);
  const double r = rho * std::pow(u(rng), 1.0 / n);
  return x.norm() > 0 ? RVec(x * (r / x.norm())) : RVec(RVec::Zero(n));
}

CVec complex_ball(array::Rng& rng, int n, double rho) {
  const RVec x = real_ball(rng, 2 * n, rho);
  CVec z(n);
  for (int i = 0; i < n; ++i) z(i) = cd(x(2 * i), x(2 * i + 1));
  return z;
}

struct Estimate {
  RVec ta, tj;
  CVec ga, gj;
};

// Evaluate per-antenna responses on the true channel.
TrialRecord evaluate_rha(const array::ScenarioConfig& s, const array::ChannelRealization& ch, const CVec& v) {
  const CVec ca = array::stacked_channel(s, ch.doa_alice, ch.gains_alice);
  const CVec cj = array::stacked_channel(s, ch.doa_jam, ch.gains_jam);
  const int M = s.num_antennas, N = s.elements_per_antenna;
  CVec ha(M), hj(M);
  for (int m = 0; m < M; ++m) {
    ha(m) = v.segment(m * N, N).dot(ca.segment(m * N, N));
    hj(m) = v.segment(m * N, N).dot(cj.segment(m * N, N));
  }
  TrialRecord r;
  r.antennas = M;
  r.margins.resize(M);
  std::vector<bool> lost(M, false);
  const double xi = s.xi();
  for (int m = 0; m < M; ++m) {
    const double sp = xi * s.signal_power * std::norm(ha(m)), jp = s.jam_power * std::norm(hj(m));
    r.margins(m) = sp + jp > 0 ? (sp - jp) / (sp + jp) : 0.0;
    lost[m] = sp < jp;
    r.blocked += lost[m] ? 1 : 0;
  }
  r.sinr = array::combiner_sinr(CVec::Ones(M), ha, hj, s.signal_power, s.jam_power, s.noise_power, &lost).linear;
  return r;
}

// Omnidirectional array: every element has its own ADC; max-SINR weights
// from the estimated channel over the elements that are not blocked.
TrialRecord evaluate_ula(const array::ScenarioConfig& s, const array::ChannelRealization& ch, const Estimate& e,
                         const RVec& pos, double amplitude) {
  const double k0 = s.k0();
  const CVec ha = array::ula_channel(pos, k0, ch.doa_alice, ch.gains_alice, amplitude);
  const CVec hj = array::ula_channel(pos, k0, ch.doa_jam, ch.gains_jam, amplitude);
  const CVec ea = array::ula_channel(pos, k0, e.ta, e.ga, amplitude);
  const CVec ej = array::ula_channel(pos, k0, e.tj, e.gj, amplitude);
  const int n = static_cast<int>(pos.size());
  TrialRecord r;
  r.antennas = n;
  r.margins.resize(n);
  std::vector<bool> lost(n, false);
  std::vector<int> keep;
  const double xi = s.xi();
  for (int i = 0; i < n; ++i) {
    const double sp = xi * s.signal_power * std::norm(ha(i)), jp = s.jam_power * std::norm(hj(i));
    r.margins(i) = sp + jp > 0 ? (sp - jp) / (sp + jp) : 0.0;
    lost[i] = sp < jp;
    if (lost[i])
      ++r.blocked;
    else
      keep.push_back(i);
  }
  CVec w = CVec::Zero(n);
  if (!keep.empty()) {
    const int k = static_cast<int>(keep.size());
    CVec a(k), j(k);
    for (int i = 0; i < k; ++i) {
      a(i) = ea(keep[i]);
      j(i) = ej(keep[i]);
    }
    // max-SINR weight for the combiner metric, whose noise term is sigma^2 |w|^2 / n
    const CMat R = s.jam_power * j * j.adjoint() + (s.noise_power / n) * CMat::Identity(k, k);
    const CVec wk = R.ldlt().solve(a);
    for (int i = 0; i < k; ++i) w(keep[i]) = wk(i);
  }
  r.sinr = w.squaredNorm() > 0
               ? array::combiner_sinr(w, ha, hj, s.signal_power, s.jam_power, s.noise_power, &lost).linear
               : 0.0;
  return r;
}

}  // namespace

void ExperimentConfig::validate() const {
  scenario.validate();
  if (!(rho_theta >= 0) || !(rho_g >= 0) || !(gain_sigma >= 0)) throw DomainError("error radii must be nonnegative");
  if (!contains(sweep_names(), sweep)) throw DomainError("unknown sweep axis '" + sweep + "'");
  if (values.empty()) throw DomainError("sweep values must not be empty");
  if (schemes.empty()) throw DomainError("scheme list must not be empty");
  for (const auto& s : schemes)
    if (!contains(scheme_names(), s)) throw DomainError("unknown scheme '" + s + "'");
  if (trials < 1) throw DomainError("trials must be at least 1");
  if (threads < 1) throw DomainError("threads must be at least 1");
  if (!(kappa_relative > 0) || kappa_relative >= 1) throw DomainError("kappa_relative must be in (0, 1)");
  if (randomization_samples < 0) throw DomainError("randomization_samples must be nonnegative");
  if (!(ula_spacing > 0)) throw DomainError("ula_spacing must be positive");
}

void set_option(ExperimentConfig& c, const std::string& key_in, const std::string& value_in) {
  const std::string key = trim(key_in), v = trim(value_in);
  array::ScenarioConfig& s = c.scenario;
  auto i = [&] { return static_cast<int>(to_int(key, v)); };
  auto d = [&] { return to_double(key, v); };
  if (key == "num_antennas" || key == "M") s.num_antennas = i();
  else if (key == "elements_per_antenna" || key == "N") s.elements_per_antenna = i();
  else if (key == "antenna_spacing") s.antenna_spacing = d();
  else if (key == "element_spacing") s.element_spacing = d();
  else if (key == "wavelength") s.wavelength = d();
  else if (key == "waveguide_attenuation") s.waveguide_attenuation = d();
  else if (key == "waveguide_phase") s.waveguide_phase = d();
  else if (key == "control_bits") s.control_bits = i();
  else if (key == "adc_bits") s.adc_bits = i();
  else if (key == "adc_fullscale") s.adc_fullscale = d();
  else if (key == "lna_gain") s.lna_gain = d();
  else if (key == "signal_power") s.signal_power = d();
  else if (key == "jam_power") s.jam_power = d();
  else if (key == "noise_power") s.noise_power = d();
  else if (key == "signal_power_db") s.signal_power = s.noise_power * from_db(d());
  else if (key == "jam_power_db") s.jam_power = s.noise_power * from_db(d());
  else if (key == "num_paths_alice") s.num_paths_alice = i();
  else if (key == "num_paths_jam") s.num_paths_jam = i();
  else if (key == "num_paths") s.num_paths_alice = s.num_paths_jam = i();
  else if (key == "blocking_ratio") {
    if (v == "default" || v.empty()) s.blocking_ratio.reset();
    else s.blocking_ratio = d();
  } else if (key == "coupling_efficiency") s.coupling_efficiency = d();
  else if (key == "gain_model") {
    if (v == "fixed_magnitude") s.gain_model = array::GainModel::fixed_magnitude;
    else if (v == "rayleigh") s.gain_model = array::GainModel::rayleigh;
    else throw DomainError("option gain_model: expected fixed_magnitude or rayleigh");
  } else if (key == "pilot_length") s.pilot_length = i();
  else if (key == "rho_theta") c.rho_theta = d();
  else if (key == "rho_g") c.rho_g = d();
  else if (key == "rho") c.rho_theta = c.rho_g = d();
  else if (key == "gain_sigma") c.gain_sigma = d();
  else if (key == "sweep") c.sweep = v;
  else if (key == "values") {
    c.values.clear();
    for (const auto& x : split_list(v)) c.values.push_back(to_double(key, x));
  } else if (key == "schemes") c.schemes = split_list(v);
  else if (key == "trials") c.trials = i();
  else if (key == "seed") {
    try {
      std::size_t pos = 0;
      c.seed = std::stoull(v, &pos, 0);
      if (pos != v.size()) throw DomainError("");
    } catch (const std::exception&) {
      throw DomainError("option seed: '" + v + "' is not an unsigned integer");
    }
  } else if (key == "threads") c.threads = i();
  else if (key == "timing") c.timing = to_bool(key, v);
  else if (key == "kappa_relative") c.kappa_relative = d();
  else if (key == "randomization_samples") c.randomization_samples = i();
  else if (key == "csi_ball") {
    if (v == "stacked") c.csi_ball = robust::CsiBall::stacked;
    else if (v == "per_path") c.csi_ball = robust::CsiBall::per_path;
    else throw DomainError("option csi_ball: expected stacked or per_path");
  } else if (key == "ula_spacing") c.ula_spacing = d();
  else throw DomainError("unknown option '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text, const ExperimentConfig& base) {
  ExperimentConfig c = base;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DomainError("config line " + std::to_string(lineno) + ": expected key = value");
    try {
      set_option(c, line.substr(0, eq), line.substr(eq + 1));
    } catch (const DomainError& e) {
      throw DomainError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path, const ExperimentConfig& base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

namespace {

std::vector<std::pair<std::string, std::string>> config_items(const ExperimentConfig& c) {
  const array::ScenarioConfig& s = c.scenario;
  std::vector<std::string> vals;
  for (double x : c.values) vals.push_back(num(x));
  return {
      {"num_antennas", std::to_string(s.num_antennas)},
      {"elements_per_antenna", std::to_string(s.elements_per_antenna)},
      {"antenna_spacing", num(s.antenna_spacing)},
      {"element_spacing", num(s.element_spacing)},
      {"wavelength", num(s.wavelength)},
      {"waveguide_attenuation", num(s.waveguide_attenuation)},
      {"waveguide_phase", num(s.waveguide_phase)},
      {"control_bits", std::to_string(s.control_bits)},
      {"adc_bits", std::to_string(s.adc_bits)},
      {"adc_fullscale", num(s.adc_fullscale)},
      {"lna_gain", num(s.lna_gain)},
      {"noise_power", num(s.noise_power)},
      {"signal_power", num(s.signal_power)},
      {"jam_power", num(s.jam_power)},
      {"num_paths_alice", std::to_string(s.num_paths_alice)},
      {"num_paths_jam", std::to_string(s.num_paths_jam)},
      {"blocking_ratio", s.blocking_ratio ? num(*s.blocking_ratio) : "default"},
      {"coupling_efficiency", num(s.coupling_efficiency)},
      {"gain_model", s.gain_model == array::GainModel::rayleigh ? "rayleigh" : "fixed_magnitude"},
      {"pilot_length", std::to_string(s.pilot_length)},
      {"rho_theta", num(c.rho_theta)},
      {"rho_g", num(c.rho_g)},
      {"gain_sigma", num(c.gain_sigma)},
      {"sweep", c.sweep},
      {"values", join(vals)},
      {"schemes", join(c.schemes)},
      {"trials", std::to_string(c.trials)},
      {"seed", std::to_string(c.seed)},
      {"threads", std::to_string(c.threads)},
      {"timing", c.timing ? "true" : "false"},
      {"kappa_relative", num(c.kappa_relative)},
      {"randomization_samples", std::to_string(c.randomization_samples)},
      {"csi_ball", c.csi_ball == robust::CsiBall::per_path ? "per_path" : "stacked"},
      {"ula_spacing", num(c.ula_spacing)},
  };
}

}  // namespace

std::string format_config(const ExperimentConfig& c) {
  std::string out;
  for (const auto& [k, v] : config_items(c)) out += k + " = " + v + "\n";
  return out;
}

SweepPoint apply_sweep(const ExperimentConfig& c, double value) {
  SweepPoint p;
  p.scenario = c.scenario;
  p.rho_theta = c.rho_theta;
  p.rho_g = c.rho_g;
  auto integer = [&](const char* what) {
    if (value != std::floor(value) || value < 1) throw DomainError(std::string(what) + " sweep needs positive integers");
    return static_cast<int>(value);
  };
  if (c.sweep == "jam_power_db") {
    p.scenario.jam_power = p.scenario.noise_power * from_db(value);
  } else if (c.sweep == "jam_power_with_estimation") {
    p.scenario.jam_power = p.scenario.noise_power * from_db(value);
    p.estimate = true;
  } else if (c.sweep == "N") {
    p.scenario.elements_per_antenna = integer("N");
  } else if (c.sweep == "M") {
    p.scenario.num_antennas = integer("M");
  } else if (c.sweep == "num_paths") {
    p.scenario.num_paths_alice = p.scenario.num_paths_jam = integer("num_paths");
  } else if (c.sweep == "rho_g") {
    p.rho_g = value;
  } else if (c.sweep == "rho_theta") {
    p.rho_theta = value;
  } else {
    throw DomainError("unknown sweep axis '" + c.sweep + "'");
  }
  p.scenario.validate();
  return p;
}

std::vector<TrialRecord> run_trials(const ExperimentConfig& c, const SweepPoint& p,
                                    const std::vector<std::string>& schemes, std::uint64_t trial_seed) {
  const array::ScenarioConfig& s = p.scenario;
  array::Rng rng(trial_seed);
  const array::ChannelRealization ch = array::draw_channel(s, rng);

  // estimate: synthetic error source or the full estimation pipeline
  Estimate e;
  robust::ErrorBalls balls;
  balls.alice = {p.rho_theta, p.rho_g, c.gain_sigma};
  balls.jam = balls.alice;
  std::string estimate_error;
  if (p.estimate) {
    try {
      array::Rng erng(trial_seed ^ 0x9e3779b97f4a7c15ULL);
      const est::EstimationResult er = est::estimate_channel(s, ch, &erng);
      e = {er.angles_alice, er.angles_jam, er.gains_alice, er.gains_jam};
      if (e.ta.size() == 0 || e.tj.size() == 0) estimate_error = "estimation found no path for a source";
    } catch (const std::exception& ex) {
      estimate_error = std::string("estimation failed: ") + ex.what();
    }
  } else {
    array::Rng erng(trial_seed ^ 0x9e3779b97f4a7c15ULL);
    auto angles = [&](const RVec& t) {
      return RVec((t + real_ball(erng, static_cast<int>(t.size()), p.rho_theta)).cwiseMax(-kPi / 2).cwiseMin(kPi / 2));
    };
    e.ta = angles(ch.doa_alice);
    e.tj = angles(ch.doa_jam);
    e.ga = ch.gains_alice + complex_ball(erng, static_cast<int>(ch.gains_alice.size()), p.rho_g);
    e.gj = ch.gains_jam + complex_ball(erng, static_cast<int>(ch.gains_jam.size()), p.rho_g);
  }

  std::map<std::string, robust::BeamformerSolution> solved;
  std::map<std::string, std::string> solve_error;
  std::map<std::string, double> solve_secs;
  auto solve = [&](const std::string& key, const robust::ErrorBalls& b) -> const robust::BeamformerSolution* {
    if (!estimate_error.empty()) {
      solve_error[key] = estimate_error;
      return nullptr;
    }
    if (solved.count(key)) return &solved[key];
    if (solve_error.count(key)) return nullptr;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const robust::StackedModel m = robust::build_stacked_model(s, e.ta, e.ga, e.tj, e.gj);
      robust::RobustParams rp;
      rp.kappa_relative = c.kappa_relative;
      rp.rank1.samples = c.randomization_samples;
      rp.feasibility.lmi.csi_ball = c.csi_ball;
      rp.boundary_samples = 0;
      rp.interior_samples = 0;
      rp.seed = trial_seed;
      solved[key] = robust::solve_robust(s, m, b, rp);
    } catch (const std::exception& ex) {
      solve_error[key] = ex.what();
    }
    solve_secs[key] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return solved.count(key) ? &solved[key] : nullptr;
  };

  std::vector<TrialRecord> out;
  for (const std::string& scheme : schemes) {
    const auto t0 = std::chrono::steady_clock::now();
    TrialRecord r;
    std::string key;
    try {
      if (scheme.rfind("rha_", 0) == 0) {
        robust::ErrorBalls b = balls;
        if (scheme == "rha_nonrobust") {
          b.alice.angle = b.alice.gain = b.jam.angle = b.jam.gain = 0.0;
          key = "nonrobust";
        } else if (scheme == "rha_csi_only_robust") {
          b.alice.angle = b.jam.angle = 0.0;
          key = "csi_only";
        } else {
          key = "robust";
        }
        const robust::BeamformerSolution* sol = solve(key, b);
        if (!sol) {
          r.failed = true;
          r.error = solve_error[key];
          r.antennas = s.num_antennas;
        } else {
          const CVec v = scheme == "rha_robust_continuous" ? sol->v : sol->discrete.stacked();
          r = evaluate_rha(s, ch, v);
        }
      } else if (scheme == "ula_equal_elements") {
        if (!estimate_error.empty()) throw std::runtime_error(estimate_error);
        const int n = s.num_antennas * s.elements_per_antenna;
        RVec pos(n);
        for (int i = 0; i < n; ++i) pos(i) = i * c.ula_spacing;
        r = evaluate_ula(s, ch, e, pos, 1.0);
      } else if (scheme == "ula_equal_aperture") {
        if (!estimate_error.empty()) throw std::runtime_error(estimate_error);
        r = evaluate_ula(s, ch, e, s.antenna_positions(), std::sqrt(static_cast<double>(s.elements_per_antenna)));
      } else {
        throw DomainError("unknown scheme '" + scheme + "'");
      }
    } catch (const std::exception& ex) {
      r = TrialRecord{};
      r.failed = true;
      r.error = ex.what();
    }
    r.scheme = scheme;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!key.empty() && solve_secs.count(key)) r.seconds = std::max(r.seconds, solve_secs[key]);
    out.push_back(std::move(r));
  }
  return out;
}

TrialRecord run_trial(const ExperimentConfig& c, const SweepPoint& p, const std::string& scheme,
                      std::uint64_t trial_seed) {
  return run_trials(c, p, {scheme}, trial_seed).front();
}

double feasible_probability(const std::vector<TrialRecord>& records) {
  if (records.empty()) return 0.0;
  int ok = 0;
  for (const auto& r : records) ok += r.feasible() ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(records.size());
}

MetricsRow aggregate(const std::vector<TrialRecord>& records, const std::string& scheme,
                     const std::string& sweep_name, double sweep_value, bool timing) {
  MetricsRow row;
  row.scheme = scheme;
  row.sweep_name = sweep_name;
  row.sweep_value = sweep_value;
  row.trials = static_cast<int>(records.size());
  if (records.empty()) return row;
  double sum = 0.0, mn = std::numeric_limits<double>::infinity(), secs = 0.0;
  for (const auto& r : records) {
    const double x = r.failed ? 0.0 : r.sinr;
    sum += x;
    mn = std::min(mn, x);
    row.blocked_count += r.blocked;
    row.failures += r.failed ? 1 : 0;
    secs += r.seconds;
    row.sinr_db.push_back(to_db(x));
  }
  row.mean_sinr_db = to_db(sum / static_cast<double>(records.size()));
  row.min_sinr_db = to_db(mn);
  row.feasible_prob = feasible_probability(records);
  row.secs_per_trial = timing ? secs / static_cast<double>(records.size()) : 0.0;
  return row;
}

ResultTable run_experiment(const ExperimentConfig& c, Progress progress) {
  c.validate();
  std::vector<SweepPoint> points;
  for (double v : c.values) points.push_back(apply_sweep(c, v));
  const int P = static_cast<int>(points.size()), T = c.trials;
  std::vector<std::vector<std::vector<TrialRecord>>> rec(P, std::vector<std::vector<TrialRecord>>(T));

  std::atomic<int> next{0};
  std::mutex log_mutex;
  auto worker = [&]() {
    for (int task = next++; task < P * T; task = next++) {
      const int pi = task / T, ti = task % T;
      rec[pi][ti] = run_trials(c, points[pi], c.schemes, c.seed ^ static_cast<std::uint64_t>(ti));
      if (progress && ti == T - 1) {
        std::lock_guard<std::mutex> lock(log_mutex);
        progress(c.sweep + " = " + num(c.values[pi]) + " done");
      }
    }
  };
  const int nt = std::min(c.threads, P * T);
  std::vector<std::thread> pool;
  for (int k = 1; k < nt; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  ResultTable table;
  table.config = c;
  for (int pi = 0; pi < P; ++pi)
    for (std::size_t si = 0; si < c.schemes.size(); ++si) {
      std::vector<TrialRecord> rs;
      for (int ti = 0; ti < T; ++ti) rs.push_back(rec[pi][ti][si]);
      table.rows.push_back(aggregate(rs, c.schemes[si], c.sweep, c.values[pi], c.timing));
    }
  return table;
}

std::string to_csv(const ResultTable& t) {
  std::string out =
      "scheme,sweep_name,sweep_value,trials,mean_sinr_db,min_sinr_db,feasible_prob,blocked_count,failures,"
      "secs_per_trial\n";
  for (const auto& r : t.rows) {
    out += r.scheme + "," + r.sweep_name + "," + num(r.sweep_value) + "," + std::to_string(r.trials) + "," +
           fixed(r.mean_sinr_db, 4) + "," + fixed(r.min_sinr_db, 4) + "," + fixed(r.feasible_prob, 4) + "," +
           std::to_string(r.blocked_count) + "," + std::to_string(r.failures) + "," + fixed(r.secs_per_trial, 6) +
           "\n";
  }
  return out;
}

std::string to_json(const ResultTable& t) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["format"] = "rha-results/1";
  j["seed"] = t.config.seed;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : config_items(t.config)) cfg[k] = v;
  j["config"] = cfg;
  ordered_json rows = ordered_json::array();
  for (const auto& r : t.rows) {
    ordered_json x;
    x["scheme"] = r.scheme;
    x["sweep_name"] = r.sweep_name;
    x["sweep_value"] = r.sweep_value;
    x["trials"] = r.trials;
    x["mean_sinr_db"] = r.mean_sinr_db;
    x["min_sinr_db"] = r.min_sinr_db;
    x["feasible_prob"] = r.feasible_prob;
    x["blocked_count"] = r.blocked_count;
    x["failures"] = r.failures;
    x["secs_per_trial"] = r.secs_per_trial;
    rows.push_back(x);
  }
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

ResultTable table_from_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DomainError(std::string("results JSON: ") + e.what());
  }
  if (j.value("format", "") != "rha-results/1") throw DomainError("results JSON: unknown format");
  ResultTable t;
  for (const auto& [k, v] : j.at("config").items()) set_option(t.config, k, v.get<std::string>());
  t.config.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& x : j.at("rows")) {
    MetricsRow r;
    r.scheme = x.at("scheme").get<std::string>();
    r.sweep_name = x.at("sweep_name").get<std::string>();
    r.sweep_value = x.at("sweep_value").get<double>();
    r.trials = x.at("trials").get<int>();
    r.mean_sinr_db = x.at("mean_sinr_db").get<double>();
    r.min_sinr_db = x.at("min_sinr_db").get<double>();
    r.feasible_prob = x.at("feasible_prob").get<double>();
    r.blocked_count = x.at("blocked_count").get<int>();
    r.failures = x.at("failures").get<int>();
    r.secs_per_trial = x.at("secs_per_trial").get<double>();
    t.rows.push_back(std::move(r));
  }
  return t;
}

void emit_results(const ResultTable& t, const std::string& path, const std::string& format) {
  std::string text;
  if (format == "csv")
    text = to_csv(t);
  else if (format == "json")
    text = to_json(t);
  else
    throw DomainError("unknown output format '" + format + "' (csv or json)");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

BootstrapInterval bootstrap_mean_difference(const std::vector<double>& a, const std::vector<double>& b,
                                            int resamples, double level, std::uint64_t seed) {
  if (a.size() != b.size() || a.empty()) throw DimensionError("bootstrap needs paired, nonempty samples");
  if (resamples < 1 || !(level > 0 && level < 1)) throw DomainError("bootstrap: bad resamples or level");
  array::Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, a.size() - 1);
  std::vector<double> stats(resamples);
  for (int r = 0; r < resamples; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::size_t k = pick(rng);
      s += a[k] - b[k];
    }
    stats[r] = s / static_cast<double>(a.size());
  }
  std::sort(stats.begin(), stats.end());
  const double tail = 0.5 * (1.0 - level);
  auto q = [&](double p) {
    const auto k = static_cast<std::size_t>(std::clamp(std::floor(p * (resamples - 1) + 0.5), 0.0, resamples - 1.0));
    return stats[k];
  };
  return {q(tail), q(1.0 - tail)};
}

}  // namespace rha::harness
