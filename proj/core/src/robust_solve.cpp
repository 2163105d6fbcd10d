#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "rha/robust.hpp"

namespace rha::robust {

namespace {

CVec unit_modulus(const CVec& x) {
  CVec v(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) v(i) = std::abs(x(i)) > 0 ? x(i) / std::abs(x(i)) : cd(1.0, 0.0);
  return v;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt)};
  std::uint32_t w[2];
  seq.generate(w, w + 2);
  return (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
}

template <class Score>
Rank1Result randomize(const CMat& V, const Rank1Options& o, Score score) {
  if (V.rows() != V.cols() || V.rows() < 1) throw DimensionError("extract_rank1: V must be square");
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (V + V.adjoint()));
  const Eigen::Index n = V.rows();
  const RVec lam = es.eigenvalues().cwiseMax(0.0);
  Rank1Result r;
  const double l1 = lam(n - 1);
  r.eigen_ratio = n > 1 && l1 > 0 ? lam(n - 2) / l1 : 0.0;
  CVec best = unit_modulus(std::sqrt(std::max(l1, 0.0)) * es.eigenvectors().col(n - 1));
  double best_score = score(best);
  r.rank_one = r.eigen_ratio <= o.rank_threshold;
  if (!r.rank_one) {
    const CMat L = es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
    array::Rng rng(o.seed);
    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
    for (int k = 0; k < o.samples; ++k) {
      CVec z(n);
      for (Eigen::Index i = 0; i < n; ++i) z(i) = cd(g(rng), g(rng));
      CVec v = unit_modulus(L * z);
      const double sc = score(v);
      if (sc > best_score) {
        best_score = sc;
        best = v;
      }
    }
  }
  r.v = best;
  r.score = best_score;
  return r;
}

}  // namespace

double model_sinr(const StackedModel& m, const CVec& v) {
  const CVec ca = m.channel_alice(), cj = m.channel_jam();
  if (v.size() != ca.size()) throw DimensionError("model_sinr: v has wrong length");
  const double den = m.Pj * std::norm(v.dot(cj)) + m.noise * v.squaredNorm() / static_cast<double>(v.size());
  return den > 0 ? m.Pa * std::norm(v.dot(ca)) / den : 0.0;
}

RVec blocking_margins(const StackedModel& m, const CVec& v) {
  const CVec ca = m.channel_alice(), cj = m.channel_jam();
  RVec out(m.M);
  for (int mm = 0; mm < m.M; ++mm) {
    const double s = m.xi * m.Pa * std::norm(v.segment(mm * m.N, m.N).dot(ca.segment(mm * m.N, m.N)));
    const double j = m.Pj * std::norm(v.segment(mm * m.N, m.N).dot(cj.segment(mm * m.N, m.N)));
    out(mm) = s + j > 0 ? (s - j) / (s + j) : 0.0;
  }
  return out;
}

Rank1Result extract_rank1(const CMat& V, const StackedModel& m, const Rank1Options& o) {
  int feasible = 0;
  auto score = [&](const CVec& v) {
    if (o.check_blocking && blocking_margins(m, v).minCoeff() < 0.0) return -1.0;
    ++feasible;
    return model_sinr(m, v);
  };
  Rank1Result r = randomize(V, o, score);
  r.feasible_samples = feasible;
  if (r.score < 0.0) {  // nothing met the blocking constraints: best nominal SINR
    Rank1Options o2 = o;
    o2.check_blocking = false;
    Rank1Result r2 = extract_rank1(V, m, o2);
    r2.feasible_samples = 0;
    return r2;
  }
  return r;
}

Rank1Result extract_rank1(const CMat& V, const Rank1Options& o) {
  return randomize(V, o, [&](const CVec& v) { return v.dot(V * v).real(); });
}

int expected_bisection_iterations(double gamma_max, double kappa) {
  if (!(kappa > 0)) throw DomainError("kappa must be positive");
  return gamma_max <= kappa ? 0 : static_cast<int>(std::ceil(std::log2(gamma_max / kappa)));
}

BisectionResult bisection_search(const StackedModel& m, const ErrorBalls& balls, double kappa,
                                 const FeasibilityOptions& o, double gamma_max) {
  if (!(kappa > 0)) throw DomainError("bisection tolerance must be positive");
  BisectionResult r;
  r.gamma_max = gamma_max > 0 ? gamma_max
                              : m.Pa * std::pow(static_cast<double>(m.M) * m.N * m.La, 2) / m.noise;
  r.kappa = kappa;
  double lo = 0.0, hi = r.gamma_max;
  while (hi - lo > kappa) {
    const double mid = 0.5 * (lo + hi);
    Feasibility f = feasibility_sdp(mid, m, balls, o);
    r.ipm_iterations += f.iterations;
    r.tested.push_back(mid);
    r.outcomes.push_back(f.feasible);
    ++r.iterations;
    if (f.feasible) {
      lo = mid;
      r.V = f.V;
      r.found_feasible = true;
    } else {
      hi = mid;
    }
  }
  r.gamma = lo;
  r.gamma_upper = hi;
  if (!r.found_feasible) {
    Feasibility f0 = feasibility_sdp(0.0, m, balls, o);
    r.ipm_iterations += f0.iterations;
    if (f0.feasible) {
      r.V = f0.V;
    } else if (o.blocking) {
      // the blocking constraints alone are infeasible: drop them
      FeasibilityOptions relaxed = o;
      relaxed.blocking = false;
      BisectionResult rr = bisection_search(m, balls, kappa, relaxed, r.gamma_max);
      rr.blocking_relaxed = true;
      rr.ipm_iterations += r.ipm_iterations;
      return rr;
    } else if (f0.status == conic::SolveStatus::optimal) {
      r.V = f0.V;  // best-margin point even though slightly negative
    }
  }
  return r;
}

Certificate certify(const StackedModel& m, const ErrorBalls& balls, const CVec& v, const LmiOptions& o) {
  const CMat V = v * v.adjoint();
  auto fix_V = [&](conic::AffineBlock blk) {
    for (const auto& c : blk.congruences) blk.constant += c.weight * (c.K.adjoint() * V * c.K);
    blk.congruences.clear();
    blk.constant = 0.5 * (blk.constant + blk.constant.adjoint());
    return blk;
  };
  Certificate c;
  {
    conic::SdpProblem P;
    LmiVars lv;
    lv.b = P.add_scalar("t");
    if (balls.alice.gain > 0) lv.alpha1 = P.add_scalar("alpha", conic::ScalarSign::nonnegative);
    if (balls.alice.angle > 0) lv.beta1 = P.add_scalar("beta", conic::ScalarSign::nonnegative);
    P.add_psd(fix_V(assemble_signal_lmi(m, balls, 1.0, lv, o)));
    conic::LinearExpr obj;
    obj.add(lv.b, 1.0);
    P.maximize(obj);
    conic::SdpSolution s = conic::solve(P);
    c.signal = s.status == conic::SolveStatus::optimal ? std::max(0.0, s.objective) : 0.0;
  }
  {
    conic::SdpProblem P;
    LmiVars lv;
    lv.b = P.add_scalar("b");
    if (balls.jam.gain > 0) lv.alpha2 = P.add_scalar("alpha", conic::ScalarSign::nonnegative);
    if (balls.jam.angle > 0) lv.beta2 = P.add_scalar("beta", conic::ScalarSign::nonnegative);
    P.add_psd(fix_V(assemble_jam_lmi(m, balls, lv, o)));
    conic::LinearExpr obj;
    obj.add(lv.b, -1.0);
    P.maximize(obj);
    conic::SdpSolution s = conic::solve(P);
    c.jam_plus_noise = s.status == conic::SolveStatus::optimal ? -s.objective
                                                               : std::numeric_limits<double>::infinity();
  }
  c.gamma = c.jam_plus_noise > 0 ? c.signal / c.jam_plus_noise : 0.0;
  return c;
}

std::vector<ChannelDraw> draw_channels(const array::ScenarioConfig& s, const StackedModel& m, const ErrorBalls& balls,
                                       int boundary, int interior, std::uint64_t seed) {
  array::Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // uniform direction, radius rho (boundary) or rho u^(1/dim) (interior)
  auto real_ball = [&](int n, double rho, bool edge) {
    RVec x(n);
    for (int i = 0; i < n; ++i) x(i) = g(rng);
    const double r = edge ? rho : rho * std::pow(u(rng), 1.0 / n);
    return RVec(x.norm() > 0 ? RVec(x * (r / x.norm())) : RVec(RVec::Zero(n)));
  };
  auto complex_ball = [&](int n, double rho, bool edge) {
    RVec x = real_ball(2 * n, rho, edge);
    CVec z(n);
    for (int i = 0; i < n; ++i) z(i) = cd(x(2 * i), x(2 * i + 1));
    return z;
  };
  std::vector<ChannelDraw> out;
  out.reserve(static_cast<std::size_t>(std::max(0, boundary + interior)));
  for (int k = 0; k < boundary + interior; ++k) {
    const bool edge = k < boundary;
    const RVec ta = (m.theta_a + real_ball(m.La, balls.alice.angle, edge)).cwiseMax(-kPi / 2).cwiseMin(kPi / 2);
    const RVec tj = (m.theta_j + real_ball(m.Lj, balls.jam.angle, edge)).cwiseMax(-kPi / 2).cwiseMin(kPi / 2);
    const CVec ga = m.g_a + complex_ball(m.La, balls.alice.gain, edge);
    const CVec gj = m.g_j + complex_ball(m.Lj, balls.jam.gain, edge);
    out.push_back({array::stacked_channel(s, ta, ga), array::stacked_channel(s, tj, gj)});
  }
  return out;
}

WorstCaseSample sample_worst_case(const array::ScenarioConfig& s, const StackedModel& m, const ErrorBalls& balls,
                                  const CVec& v, int boundary, int interior, std::uint64_t seed) {
  WorstCaseSample w;
  w.min_sinr = std::numeric_limits<double>::infinity();
  int feasible = 0;
  double sum = 0.0;
  const double nv = v.squaredNorm() / static_cast<double>(v.size());
  for (const ChannelDraw& d : draw_channels(s, m, balls, boundary, interior, seed)) {
    const double sinr = m.Pa * std::norm(v.dot(d.ca)) / (m.Pj * std::norm(v.dot(d.cj)) + m.noise * nv);
    w.min_sinr = std::min(w.min_sinr, sinr);
    sum += sinr;
    bool ok = true;
    for (int mm = 0; mm < m.M && ok; ++mm) {
      const double sp = m.xi * m.Pa * std::norm(v.segment(mm * m.N, m.N).dot(d.ca.segment(mm * m.N, m.N)));
      const double jp = m.Pj * std::norm(v.segment(mm * m.N, m.N).dot(d.cj.segment(mm * m.N, m.N)));
      ok = sp >= jp;
    }
    feasible += ok ? 1 : 0;
  }
  w.samples = boundary + interior;
  if (w.samples > 0) {
    w.mean_sinr = sum / w.samples;
    w.blocking_feasible_fraction = static_cast<double>(feasible) / w.samples;
  } else {
    w.min_sinr = model_sinr(m, v);
    w.mean_sinr = w.min_sinr;
  }
  return w;
}

BeamformerSolution solve_robust(const array::ScenarioConfig& s, const StackedModel& m, const ErrorBalls& balls,
                                const RobustParams& p) {
  balls.alice.validate();
  balls.jam.validate();
  if (!(p.kappa_relative > 0)) throw DomainError("kappa must be positive");
  if (m.M != s.num_antennas || m.N != s.elements_per_antenna) throw DimensionError("model does not match scenario");
  BeamformerSolution sol;
  for (bool alice : {true, false})
    for (auto& w : linearize_errors(m, alice, alice ? balls.alice : balls.jam, p.feasibility.lmi.csi_ball).warnings)
      sol.warnings.push_back(w);

  const double gmax = m.Pa * std::pow(static_cast<double>(m.M) * m.N * m.La, 2) / m.noise;
  sol.bisection = bisection_search(m, balls, p.kappa_relative * gmax, p.feasibility, gmax);
  sol.gamma_star = sol.bisection.gamma;
  CMat V = sol.bisection.V;
  if (V.size() == 0) {
    sol.warnings.push_back("no SDP solution was obtained; falling back to V = I");
    V = CMat::Identity(m.M * m.N, m.M * m.N);
  }
  if (sol.bisection.blocking_relaxed) sol.warnings.push_back("blocking constraints infeasible; relaxed");

  Rank1Options ro = p.rank1;
  ro.seed = mix(p.seed, 1);
  ro.check_blocking = ro.check_blocking && !sol.bisection.blocking_relaxed;
  sol.rank1 = extract_rank1(V, m, ro);
  sol.v = sol.rank1.v;
  const bool check_blocking = p.refine.check_blocking && !sol.bisection.blocking_relaxed;
  RefineOptions rf = p.refine;
  rf.check_blocking = check_blocking;
  rf.seed = mix(p.seed, 3);
  if (rf.enabled) sol.v = refine_continuous(s, m, balls, sol.v, rf);
  if (p.discretize) {
    DiscreteResult d = discretize(sol.v, m.M, m.N, s.control_bits, CVec(), p.eps, p.max_discrete_iterations);
    if (rf.enabled) {
      refine_discrete(s, m, balls, s.control_bits, d, rf);
      // iterated local search: kick a few element states and re-polish
      array::Rng krng(mix(p.seed, 5));
      const int states = 1 << s.control_bits, flips = std::max(2, m.M * m.N / 4);
      std::uniform_int_distribution<int> pick(0, m.M * m.N - 1), state(0, states - 1);
      SurrogateScore best = surrogate_score(s, m, balls, d.stacked(), rf);
      for (int k = 0; k < rf.kicks; ++k) {
        DiscreteResult t = d;
        for (int f = 0; f < flips; ++f) {
          const int e = pick(krng);
          t.indices(e / m.N, e % m.N) = state(krng);
        }
        refine_discrete(s, m, balls, s.control_bits, t, rf);
        const SurrogateScore sc = surrogate_score(s, m, balls, t.stacked(), rf);
        if (better(sc, best, check_blocking)) {
          best = sc;
          d = std::move(t);
        }
      }
      // the continuous design must not lose to its own quantisation
      CVec vd = d.stacked();
      if (better(surrogate_score(s, m, balls, vd, rf), surrogate_score(s, m, balls, sol.v, rf), check_blocking)) {
        vd = refine_continuous(s, m, balls, vd, rf);
        sol.v = vd;
        sol.warnings.push_back("continuous design replaced by the refined discrete configuration");
      }
    }
    sol.discrete.phase_shifts = d.phases;
    sol.discrete.weights = d.weights;
    sol.phase_indices = d.indices;
    sol.e_trace = d.trace;
  } else {
    sol.discrete = array::RhaConfiguration::from_stacked(sol.v, m.M, m.N);
  }
  sol.sinr_continuous = model_sinr(m, sol.v);
  const CVec vd = p.discretize ? sol.discrete.stacked() : sol.v;
  sol.sinr_discrete = model_sinr(m, vd);
  sol.blocking_margins = blocking_margins(m, vd);

  sol.certificate = certify(m, balls, sol.v, p.feasibility.lmi);
  const int nb = balls.alice.zero() && balls.jam.zero() ? 0 : p.boundary_samples;
  const int ni = balls.alice.zero() && balls.jam.zero() ? 0 : p.interior_samples;
  sol.sampled = sample_worst_case(s, m, balls, sol.v, nb, ni, mix(p.seed, 2));
  if (sol.certificate.gamma > 0 && sol.sampled.min_sinr < sol.certificate.gamma)
    sol.first_order_slack_db = to_db(sol.certificate.gamma) - to_db(sol.sampled.min_sinr);
  return sol;
}

BeamformerSolution solve_robust(const array::ScenarioConfig& s, const est::EstimationResult& e, const RobustParams& p) {
  return solve_robust(s, build_stacked_model(s, e), balls_from(e), p);
}

std::string to_json(const BeamformerSolution& sol, int bits) {
  using nlohmann::json;
  auto cplx = [](const CVec& x) {
    json a = json::array();
    for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back({x(i).real(), x(i).imag()});
    return a;
  };
  json j;
  j["format"] = "rha-beamformer/1";
  j["control_bits"] = bits;
  json idx = json::array();
  for (Eigen::Index m = 0; m < sol.phase_indices.rows(); ++m) {
    json row = json::array();
    for (Eigen::Index n = 0; n < sol.phase_indices.cols(); ++n) row.push_back(sol.phase_indices(m, n));
    idx.push_back(row);
  }
  j["phase_indices"] = idx;
  j["weights"] = cplx(sol.discrete.weights);
  j["continuous_v"] = cplx(sol.v);
  j["gamma_star_db"] = to_db(sol.gamma_star);
  j["certified_sinr_db"] = to_db(sol.certificate.gamma);
  j["sampled_worst_sinr_db"] = to_db(sol.sampled.min_sinr);
  j["first_order_slack_db"] = sol.first_order_slack_db;
  j["sinr_continuous_db"] = to_db(sol.sinr_continuous);
  j["sinr_discrete_db"] = to_db(sol.sinr_discrete);
  json margins = json::array();
  for (Eigen::Index i = 0; i < sol.blocking_margins.size(); ++i) margins.push_back(sol.blocking_margins(i));
  j["blocking_margins"] = margins;
  j["diagnostics"] = {{"bisection_iterations", sol.bisection.iterations},
                      {"ipm_iterations", sol.bisection.ipm_iterations},
                      {"blocking_relaxed", sol.bisection.blocking_relaxed},
                      {"rank_one", sol.rank1.rank_one},
                      {"eigen_ratio", sol.rank1.eigen_ratio},
                      {"e_trace", sol.e_trace},
                      {"warnings", sol.warnings}};
  return j.dump(2);
}

}  // namespace rha::robust
