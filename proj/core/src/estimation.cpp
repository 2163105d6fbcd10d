#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include "rha/estimation.hpp"

namespace rha::est {

using array::ChannelRealization;
using array::Rng;
using array::ScenarioConfig;

Observations collect_snapshots(const ScenarioConfig& s, const ChannelRealization& ch, const PatternSchedule& sched,
                               Rng* rng) {
  s.validate();
  ch.validate(s);
  const int M = s.num_antennas, N = s.elements_per_antenna;
  if (sched.patterns.rows() != N) throw DimensionError("pattern length must equal elements per antenna");
  if (ch.pilots_alice.size() != ch.pilots_jam.size()) throw DimensionError("pilot sequences differ in length");
  std::normal_distribution<double> g(0.0, std::sqrt(0.5 * s.noise_power));
  Observations obs;
  for (int k = 0; k < sched.Kr; ++k) {
    // same pattern on every antenna in one slot
    CMat omega(M, N);
    for (int m = 0; m < M; ++m) omega.row(m) = sched.patterns.col(k).cast<cd>().transpose();
    const CVec ha = array::rha_antenna_channel(s, omega, ch.doa_alice, ch.gains_alice);
    const CVec hj = array::rha_antenna_channel(s, omega, ch.doa_jam, ch.gains_jam);
    CMat Y = std::sqrt(s.signal_power) * ha * ch.pilots_alice.transpose() +
             std::sqrt(s.jam_power) * hj * ch.pilots_jam.transpose();
    if (rng)
      for (Eigen::Index i = 0; i < Y.size(); ++i) Y(i) += cd(g(*rng), g(*rng));
    obs.Y.push_back(std::move(Y));
  }
  return obs;
}

CMat VirtualArrayData::normalized() const {
  CMat out = samples;
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) /= scale(i);
  return out;
}

VirtualArrayData combine_virtual_antennas(const ScenarioConfig& s, const Observations& obs,
                                          const PatternSchedule& sched) {
  const int M = s.num_antennas, Kr = sched.Kr;
  if (static_cast<int>(obs.Y.size()) != Kr) throw DimensionError("observation count does not match schedule");
  if (Kr != s.elements_per_antenna) throw DimensionError("schedule order must equal elements per antenna");
  const Eigen::Index T = obs.Y.front().cols();
  for (const CMat& Y : obs.Y)
    if (Y.rows() != M || Y.cols() != T) throw DimensionError("observation has wrong shape");
  const CVec t = array::waveguide_taps(s);
  const RVec ra = s.antenna_positions(), re = s.element_positions();
  VirtualArrayData v;
  v.samples = CMat::Zero(M * Kr, T);
  v.positions.resize(M * Kr);
  v.scale.resize(M * Kr);
  v.noise_variance.resize(M * Kr);
  for (int m = 0; m < M; ++m)
    for (int i = 0; i < Kr; ++i) {
      const int row = m * Kr + i;
      for (int k = 0; k < Kr; ++k) v.samples.row(row) += sched.H(i, k) * obs.Y[k].row(m);
      v.positions(row) = ra(m) + re(i);
      v.scale(row) = static_cast<double>(Kr) * t(i);
      v.noise_variance(row) = s.noise_power * Kr / std::norm(v.scale(row));
    }
  return v;
}

namespace {

CVec manifold(const RVec& positions, double k0, double theta) { return array::steering_vector(theta, positions, k0); }

struct Grid {
  int G = 0;
  std::vector<int> index;  // grid index of each virtual row
};

Grid virtual_grid(const ScenarioConfig& s, const VirtualArrayData& v) {
  if (s.element_spacing <= 0) throw DomainError("grid-embedded ANM needs a positive element spacing");
  if (s.element_spacing > 0.5 * s.wavelength + 1e-12)
    throw DomainError("element spacing above half a wavelength aliases the virtual array");
  Grid g;
  for (Eigen::Index i = 0; i < v.positions.size(); ++i) {
    const double q = v.positions(i) / s.element_spacing;
    if (std::abs(q - std::round(q)) > 1e-9)
      throw DomainError("antenna spacing must be an integer multiple of the element spacing for grid-embedded ANM");
    g.index.push_back(static_cast<int>(std::lround(q)));
    g.G = std::max(g.G, g.index.back() + 1);
  }
  return g;
}

// Power ordering helper: paths in the order of decreasing estimated power.
double row_power(const CMat& C, Eigen::Index l) { return C.row(l).squaredNorm(); }

}  // namespace

Classification classify_paths(const std::vector<double>& angles, const ScenarioConfig& s, const VirtualArrayData& v,
                              const CVec& pilots_alice, const CVec& pilots_jam, const ClassifyOptions& opts) {
  Classification out;
  if (angles.empty()) return out;
  const CMat Y = v.normalized();
  if (pilots_alice.size() != Y.cols() || pilots_jam.size() != Y.cols())
    throw DimensionError("pilot length does not match observations");
  const Eigen::Index L = static_cast<Eigen::Index>(angles.size());
  CMat A(Y.rows(), L);
  for (Eigen::Index l = 0; l < L; ++l) A.col(l) = manifold(v.positions, s.k0(), angles[l]);
  const CMat C = A.completeOrthogonalDecomposition().solve(Y);  // L x T per-path time series
  double mean_power = 0;
  for (Eigen::Index l = 0; l < L; ++l) mean_power += row_power(C, l) / L;
  for (Eigen::Index l = 0; l < L; ++l) {
    const CVec c = C.row(l).transpose();
    const double nc = c.norm();
    double ra = 0, rj = 0;
    if (nc > 0) {
      ra = std::abs(pilots_alice.dot(c)) / (nc * pilots_alice.norm());
      rj = std::abs(pilots_jam.dot(c)) / (nc * pilots_jam.norm());
    }
    out.corr_alice.push_back(ra);
    out.corr_jam.push_back(rj);
    const double margin = std::abs(ra - rj);
    if (nc == 0) {
      out.ambiguous.push_back(angles[l]);
    } else if (margin <= opts.tie_tolerance) {
      (row_power(C, l) >= mean_power ? out.jam : out.alice).push_back(angles[l]);
    } else if (margin < opts.ambiguous_margin && L > 1) {
      out.ambiguous.push_back(angles[l]);
    } else {
      (ra > rj ? out.alice : out.jam).push_back(angles[l]);
    }
  }
  return out;
}

CsiEstimate estimate_csi(const std::vector<double>& angles_alice, const std::vector<double>& angles_jam,
                         const ScenarioConfig& s, const VirtualArrayData& v, const CVec& pilots_alice,
                         const CVec& pilots_jam) {
  const Eigen::Index R = v.samples.rows(), T = v.samples.cols();
  const Eigen::Index La = static_cast<Eigen::Index>(angles_alice.size());
  const Eigen::Index L = La + static_cast<Eigen::Index>(angles_jam.size());
  CsiEstimate out;
  out.gains_alice = CVec::Zero(La);
  out.gains_jam = CVec::Zero(L - La);
  if (L == 0) return out;
  if (pilots_alice.size() != T || pilots_jam.size() != T) throw DimensionError("pilot length does not match observations");
  // raw virtual samples keep white noise; columns carry the Kr t_i scale
  CMat D(R * T, L);
  for (Eigen::Index l = 0; l < L; ++l) {
    const bool a = l < La;
    const CVec m = manifold(v.positions, s.k0(), a ? angles_alice[l] : angles_jam[l - La]).cwiseProduct(v.scale);
    const CVec& x = a ? pilots_alice : pilots_jam;
    for (Eigen::Index t = 0; t < T; ++t) D.col(l).segment(t * R, R) = m * x(t);
  }
  CVec y(R * T);
  for (Eigen::Index t = 0; t < T; ++t) y.segment(t * R, R) = v.samples.col(t);

  Eigen::JacobiSVD<CMat> svd(D, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVec& sv = svd.singularValues();
  CVec b;
  if (sv(L - 1) <= 1e-10 * sv(0)) {
    out.regularized = true;
    const double lam = 1e-8 * sv(0) * sv(0);
    CMat Mreg = D.adjoint() * D;
    Mreg.diagonal().array() += lam;
    b = Mreg.ldlt().solve(D.adjoint() * y);
  } else {
    b = svd.solve(y);
  }
  const double ny = y.norm();
  out.residual = ny > 0 ? (D * b - y).norm() / ny : 0.0;
  out.gains_alice = b.head(La) / std::sqrt(s.signal_power);
  out.gains_jam = b.tail(L - La) / std::sqrt(s.jam_power);
  return out;
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) throw DomainError("percentile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(p, 0.0, 1.0) * (v.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

ErrorRadii calibrate_error_radii(const std::vector<CalibrationSample>& trials, const ErrorRadii& defaults) {
  ErrorRadii r = defaults;
  if (!trials.empty()) {
    double m = 0;
    for (const auto& t : trials) m += t.gain_magnitude;
    r.sigma = m / trials.size();
  }
  if (static_cast<int>(trials.size()) < kMinCalibrationTrials) {
    r.fallback = true;
    return r;
  }
  std::vector<double> a, g;
  for (const auto& t : trials) {
    a.push_back(t.angle_error);
    g.push_back(t.gain_error);
  }
  r.angle = percentile(a, 0.95);
  r.gain = percentile(g, 0.95);
  r.fallback = false;
  return r;
}

EstimationResult estimate_channel(const ScenarioConfig& s, const ChannelRealization& ch, Rng* rng,
                                  const EstimationOptions& opts, EstimationTrace* trace) {
  const PatternSchedule sched = build_pattern_schedule(s.elements_per_antenna, s.elements_per_antenna);
  const Observations obs = collect_snapshots(s, ch, sched, rng);
  const VirtualArrayData v = combine_virtual_antennas(s, obs, sched);
  const int max_paths = opts.max_paths.value_or(s.num_paths_alice + s.num_paths_jam);

  // embed on the element-spacing grid; coinciding virtual positions are averaged
  const Grid grid = virtual_grid(s, v);
  const CMat Yn = v.normalized();
  const Eigen::Index T = Yn.cols();
  std::map<int, std::vector<Eigen::Index>> rows_at;
  for (size_t i = 0; i < grid.index.size(); ++i) rows_at[grid.index[i]].push_back(static_cast<Eigen::Index>(i));
  CMat Sobs(static_cast<Eigen::Index>(rows_at.size()), T);
  std::vector<int> obs_index;
  double noise_sum = 0;
  {
    Eigen::Index r = 0;
    for (const auto& [gi, rows] : rows_at) {
      Sobs.row(r).setZero();
      double var = 0;
      for (Eigen::Index i : rows) {
        Sobs.row(r) += Yn.row(i);
        var += v.noise_variance(i);
      }
      Sobs.row(r) /= static_cast<double>(rows.size());
      noise_sum += var / (rows.size() * rows.size());
      obs_index.push_back(gi);
      ++r;
    }
  }

  // rank reduction of the multi-snapshot data
  Eigen::JacobiSVD<CMat> svd(Sobs, Eigen::ComputeThinU);
  const RVec& sv = svd.singularValues();
  const bool noisy = rng != nullptr;
  const double n_obs = static_cast<double>(Sobs.rows());
  const double edge = noisy ? 1.1 * std::sqrt(noise_sum / n_obs) * (std::sqrt(n_obs) + std::sqrt(double(T))) : 0.0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > std::max(edge, 1e-9 * sv(0))) ++r;
  r = std::clamp(r, 1, std::max(1, max_paths));

  AnmInput in;
  in.S = CMat::Zero(grid.G, r);
  in.observed.assign(grid.G, false);
  const CMat Xr = svd.matrixU().leftCols(r) * sv.head(r).asDiagonal();
  for (Eigen::Index i = 0; i < Xr.rows(); ++i) {
    in.S.row(obs_index[i]) = Xr.row(i);
    in.observed[obs_index[i]] = true;
  }
  if (noisy && opts.denoise) in.noise_radius = opts.noise_radius_scale * std::sqrt(r * noise_sum);

  EstimationResult res;
  AnmSolution anm = solve_anm(in, opts.solver);
  res.anm_status = anm.status;
  std::vector<double> angles;
  DoaResult doa;
  if (anm.T.size() > 0) doa = extract_doa(anm, max_paths, s.element_spacing / s.wavelength, &angles);
  res.doa_truncated = doa.truncated;

  Classification cls = classify_paths(angles, s, v, ch.pilots_alice, ch.pilots_jam, opts.classify);
  res.ambiguous_paths = static_cast<int>(cls.ambiguous.size());
  CsiEstimate csi = estimate_csi(cls.alice, cls.jam, s, v, ch.pilots_alice, ch.pilots_jam);
  res.csi_regularized = csi.regularized;
  res.angles_alice = Eigen::Map<const RVec>(cls.alice.data(), static_cast<Eigen::Index>(cls.alice.size()));
  res.angles_jam = Eigen::Map<const RVec>(cls.jam.data(), static_cast<Eigen::Index>(cls.jam.size()));
  res.gains_alice = csi.gains_alice;
  res.gains_jam = csi.gains_jam;
  res.radii_alice.sigma = res.gains_alice.size() ? res.gains_alice.cwiseAbs().mean() : 0.0;
  res.radii_jam.sigma = res.gains_jam.size() ? res.gains_jam.cwiseAbs().mean() : 0.0;
  if (trace) {
    trace->virtual_data = v;
    trace->anm = anm;
    trace->doa = doa;
    trace->angles = angles;
    trace->classes = cls;
  }
  return res;
}

CalibrationSample estimation_error(const EstimationResult& est, const ChannelRealization& truth, bool alice) {
  const RVec& th = alice ? est.angles_alice : est.angles_jam;
  const CVec& g = alice ? est.gains_alice : est.gains_jam;
  const RVec& tt = alice ? truth.doa_alice : truth.doa_jam;
  const CVec& tg = alice ? truth.gains_alice : truth.gains_jam;
  CalibrationSample out;
  out.gain_magnitude = tg.size() ? tg.cwiseAbs().mean() : 0.0;
  // greedy nearest pairing; unmatched true paths count with a full-range angle
  // error and their whole gain
  std::vector<bool> used(static_cast<size_t>(th.size()), false);
  double ea = 0, eg = 0;
  for (Eigen::Index l = 0; l < tt.size(); ++l) {
    Eigen::Index best = -1;
    for (Eigen::Index k = 0; k < th.size(); ++k)
      if (!used[k] && (best < 0 || std::abs(th(k) - tt(l)) < std::abs(th(best) - tt(l)))) best = k;
    if (best < 0) {
      ea += kPi * kPi;
      eg += std::norm(tg(l));
      continue;
    }
    used[best] = true;
    ea += std::pow(th(best) - tt(l), 2);
    eg += std::norm(g(best) - tg(l));
  }
  out.angle_error = std::sqrt(ea);
  out.gain_error = std::sqrt(eg);
  return out;
}

namespace {

nlohmann::json gains_json(const CVec& g) {
  nlohmann::json a = nlohmann::json::array();
  for (cd x : g) a.push_back({x.real(), x.imag()});
  return a;
}

nlohmann::json degrees(const RVec& th) {
  nlohmann::json a = nlohmann::json::array();
  for (double t : th) a.push_back(t * 180.0 / kPi);
  return a;
}

nlohmann::json radii_json(const ErrorRadii& r) {
  return {{"angle_rad", r.angle}, {"gain", r.gain}, {"sigma", r.sigma}, {"fallback", r.fallback}};
}

ErrorRadii radii_from(const nlohmann::json& j) {
  ErrorRadii r;
  r.angle = j.at("angle_rad").get<double>();
  r.gain = j.at("gain").get<double>();
  r.sigma = j.at("sigma").get<double>();
  r.fallback = j.value("fallback", false);
  return r;
}

RVec radians_from(const nlohmann::json& a) {
  RVec v(static_cast<Eigen::Index>(a.size()));
  for (size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>() * kPi / 180.0;
  return v;
}

CVec gains_from(const nlohmann::json& a) {
  CVec v(static_cast<Eigen::Index>(a.size()));
  for (size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = cd(a[i].at(0).get<double>(), a[i].at(1).get<double>());
  return v;
}

}  // namespace

std::string to_json(const EstimationResult& r) {
  nlohmann::json j;
  j["format"] = "rha-estimate/1";
  j["alice"] = {{"angles_deg", degrees(r.angles_alice)}, {"gains", gains_json(r.gains_alice)},
                {"radii", radii_json(r.radii_alice)}};
  j["jam"] = {{"angles_deg", degrees(r.angles_jam)}, {"gains", gains_json(r.gains_jam)},
              {"radii", radii_json(r.radii_jam)}};
  j["diagnostics"] = {{"ambiguous_paths", r.ambiguous_paths},
                      {"doa_truncated", r.doa_truncated},
                      {"csi_regularized", r.csi_regularized},
                      {"anm_status", conic::to_string(r.anm_status)}};
  return j.dump(2);
}

EstimationResult estimation_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("estimation JSON: ") + e.what());
  }
  EstimationResult r;
  try {
    r.angles_alice = radians_from(j.at("alice").at("angles_deg"));
    r.gains_alice = gains_from(j.at("alice").at("gains"));
    r.radii_alice = radii_from(j.at("alice").at("radii"));
    r.angles_jam = radians_from(j.at("jam").at("angles_deg"));
    r.gains_jam = gains_from(j.at("jam").at("gains"));
    r.radii_jam = radii_from(j.at("jam").at("radii"));
    if (j.contains("diagnostics")) {
      r.ambiguous_paths = j["diagnostics"].value("ambiguous_paths", 0);
      r.doa_truncated = j["diagnostics"].value("doa_truncated", false);
      r.csi_regularized = j["diagnostics"].value("csi_regularized", false);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("estimation JSON: ") + e.what());
  }
  if (r.angles_alice.size() != r.gains_alice.size() || r.angles_jam.size() != r.gains_jam.size())
    throw DomainError("estimation JSON: angle and gain counts differ");
  return r;
}

}  // namespace rha::est
