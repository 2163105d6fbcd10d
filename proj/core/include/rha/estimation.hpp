#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rha/array_model.hpp"
#include "rha/conic.hpp"

namespace rha::est {

// Hadamard matrix of order n (Sylvester, Paley I/II and Kronecker products of
// those). Throws DomainError naming the nearest supported orders otherwise.
RMat hadamard(int n);
bool hadamard_supported(int n);

struct PatternSchedule {
  int Kr = 0;
  RMat patterns;  // N x Kr, column k = omega_{0,k} (entries +-1)
  RMat H;         // Kr x Kr combiner, row i = omega_i
};

PatternSchedule build_pattern_schedule(int N, int Kr);

// Y[k] is M x T_p: raw observations under pattern k.
struct Observations {
  std::vector<CMat> Y;
};

// rng == nullptr disables noise.
Observations collect_snapshots(const array::ScenarioConfig& s, const array::ChannelRealization& ch,
                               const PatternSchedule& sched, array::Rng* rng);

struct VirtualArrayData {
  CMat samples;          // (M*Kr) x T_p, row m*Kr + i = sum_k H(i,k) Y_k(m, :)
  RVec positions;        // d_m + r_i
  CVec scale;            // Kr * t_i per row
  RVec noise_variance;   // per row after dividing by scale
  CMat normalized() const;  // samples with each row divided by its scale
};

VirtualArrayData combine_virtual_antennas(const array::ScenarioConfig& s, const Observations& obs,
                                          const PatternSchedule& sched);

// Grid embedding of the virtual array: position = grid_index * spacing.
struct AnmInput {
  CMat S;                      // G x r data on the full grid (unobserved rows ignored)
  std::vector<bool> observed;  // length G
  double noise_radius = 0.0;   // 0: observed entries matched exactly
};

struct AnmSolution {
  conic::SolveStatus status = conic::SolveStatus::numerical_failure;
  CVec u;       // first column of T(u)
  CMat T;       // Hermitian Toeplitz
  CMat Z;
  CMat X;       // recovered G x r signal
  double objective = 0.0;
  double min_block_eigenvalue = 0.0;
  int iterations = 0;
};

CMat toeplitz_hermitian(const CVec& u);
// a(f)_g = exp(-j 2 pi f g), g = 0..G-1
CVec grid_atom(double f, int G);

AnmSolution solve_anm(const AnmInput& in, const conic::SolverOptions& opts = {});

struct DoaResult {
  std::vector<double> frequencies;  // sorted ascending
  int order = 0;                    // model order estimated from T(u)
  bool truncated = false;           // order exceeded max_paths
  bool no_peaks = false;            // T(u) had no noise subspace
};

// Root-MUSIC on T(u) with eigenvalue threshold 1e-3 * lambda_max.
DoaResult extract_frequencies(const CMat& T, int max_paths, double order_threshold = 1e-3);
// Angles in radians from grid frequencies, f = (d_e / lambda) sin(theta).
std::vector<double> frequencies_to_angles(const std::vector<double>& f, double spacing_over_lambda);
DoaResult extract_doa(const AnmSolution& anm, int max_paths, double spacing_over_lambda, std::vector<double>* angles);

struct Classification {
  std::vector<double> alice;
  std::vector<double> jam;
  std::vector<double> ambiguous;
  std::vector<double> corr_alice;  // per input angle
  std::vector<double> corr_jam;
};

struct ClassifyOptions {
  double ambiguous_margin = 0.1;
  double tie_tolerance = 1e-12;
};

// Per-path time series by least squares on the normalized virtual data, then
// assignment by the larger normalized pilot correlation. Exact ties go to the
// stronger path being the jammer.
Classification classify_paths(const std::vector<double>& angles, const array::ScenarioConfig& s,
                              const VirtualArrayData& v, const CVec& pilots_alice, const CVec& pilots_jam,
                              const ClassifyOptions& opts = {});

struct CsiEstimate {
  CVec gains_alice;
  CVec gains_jam;
  bool regularized = false;
  double residual = 0.0;  // relative LS residual
};

CsiEstimate estimate_csi(const std::vector<double>& angles_alice, const std::vector<double>& angles_jam,
                         const array::ScenarioConfig& s, const VirtualArrayData& v, const CVec& pilots_alice,
                         const CVec& pilots_jam);

struct ErrorRadii {
  double angle = 0.1;   // rho_theta
  double gain = 0.1;    // rho_g
  double sigma = 1.0;   // mean |g|
  bool fallback = false;
};

struct CalibrationSample {
  double angle_error = 0.0;     // |theta_hat - theta| over matched paths (2-norm)
  double gain_error = 0.0;      // |g_hat - g| (2-norm)
  double gain_magnitude = 1.0;  // mean |g| of the trial
};

inline constexpr int kMinCalibrationTrials = 30;

ErrorRadii calibrate_error_radii(const std::vector<CalibrationSample>& trials, const ErrorRadii& defaults = {});
double percentile(std::vector<double> v, double p);

struct EstimationResult {
  RVec angles_alice;  // sorted
  RVec angles_jam;
  CVec gains_alice;
  CVec gains_jam;
  ErrorRadii radii_alice;
  ErrorRadii radii_jam;
  // diagnostics
  int ambiguous_paths = 0;
  bool doa_truncated = false;
  bool csi_regularized = false;
  conic::SolveStatus anm_status = conic::SolveStatus::optimal;
};

struct EstimationOptions {
  bool denoise = true;           // noise-ball ANM when noise is present
  double noise_radius_scale = 1.0;
  std::optional<int> max_paths;  // default L_a + L_j
  conic::SolverOptions solver;
  ClassifyOptions classify;
};

struct EstimationTrace {
  VirtualArrayData virtual_data;
  AnmSolution anm;
  DoaResult doa;
  std::vector<double> angles;
  Classification classes;
};

// Full pipeline: schedule, snapshots, virtual antennas, ANM, root-MUSIC,
// classification and least-squares CSI.
EstimationResult estimate_channel(const array::ScenarioConfig& s, const array::ChannelRealization& ch,
                                  array::Rng* rng, const EstimationOptions& opts = {},
                                  EstimationTrace* trace = nullptr);

// Matched estimation errors of one trial (paths paired after sorting).
CalibrationSample estimation_error(const EstimationResult& est, const array::ChannelRealization& truth, bool alice);

std::string to_json(const EstimationResult& r);
EstimationResult estimation_from_json(const std::string& text);

}  // namespace rha::est
