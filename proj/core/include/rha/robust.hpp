#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rha/array_model.hpp"
#include "rha/conic.hpp"
#include "rha/estimation.hpp"

namespace rha::robust {

// Bounded uncertainty of one source: ||dtheta|| <= angle, ||dg|| <= gain.
struct ErrorBall {
  double angle = 0.0;  // rho_theta, radians
  double gain = 0.0;   // rho_g
  double sigma = 1.0;  // expected path-gain magnitude

  void validate() const;
  double stacked_gain_radius(int M) const;  // sqrt(M) * rho_g
  double total_radius() const { return angle * sigma + gain; }
  bool zero() const { return angle == 0.0 && gain == 0.0; }
};

struct ErrorBalls {
  ErrorBall alice;
  ErrorBall jam;
};

ErrorBalls balls_from(const est::EstimationResult& e);

// Stacked matrices of the estimated channel. Element index mN + n, path index
// mL + l. F_z = T_hat D_z A_z maps stacked gains G_z to the element channel.
struct StackedModel {
  int M = 0, N = 0, La = 0, Lj = 0;
  double Pa = 1.0, Pj = 1.0, noise = 1.0, xi = 1.0;
  double k0 = kTwoPi;
  RVec theta_a, theta_j;
  CVec g_a, g_j;

  CMat T_hat;         // NM x NM
  CMat D_a, D_j;      // NM x M L_z, blockdiag(delta(theta))
  CMat A_a, A_j;      // M L_z x M L_z, diag(a_m(theta_l))
  CVec G_a, G_j;      // stacked gains
  CVec R_a, R_j;      // diagonal of R_hat_z: j k0 (m+1) d, purely imaginary
  CMat F_a, F_j;

  CVec channel_alice() const { return F_a * G_a; }
  CVec channel_jam() const { return F_j * G_j; }
  // rows of antenna m
  CMat projector(int m) const;
};

StackedModel build_stacked_model(const array::ScenarioConfig& s, const RVec& theta_a, const CVec& g_a,
                                 const RVec& theta_j, const CVec& g_j);
StackedModel build_stacked_model(const array::ScenarioConfig& s, const est::EstimationResult& e);

// How the CSI error of one source enters the stacked model.
//   stacked:  Delta G free in the M L ball of radius sqrt(M) rho_g
//   per_path: Delta G = 1_M (x) dg with ||dg|| <= rho_g (the structure the
//             stacking actually has; tighter and smaller)
enum class CsiBall { stacked, per_path };

// First-order error carriers of one source. The perturbed stacked gain is
// G + U_g e + E x, ||e|| <= r_g, ||x|| <= r_theta, with E = R_hat diag(G) (1_M (x) I_L).
struct LinearizedErrors {
  CMat U_g;  // M L x p_g
  CMat E;    // M L x L
  double r_g = 0.0;
  double r_theta = 0.0;
  std::vector<std::string> warnings;
};

LinearizedErrors linearize_errors(const StackedModel& model, bool alice, const ErrorBall& ball,
                                  CsiBall mode = CsiBall::stacked);

// exp(-j k0 (r + d) dtheta) against 1 - j k0 (r + d) dtheta.
double first_order_phasor_error(double aperture, double dtheta, double k0);
double first_order_phasor_bound(double aperture, double rho, double k0);

// Variable indices of the robust SDP.
struct LmiVars {
  int V = -1;
  int b = -1;
  int alpha1 = -1, beta1 = -1;  // signal block multipliers
  int alpha2 = -1, beta2 = -1;  // jam block multipliers
  std::vector<int> eta1, eta2;  // blocking multipliers per antenna
  // Set by build_feasibility_problem: model value = unit[k] * solver value.
  std::vector<double> unit;
};

struct LmiOptions {
  CsiBall csi_ball = CsiBall::stacked;
};

// P_a W^H F^H V F W + diag(a1 I, -gamma b - a1 r_g^2 - b1 r_t^2, b1 I), W = [U_g, G, E].
// Rows of a zero radius are dropped.
conic::AffineBlock assemble_signal_lmi(const StackedModel& m, const ErrorBalls& balls, double gamma,
                                       const LmiVars& v, const LmiOptions& o = {});
// -P_j W^H F^H V F W + diag(a2 I, b - sigma^2 - a2 r_g^2 - b2 r_t^2, b2 I).
conic::AffineBlock assemble_jam_lmi(const StackedModel& m, const ErrorBalls& balls, const LmiVars& v,
                                    const LmiOptions& o = {});
// Per antenna, over y = [e_a; 1; e_j] with ||e_z|| <= rho_theta sigma_z + rho_g:
//   xi P_a |.. (G_a + e_a)|^2 - P_j |.. (G_j + e_j)|^2 >= 0.
std::vector<conic::AffineBlock> assemble_blocking_lmis(const StackedModel& m, const ErrorBalls& balls,
                                                       const LmiVars& v);

struct FeasibilityOptions {
  LmiOptions lmi;
  bool blocking = true;
  conic::SolverOptions solver;
};

struct Feasibility {
  bool feasible = false;
  conic::SolveStatus status = conic::SolveStatus::numerical_failure;
  double margin = 0.0;
  CMat V;
  double b = 0.0;
  std::vector<double> multipliers;  // alpha1 beta1 alpha2 beta2 eta1.. eta2..
  int iterations = 0;
};

// The full SDP at fixed gamma with its variable map (for inspection/tests).
conic::SdpProblem build_feasibility_problem(const StackedModel& m, const ErrorBalls& balls, double gamma,
                                            const FeasibilityOptions& o, LmiVars* vars, int* margin_var);
// Maximizes the common margin s <= 1 of every LMI; feasible iff s >= 0.
Feasibility feasibility_sdp(double gamma, const StackedModel& m, const ErrorBalls& balls,
                            const FeasibilityOptions& o = {});

struct BisectionResult {
  double gamma = 0.0;      // largest feasible target found
  double gamma_upper = 0.0;
  double gamma_max = 0.0;  // initial upper end
  double kappa = 0.0;
  int iterations = 0;
  CMat V;
  bool found_feasible = false;  // some gamma > 0 was feasible
  bool blocking_relaxed = false;
  int ipm_iterations = 0;
  std::vector<double> tested;
  std::vector<bool> outcomes;
};

// gamma_max defaults to P_a M^2 N^2 L_a^2 / sigma^2.
BisectionResult bisection_search(const StackedModel& m, const ErrorBalls& balls, double kappa,
                                 const FeasibilityOptions& o = {}, double gamma_max = 0.0);
int expected_bisection_iterations(double gamma_max, double kappa);

struct Rank1Options {
  double rank_threshold = 1e-6;
  int samples = 64;
  std::uint64_t seed = 1;
  bool check_blocking = true;  // discard samples violating a nominal blocking constraint
};

struct Rank1Result {
  CVec v;
  bool rank_one = false;
  double eigen_ratio = 0.0;
  double score = 0.0;
  int feasible_samples = 0;
};

// Nominal SINR of a unit-modulus v on the model, and per-antenna blocking
// margins xi P_a |s_m|^2 - P_j |j_m|^2 normalised by xi P_a |s_m|^2 + P_j |j_m|^2.
double model_sinr(const StackedModel& m, const CVec& v);
RVec blocking_margins(const StackedModel& m, const CVec& v);

Rank1Result extract_rank1(const CMat& V, const StackedModel& m, const Rank1Options& o = {});
// Variant without a model: samples scored by v^H V v.
Rank1Result extract_rank1(const CMat& V, const Rank1Options& o = {});

struct DiscreteResult {
  Eigen::MatrixXi indices;  // M x N, phase = 2 pi idx / 2^B
  CMat phases;              // M x N unit-modulus omega
  CVec weights;             // M
  std::vector<double> trace;  // E-bar per iteration
  int iterations = 0;
  bool rejected_update = false;

  CVec stacked() const;  // w_m omega_mn in element order
};

// Alternating projection of v (unit modulus, length M N) onto B-bit phase
// shifts plus one antenna weight each.
DiscreteResult discretize(const CVec& v_opt, int M, int N, int bits, const CVec& w_init = CVec(),
                          double eps = 1e-4, int max_iterations = 50);
double discretization_objective(const CVec& v_opt, const CMat& phases, const CVec& weights);

// Exact perturbed channels: `boundary` draws on the sphere of both balls and
// `interior` uniform inside them. Angles are clamped to [-pi/2, pi/2].
struct ChannelDraw {
  CVec ca, cj;
};
std::vector<ChannelDraw> draw_channels(const array::ScenarioConfig& s, const StackedModel& m, const ErrorBalls& balls,
                                       int boundary, int interior, std::uint64_t seed);

// Score of a candidate over the nominal channel plus a fixed set of exact
// perturbed channels drawn from the error balls (the nominal one alone when
// both radii are zero): worst-case SINR and per-antenna blocking margins.
struct SurrogateScore {
  double sinr = 0.0;
  double soft = 0.0;          // nominal signal over the jam bound; breaks ties when sinr is 0
  double blocking_min = 0.0;  // smallest normalised per-antenna margin
  double violation = 0.0;     // sum of the negative margins
  bool blocking_ok() const { return blocking_min >= 0.0; }
};
struct RefineOptions;
SurrogateScore surrogate_score(const array::ScenarioConfig& s, const StackedModel& m, const ErrorBalls& balls,
                               const CVec& v, const RefineOptions& o);
// true when a is preferred: blocking feasibility first, then SINR (or margin).
// A zero SINR bound means the signal ball reaches the origin; `soft` orders those.
bool better(const SurrogateScore& a, const SurrogateScore& b, bool check_blocking);

struct RefineOptions {
  bool enabled = true;
  int sweeps = 30;
  int grid = 16;               // candidate phases per element, then golden-section
  int weight_grid = 9;         // candidate antenna-weight phases (discrete)
  bool pair_moves = true;
  int kicks = 8;               // discrete: random perturb-and-refine restarts      // discrete: try joint changes of two elements at a local optimum
  bool check_blocking = true;
  int samples = 64;            // perturbed channels in the surrogate
  std::uint64_t seed = 7;
};

// Coordinate ascent of the surrogate over element phases of a unit-modulus v.
CVec refine_continuous(const array::ScenarioConfig& s, const StackedModel& m, const ErrorBalls& balls, const CVec& v,
                       const RefineOptions& o = {});
// Same over the discrete states and the clamped antenna-weight phases.
// Never returns a configuration scoring worse than the input.
void refine_discrete(const array::ScenarioConfig& s, const StackedModel& m, const ErrorBalls& balls, int bits,
                     DiscreteResult& d, const RefineOptions& o = {});

// Certificate for a fixed v: the smallest worst-case signal power and largest
// worst-case jam-plus-noise power implied by the LMIs, and their ratio.
struct Certificate {
  double signal = 0.0;
  double jam_plus_noise = 0.0;
  double gamma = 0.0;
};
Certificate certify(const StackedModel& m, const ErrorBalls& balls, const CVec& v, const LmiOptions& o = {});

struct WorstCaseSample {
  double min_sinr = 0.0;
  double mean_sinr = 0.0;
  double blocking_feasible_fraction = 1.0;
  int samples = 64;
};

// Exact (not linearised) SINR of v over perturbed angles/gains: `boundary`
// draws on the sphere of both balls and `interior` uniform inside them.
WorstCaseSample sample_worst_case(const array::ScenarioConfig& s, const StackedModel& m, const ErrorBalls& balls,
                                  const CVec& v, int boundary, int interior, std::uint64_t seed);

struct RobustParams {
  double kappa_relative = 1e-6;  // kappa = kappa_relative * gamma_max
  double eps = 1e-4;
  int max_discrete_iterations = 50;
  Rank1Options rank1;
  FeasibilityOptions feasibility;
  int boundary_samples = 1000;
  int interior_samples = 1000;
  bool discretize = true;
  RefineOptions refine;
  std::uint64_t seed = 1;
};

struct BeamformerSolution {
  CVec v;                             // continuous, unit modulus
  array::RhaConfiguration discrete;   // omega in Psi, weights
  Eigen::MatrixXi phase_indices;
  double gamma_star = 0.0;            // bisection result (SDR)
  Certificate certificate;            // for the returned continuous v
  WorstCaseSample sampled;
  double first_order_slack_db = 0.0;  // max(0, certified - sampled worst) in dB
  double sinr_continuous = 0.0;       // nominal on the model
  double sinr_discrete = 0.0;
  RVec blocking_margins;              // discrete configuration, nominal
  std::vector<double> e_trace;
  BisectionResult bisection;
  Rank1Result rank1;
  std::vector<std::string> warnings;
};

BeamformerSolution solve_robust(const array::ScenarioConfig& s, const StackedModel& m, const ErrorBalls& balls,
                                const RobustParams& p = {});
BeamformerSolution solve_robust(const array::ScenarioConfig& s, const est::EstimationResult& e,
                                const RobustParams& p = {});

std::string to_json(const BeamformerSolution& sol, int bits);

}  // namespace rha::robust
