#include <cmath>
#include <string>

#include "rha/robust.hpp"

namespace rha::robust {

void ErrorBall::validate() const {
  if (!(angle >= 0.0) || !(gain >= 0.0) || !(sigma >= 0.0)) throw DomainError("error radii must be nonnegative");
}

double ErrorBall::stacked_gain_radius(int M) const { return std::sqrt(static_cast<double>(M)) * gain; }

ErrorBalls balls_from(const est::EstimationResult& e) {
  ErrorBalls b;
  b.alice = {e.radii_alice.angle, e.radii_alice.gain, e.radii_alice.sigma};
  b.jam = {e.radii_jam.angle, e.radii_jam.gain, e.radii_jam.sigma};
  return b;
}

namespace {

void source_blocks(const array::ScenarioConfig& s, const RVec& th, const CVec& g, CMat& D, CMat& A, CVec& G, CVec& R) {
  const int M = s.num_antennas, N = s.elements_per_antenna, L = static_cast<int>(th.size());
  const RVec re = s.element_positions(), ra = s.antenna_positions();
  const double k0 = s.k0();
  D = CMat::Zero(static_cast<Eigen::Index>(M) * N, static_cast<Eigen::Index>(M) * L);
  A = CMat::Zero(M * L, M * L);
  G.resize(M * L);
  R.resize(M * L);
  for (int m = 0; m < M; ++m)
    for (int l = 0; l < L; ++l) {
      const int c = m * L + l;
      D.block(m * N, c, N, 1) = array::steering_vector(th(l), re, k0);
      A(c, c) = std::polar(1.0, -k0 * ra(m) * std::sin(th(l)));
      G(c) = g(l);
      // r_n + d_m <= (m + 1) d for every element of antenna m
      R(c) = kJ * (k0 * (m + 1) * s.antenna_spacing);
    }
}

}  // namespace

StackedModel build_stacked_model(const array::ScenarioConfig& s, const RVec& theta_a, const CVec& g_a,
                                 const RVec& theta_j, const CVec& g_j) {
  s.validate();
  if (theta_a.size() < 1 || theta_j.size() < 1) throw DimensionError("stacked model needs at least one path per source");
  if (theta_a.size() != g_a.size() || theta_j.size() != g_j.size())
    throw DimensionError("stacked model: angles and gains differ in length");
  StackedModel m;
  m.M = s.num_antennas;
  m.N = s.elements_per_antenna;
  m.La = static_cast<int>(theta_a.size());
  m.Lj = static_cast<int>(theta_j.size());
  m.Pa = s.signal_power;
  m.Pj = s.jam_power;
  m.noise = s.noise_power;
  m.xi = s.xi();
  m.k0 = s.k0();
  m.theta_a = theta_a;
  m.theta_j = theta_j;
  m.g_a = g_a;
  m.g_j = g_j;
  const CVec t = array::waveguide_taps(s);
  const Eigen::Index NM = static_cast<Eigen::Index>(m.M) * m.N;
  m.T_hat = CMat::Zero(NM, NM);
  for (int mm = 0; mm < m.M; ++mm) m.T_hat.diagonal().segment(mm * m.N, m.N) = t;
  source_blocks(s, theta_a, g_a, m.D_a, m.A_a, m.G_a, m.R_a);
  source_blocks(s, theta_j, g_j, m.D_j, m.A_j, m.G_j, m.R_j);
  m.F_a = m.T_hat * m.D_a * m.A_a;
  m.F_j = m.T_hat * m.D_j * m.A_j;
  return m;
}

StackedModel build_stacked_model(const array::ScenarioConfig& s, const est::EstimationResult& e) {
  return build_stacked_model(s, e.angles_alice, e.gains_alice, e.angles_jam, e.gains_jam);
}

CMat StackedModel::projector(int m) const {
  if (m < 0 || m >= M) throw DimensionError("antenna index out of range");
  CMat P = CMat::Zero(static_cast<Eigen::Index>(M) * N, static_cast<Eigen::Index>(M) * N);
  P.diagonal().segment(m * N, N).setOnes();
  return P;
}

LinearizedErrors linearize_errors(const StackedModel& model, bool alice, const ErrorBall& ball, CsiBall mode) {
  ball.validate();
  const int M = model.M, L = alice ? model.La : model.Lj;
  const CVec& G = alice ? model.G_a : model.G_j;
  const CVec& R = alice ? model.R_a : model.R_j;
  LinearizedErrors out;
  CMat rep = CMat::Zero(M * L, L);  // 1_M (x) I_L
  for (int m = 0; m < M; ++m) rep.block(m * L, 0, L, L).setIdentity();
  if (mode == CsiBall::stacked) {
    out.U_g = CMat::Identity(M * L, M * L);
    out.r_g = ball.stacked_gain_radius(M);
  } else {
    out.U_g = rep;
    out.r_g = ball.gain;
  }
  out.E = R.cwiseProduct(G).asDiagonal() * rep;
  out.r_theta = ball.angle;
  if (ball.angle > 0.2)
    out.warnings.push_back("angle radius " + std::to_string(ball.angle) +
                           " rad is beyond the range where the first-order pattern model is accurate");
  return out;
}

double first_order_phasor_error(double aperture, double dtheta, double k0) {
  const double x = k0 * aperture * dtheta;
  return std::abs(std::polar(1.0, -x) - cd(1.0, -x));
}

double first_order_phasor_bound(double aperture, double rho, double k0) {
  const double x = k0 * aperture * rho;
  return 0.5 * x * x;
}

}  // namespace rha::robust
