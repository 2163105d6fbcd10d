#include <cmath>
#include <string>

#include "rha/robust.hpp"

namespace rha::robust {

namespace {

// Layout of y = [e; 1; x] after dropping zero-radius parts.
struct Layout {
  int pe = 0, px = 0;
  int center() const { return pe; }
  int dim() const { return pe + 1 + px; }
};

CMat diag_marker(int n, int from, int count, double value) {
  CMat H = CMat::Zero(n, n);
  for (int i = 0; i < count; ++i) H(from + i, from + i) = value;
  return H;
}

// W = [U_g, G, E] restricted to the kept columns.
CMat carrier(const CMat& F, const CVec& G, const LinearizedErrors& lin, const Layout& lay) {
  CMat W(G.size(), lay.dim());
  if (lay.pe) W.leftCols(lay.pe) = lin.U_g;
  W.col(lay.center()) = G;
  if (lay.px) W.rightCols(lay.px) = lin.E;
  return F * W;
}

void check_hermitian(const conic::AffineBlock& b) {
  auto herm = [](const CMat& H) { return (H - H.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + H.cwiseAbs().maxCoeff()); };
  if (!herm(b.constant)) throw InternalError(b.name + ": constant part is not Hermitian");
  for (const auto& [k, H] : b.scalar_terms) {
    (void)k;
    if (!herm(H)) throw InternalError(b.name + ": scalar coefficient is not Hermitian");
  }
}

conic::AffineBlock quadratic_block(const std::string& name, const StackedModel& m, bool alice, const ErrorBall& ball,
                                   const LmiOptions& o, double weight, int alpha, int beta, Layout& lay) {
  const LinearizedErrors lin = linearize_errors(m, alice, ball, o.csi_ball);
  lay.pe = lin.r_g > 0.0 ? static_cast<int>(lin.U_g.cols()) : 0;
  lay.px = lin.r_theta > 0.0 ? static_cast<int>(lin.E.cols()) : 0;
  const int n = lay.dim(), c = lay.center();
  const CMat& F = alice ? m.F_a : m.F_j;
  const CVec& G = alice ? m.G_a : m.G_j;
  const double P = alice ? m.Pa : m.Pj;

  conic::AffineBlock blk;
  blk.name = name;
  blk.constant = CMat::Zero(n, n);
  blk.congruences.push_back({-1, std::sqrt(P) * carrier(F, G, lin, lay), weight});
  if (lay.pe) {
    if (alpha < 0) throw InternalError(name + ": missing CSI multiplier");
    CMat H = diag_marker(n, 0, lay.pe, 1.0);
    H(c, c) = -lin.r_g * lin.r_g;
    blk.scalar_terms.emplace_back(alpha, H);
  }
  if (lay.px) {
    if (beta < 0) throw InternalError(name + ": missing angle multiplier");
    CMat H = diag_marker(n, c + 1, lay.px, 1.0);
    H(c, c) = -lin.r_theta * lin.r_theta;
    blk.scalar_terms.emplace_back(beta, H);
  }
  return blk;
}

}  // namespace

conic::AffineBlock assemble_signal_lmi(const StackedModel& m, const ErrorBalls& balls, double gamma, const LmiVars& v,
                                       const LmiOptions& o) {
  if (!(gamma >= 0.0)) throw DomainError("target SINR must be nonnegative");
  Layout lay;
  conic::AffineBlock blk = quadratic_block("signal", m, true, balls.alice, o, 1.0, v.alpha1, v.beta1, lay);
  blk.congruences[0].var = v.V;
  const int n = lay.dim(), c = lay.center();
  if (gamma > 0.0) {
    CMat H = CMat::Zero(n, n);
    H(c, c) = -gamma;
    blk.scalar_terms.emplace_back(v.b, H);
  }
  check_hermitian(blk);
  return blk;
}

conic::AffineBlock assemble_jam_lmi(const StackedModel& m, const ErrorBalls& balls, const LmiVars& v,
                                    const LmiOptions& o) {
  Layout lay;
  conic::AffineBlock blk = quadratic_block("jam", m, false, balls.jam, o, -1.0, v.alpha2, v.beta2, lay);
  blk.congruences[0].var = v.V;
  const int n = lay.dim(), c = lay.center();
  blk.constant(c, c) = -m.noise;
  CMat H = CMat::Zero(n, n);
  H(c, c) = 1.0;
  blk.scalar_terms.emplace_back(v.b, H);
  check_hermitian(blk);
  return blk;
}

std::vector<conic::AffineBlock> assemble_blocking_lmis(const StackedModel& m, const ErrorBalls& balls,
                                                       const LmiVars& v) {
  balls.alice.validate();
  balls.jam.validate();
  const double ra = balls.alice.total_radius(), rj = balls.jam.total_radius();
  const int pa = ra > 0.0 ? m.La : 0, pj = rj > 0.0 ? m.Lj : 0;
  const int n = pa + 1 + pj, c = pa;
  std::vector<conic::AffineBlock> out;
  for (int mm = 0; mm < m.M; ++mm) {
    const CMat Pm = m.projector(mm);
    CMat Wa = CMat::Zero(m.M * m.La, n), Wj = CMat::Zero(m.M * m.Lj, n);
    if (pa) Wa.block(mm * m.La, 0, m.La, m.La).setIdentity();
    Wa.col(c) = m.G_a;
    if (pj) Wj.block(mm * m.Lj, c + 1, m.Lj, m.Lj).setIdentity();
    Wj.col(c) = m.G_j;
    conic::AffineBlock blk;
    blk.name = "blocking_" + std::to_string(mm);
    blk.constant = CMat::Zero(n, n);
    blk.congruences.push_back({v.V, std::sqrt(m.xi * m.Pa) * (Pm * m.F_a * Wa), 1.0});
    blk.congruences.push_back({v.V, std::sqrt(m.Pj) * (Pm * m.F_j * Wj), -1.0});
    if (pa) {
      CMat H = diag_marker(n, 0, pa, 1.0);
      H(c, c) = -ra * ra;
      blk.scalar_terms.emplace_back(v.eta1.at(mm), H);
    }
    if (pj) {
      CMat H = diag_marker(n, c + 1, pj, 1.0);
      H(c, c) = -rj * rj;
      blk.scalar_terms.emplace_back(v.eta2.at(mm), H);
    }
    check_hermitian(blk);
    out.push_back(std::move(blk));
  }
  return out;
}

conic::SdpProblem build_feasibility_problem(const StackedModel& m, const ErrorBalls& balls, double gamma,
                                            const FeasibilityOptions& o, LmiVars* vars, int* margin_var) {
  using conic::ScalarSign;
  conic::SdpProblem P;
  LmiVars v;
  const int NM = m.M * m.N;
  v.V = P.add_matrix("V", NM, RVec::Ones(NM));
  v.b = P.add_scalar("b");
  const bool sig_g = balls.alice.gain > 0, sig_t = balls.alice.angle > 0;
  const bool jam_g = balls.jam.gain > 0, jam_t = balls.jam.angle > 0;
  if (sig_g) v.alpha1 = P.add_scalar("alpha1", ScalarSign::nonnegative);
  if (sig_t) v.beta1 = P.add_scalar("beta1", ScalarSign::nonnegative);
  if (jam_g) v.alpha2 = P.add_scalar("alpha2", ScalarSign::nonnegative);
  if (jam_t) v.beta2 = P.add_scalar("beta2", ScalarSign::nonnegative);
  if (o.blocking) {
    for (int mm = 0; mm < m.M; ++mm) {
      v.eta1.push_back(balls.alice.total_radius() > 0 ? P.add_scalar("eta1_" + std::to_string(mm), ScalarSign::nonnegative) : -1);
      v.eta2.push_back(balls.jam.total_radius() > 0 ? P.add_scalar("eta2_" + std::to_string(mm), ScalarSign::nonnegative) : -1);
    }
  }
  const int s = P.add_scalar("margin");

  conic::AffineBlock vb;
  vb.name = "V";
  vb.constant = CMat::Zero(NM, NM);
  vb.congruences.push_back({v.V, CMat::Identity(NM, NM), 1.0});
  P.add_psd(vb);

  std::vector<conic::AffineBlock> blocks;
  blocks.push_back(assemble_signal_lmi(m, balls, gamma, v, o.lmi));
  blocks.push_back(assemble_jam_lmi(m, balls, v, o.lmi));
  if (o.blocking)
    for (auto& b : assemble_blocking_lmis(m, balls, v)) blocks.push_back(std::move(b));
  // Every block is divided by the size of its data so all blocks are O(1).
  // The multipliers (one block each) and b absorb the factor: the solver
  // sees x / unit, so their coefficients stay unscaled.
  auto data_scale = [](const conic::AffineBlock& b) {
    double scale = 1.0;
    for (const auto& c : b.congruences) scale += c.K.squaredNorm();
    return scale;
  };
  v.unit.assign(P.scalars().size(), 1.0);
  v.unit[v.b] = data_scale(blocks[1]);
  for (auto& b : blocks) {
    const double scale = data_scale(b);
    b.constant /= scale;
    for (auto& [k, H] : b.scalar_terms) {
      if (k == v.b)
        H *= v.unit[v.b] / scale;
      else
        v.unit[k] = scale;
    }
    for (auto& c : b.congruences) c.K /= std::sqrt(scale);
    b.scalar_terms.emplace_back(s, -CMat::Identity(b.dim(), b.dim()));
    P.add_psd(std::move(b));
  }
  conic::LinearExpr cap;
  cap.constant = 1.0;
  cap.add(s, -1.0);
  P.add_inequality(cap);
  conic::LinearExpr obj;
  obj.add(s, 1.0);
  P.maximize(obj);
  if (vars) *vars = v;
  if (margin_var) *margin_var = s;
  return P;
}

Feasibility feasibility_sdp(double gamma, const StackedModel& m, const ErrorBalls& balls, const FeasibilityOptions& o) {
  if (!(gamma >= 0.0)) throw DomainError("target SINR must be nonnegative");
  LmiVars v;
  int s = -1;
  conic::SdpProblem P = build_feasibility_problem(m, balls, gamma, o, &v, &s);
  conic::SolverOptions so = o.solver;
  so.objective_threshold = 0.0;
  so.detect_infeasibility = false;
  conic::SdpSolution sol = conic::solve(P, so);
  Feasibility f;
  f.status = sol.status;
  f.iterations = sol.iterations;
  f.margin = sol.objective;
  if (sol.status != conic::SolveStatus::optimal || sol.scalars.empty()) return f;
  f.feasible = sol.objective >= 0.0;
  f.V = sol.matrices[v.V];
  f.b = sol.scalars[v.b] * v.unit[v.b];
  auto get = [&](int k) { return k >= 0 ? sol.scalars[k] * v.unit[k] : 0.0; };
  f.multipliers = {get(v.alpha1), get(v.beta1), get(v.alpha2), get(v.beta2)};
  for (int k : v.eta1) f.multipliers.push_back(get(k));
  for (int k : v.eta2) f.multipliers.push_back(get(k));
  return f;
}

}  // namespace rha::robust
