// Translation of the modeling layer into the standard conic pair.
//
// dual lowering:   every scalar and every free Hermitian parameter becomes an
//                  entry of y; PSD blocks are the dual slack Z.
// primal lowering: matrix variables that appear bare in a PSD block become
//                  cone variables, other blocks get slack cones tied by
//                  entrywise equalities. Cheaper when the matrix variables are
//                  large but the remaining blocks are tiny.

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "conic_internal.hpp"
#include "rha/conic.hpp"

namespace rha::conic {
namespace detail {

std::vector<HermParam> hermitian_params(int n, bool include_diagonal) {
  std::vector<HermParam> out;
  if (include_diagonal)
    for (int k = 0; k < n; ++k) out.push_back({k, k, 0});
  for (int q = 0; q < n; ++q)
    for (int p = 0; p < q; ++p) {
      out.push_back({p, q, 1});
      out.push_back({p, q, 2});
    }
  return out;
}

std::vector<Triplet> basis_triplets(const HermParam& h) {
  switch (h.kind) {
    case 0: return {{h.p, h.p, 1.0}};
    case 1: return {{h.p, h.q, 1.0}, {h.q, h.p, 1.0}};
    default: return {{h.p, h.q, kJ}, {h.q, h.p, -kJ}};
  }
}

std::vector<Triplet> component_triplets(const HermParam& h) {
  switch (h.kind) {
    case 0: return {{h.p, h.p, 1.0}};
    case 1: return {{h.p, h.q, 0.5}, {h.q, h.p, 0.5}};
    default: return {{h.p, h.q, 0.5 * kJ}, {h.q, h.p, -0.5 * kJ}};
  }
}

}  // namespace detail

namespace {

using namespace detail;

double comp_of(const std::vector<Triplet>& A, const CMat& H) {
  // Re tr(A H) with A given by triplets
  cd s = 0.0;
  for (const Triplet& t : A) s += t.value * H(t.col, t.row);
  return s.real();
}

CMat herm_part(const CMat& W) { return 0.5 * (W + W.adjoint()); }

CMat base_matrix(const MatrixVar& mv) {
  CMat V0 = CMat::Zero(mv.dim, mv.dim);
  if (mv.fixed_diagonal) V0.diagonal() = mv.fixed_diagonal->cast<cd>();
  return V0;
}

struct Lowered {
  ConicForm form;
  Lowering kind = Lowering::dual;
  double sign = 1.0;
  double offset = 0.0;
  // dual lowering: y offsets
  std::vector<int> matrix_offset;
  std::vector<std::vector<HermParam>> params;
  // primal lowering: positions
  std::vector<int> scalar_slot;     // lp column (nonnegative) or lambda index (free)
  std::vector<int> matrix_block;    // psd block index of each matrix variable
};

bool is_identity(const CMat& K) {
  if (K.rows() != K.cols()) return false;
  return (K - CMat::Identity(K.rows(), K.cols())).cwiseAbs().maxCoeff() < 1e-15;
}

bool is_bare(const AffineBlock& b) {
  if (b.congruences.size() != 1) return false;
  const Congruence& c = b.congruences[0];
  if (c.weight != 1.0 || !is_identity(c.K)) return false;
  if (b.constant.cwiseAbs().maxCoeff() != 0.0) return false;
  for (const auto& [k, H] : b.scalar_terms) {
    (void)k;
    if (H.cwiseAbs().maxCoeff() != 0.0) return false;
  }
  return true;
}

// Which block (if any) carries each matrix variable as a bare cone.
std::vector<int> bare_blocks(const SdpProblem& P) {
  std::vector<int> owner(P.matrices().size(), -1);
  for (std::size_t k = 0; k < P.blocks().size(); ++k) {
    const AffineBlock& b = P.blocks()[k];
    if (is_bare(b) && owner[b.congruences[0].var] < 0) owner[b.congruences[0].var] = static_cast<int>(k);
  }
  return owner;
}

long dual_size(const SdpProblem& P) {
  long m = static_cast<long>(P.scalars().size());
  for (const MatrixVar& mv : P.matrices()) m += static_cast<long>(hermitian_params(mv.dim, !mv.fixed_diagonal).size());
  return m;
}

long primal_size(const SdpProblem& P) {
  auto owner = bare_blocks(P);
  for (int o : owner)
    if (o < 0) return std::numeric_limits<long>::max();
  long m = 0;
  for (const MatrixVar& mv : P.matrices())
    if (mv.fixed_diagonal) m += mv.dim;
  std::vector<bool> used(P.blocks().size(), false);
  for (int o : owner) used[o] = true;
  for (std::size_t k = 0; k < P.blocks().size(); ++k)
    if (!used[k]) m += static_cast<long>(P.blocks()[k].dim()) * P.blocks()[k].dim();
  m += static_cast<long>(P.inequalities().size() + P.equalities().size());
  return m;
}

std::vector<bool> nonzero_rows(const CMat& K) {
  std::vector<bool> nz(K.rows());
  for (Eigen::Index r = 0; r < K.rows(); ++r) nz[r] = K.row(r).cwiseAbs().maxCoeff() > 0.0;
  return nz;
}

Lowered lower_dual(const SdpProblem& P) {
  Lowered L;
  L.kind = Lowering::dual;
  const int ns = static_cast<int>(P.scalars().size());
  int m = ns;
  for (const MatrixVar& mv : P.matrices()) {
    L.matrix_offset.push_back(m);
    L.params.push_back(hermitian_params(mv.dim, !mv.fixed_diagonal));
    m += static_cast<int>(L.params.back().size());
  }
  ConicForm& F = L.form;
  F.m = m;
  std::vector<CMat> V0;
  for (const MatrixVar& mv : P.matrices()) V0.push_back(base_matrix(mv));

  // Linear rows as (constant part, coefficient vector over y).
  auto linear = [&](const LinearExpr& e, double& c0, RVec& a) {
    a = RVec::Zero(m);
    c0 = e.constant;
    for (const auto& [k, c] : e.scalar_terms) a(k) += c;
    for (const auto& [k, W] : e.matrix_terms) {
      c0 += (W.cwiseProduct(V0[k].transpose())).sum().real();
      const auto& prm = L.params[k];
      for (std::size_t j = 0; j < prm.size(); ++j) {
        auto E = basis_triplets(prm[j]);
        cd s = 0.0;
        for (const Triplet& t : E) s += t.value * W(t.col, t.row);
        a(L.matrix_offset[k] + static_cast<int>(j)) += s.real();
      }
    }
  };

  // Objective.
  {
    double c0;
    RVec a;
    linear(P.objective(), c0, a);
    F.b = a;
    L.offset = c0;
  }

  // LP block: nonnegative scalars and inequalities.
  std::vector<RVec> lp_cols;
  std::vector<double> lp_c;
  for (int k = 0; k < ns; ++k)
    if (P.scalars()[k].sign == ScalarSign::nonnegative) {
      RVec col = RVec::Zero(m);
      col(k) = -1.0;
      lp_cols.push_back(col);
      lp_c.push_back(0.0);
    }
  for (const LinearExpr& e : P.inequalities()) {
    double c0;
    RVec a;
    linear(e, c0, a);
    lp_cols.push_back(-a);
    lp_c.push_back(c0);
  }
  F.A_lp.resize(m, static_cast<Eigen::Index>(lp_cols.size()));
  F.c_lp.resize(static_cast<Eigen::Index>(lp_cols.size()));
  for (std::size_t j = 0; j < lp_cols.size(); ++j) {
    F.A_lp.col(j) = lp_cols[j];
    F.c_lp(j) = lp_c[j];
  }

  // Equalities.
  F.F.resize(static_cast<Eigen::Index>(P.equalities().size()), m);
  F.f.resize(static_cast<Eigen::Index>(P.equalities().size()));
  for (std::size_t r = 0; r < P.equalities().size(); ++r) {
    double c0;
    RVec a;
    linear(P.equalities()[r], c0, a);
    F.F.row(r) = a.transpose();
    F.f(r) = -c0;
  }

  // PSD blocks.
  for (const AffineBlock& b : P.blocks()) {
    PsdBlock blk;
    blk.dim = b.dim();
    blk.C = b.constant;
    if (!b.scalar_terms.empty()) {
      int car = blk.add_carrier(CMat::Identity(blk.dim, blk.dim), 1.0);
      // merge repeated scalar references
      std::vector<CMat> acc(ns);
      std::vector<bool> seen(ns, false);
      for (const auto& [k, H] : b.scalar_terms) {
        if (!seen[k]) acc[k] = CMat::Zero(blk.dim, blk.dim);
        seen[k] = true;
        acc[k] += H;
      }
      for (int k = 0; k < ns; ++k)
        if (seen[k]) blk.add_term(car, k, dense_to_triplets(-acc[k]));
    }
    for (const Congruence& c : b.congruences) {
      blk.C += c.weight * (c.K.adjoint() * V0[c.var] * c.K);
      int car = blk.add_carrier(c.K, -c.weight);
      auto nz = nonzero_rows(c.K);
      const auto& prm = L.params[c.var];
      for (std::size_t j = 0; j < prm.size(); ++j) {
        if (!nz[prm[j].p] || !nz[prm[j].q]) continue;
        blk.add_term(car, L.matrix_offset[c.var] + static_cast<int>(j), basis_triplets(prm[j]));
      }
    }
    blk.C = herm_part(blk.C);
    F.psd.push_back(std::move(blk));
  }
  L.sign = 1.0;
  return L;
}

Lowered lower_primal(const SdpProblem& P) {
  Lowered L;
  L.kind = Lowering::primal;
  ConicForm& F = L.form;
  const auto owner = bare_blocks(P);
  const int ns = static_cast<int>(P.scalars().size());

  // Cone blocks for matrix variables first.
  L.matrix_block.resize(P.matrices().size());
  for (std::size_t v = 0; v < P.matrices().size(); ++v) {
    PsdBlock blk;
    blk.dim = P.matrices()[v].dim;
    blk.C = CMat::Zero(blk.dim, blk.dim);
    blk.add_carrier(CMat::Identity(blk.dim, blk.dim), 1.0);  // carrier 0: identity
    L.matrix_block[v] = static_cast<int>(F.psd.size());
    F.psd.push_back(std::move(blk));
  }
  std::vector<bool> bare_used(P.blocks().size(), false);
  for (int o : owner) bare_used[o] = true;

  // LP columns and free variables.
  int nlp = 0, nfree = 0;
  L.scalar_slot.resize(ns);
  for (int k = 0; k < ns; ++k)
    L.scalar_slot[k] = (P.scalars()[k].sign == ScalarSign::nonnegative) ? nlp++ : nfree++;
  std::vector<int> block_lp(P.blocks().size(), -1), block_psd(P.blocks().size(), -1);
  for (std::size_t k = 0; k < P.blocks().size(); ++k) {
    if (bare_used[k]) continue;
    if (P.blocks()[k].dim() == 1) {
      block_lp[k] = nlp++;
    } else {
      PsdBlock blk;
      blk.dim = P.blocks()[k].dim();
      blk.C = CMat::Zero(blk.dim, blk.dim);
      blk.add_carrier(CMat::Identity(blk.dim, blk.dim), 1.0);
      block_psd[k] = static_cast<int>(F.psd.size());
      F.psd.push_back(std::move(blk));
    }
  }
  std::vector<int> ineq_lp(P.inequalities().size());
  for (auto& s : ineq_lp) s = nlp++;

  const long m = primal_size(P);
  F.m = static_cast<int>(m);
  F.b = RVec::Zero(m);
  F.A_lp = RMat::Zero(m, nlp);
  F.c_lp = RVec::Zero(nlp);
  F.F = RMat::Zero(nfree, m);
  F.f = RVec::Zero(nfree);

  auto add_scalar_coef = [&](int k, int row, double c) {
    if (P.scalars()[k].sign == ScalarSign::nonnegative)
      F.A_lp(row, L.scalar_slot[k]) += c;
    else
      F.F(L.scalar_slot[k], row) += c;
  };
  // <herm(W), V> on the cone block of matrix variable v, identity carrier.
  auto add_trace_coef = [&](int v, int row, const CMat& W, double scale) {
    PsdBlock& blk = F.psd[L.matrix_block[v]];
    blk.add_term(0, row, dense_to_triplets(scale * herm_part(W)));
  };

  int row = 0;
  for (std::size_t v = 0; v < P.matrices().size(); ++v) {
    const MatrixVar& mv = P.matrices()[v];
    if (!mv.fixed_diagonal) continue;
    for (int k = 0; k < mv.dim; ++k) {
      F.psd[L.matrix_block[v]].add_term(0, row, {{k, k, 1.0}});
      F.b(row) = (*mv.fixed_diagonal)(k);
      ++row;
    }
  }

  for (std::size_t k = 0; k < P.blocks().size(); ++k) {
    if (bare_used[k]) continue;
    const AffineBlock& b = P.blocks()[k];
    const int n = b.dim();
    const auto prm = hermitian_params(n, true);
    // one carrier per congruence term, living on the variable's cone block
    std::vector<int> cars;
    for (const Congruence& c : b.congruences)
      cars.push_back(F.psd[L.matrix_block[c.var]].add_carrier(c.K.adjoint(), c.weight));
    for (const HermParam& h : prm) {
      auto A = component_triplets(h);
      F.b(row) = comp_of(A, b.constant);
      if (block_lp[k] >= 0)
        F.A_lp(row, block_lp[k]) += 1.0;
      else
        F.psd[block_psd[k]].add_term(0, row, A);
      for (const auto& [s, H] : b.scalar_terms) add_scalar_coef(s, row, -comp_of(A, H));
      for (std::size_t t = 0; t < b.congruences.size(); ++t) {
        std::vector<Triplet> neg = A;
        for (auto& e : neg) e.value = -e.value;
        F.psd[L.matrix_block[b.congruences[t].var]].add_term(cars[t], row, std::move(neg));
      }
      ++row;
    }
  }

  for (std::size_t i = 0; i < P.inequalities().size(); ++i) {
    const LinearExpr& e = P.inequalities()[i];
    F.A_lp(row, ineq_lp[i]) += 1.0;
    for (const auto& [s, c] : e.scalar_terms) add_scalar_coef(s, row, -c);
    for (const auto& [v, W] : e.matrix_terms) add_trace_coef(v, row, W, -1.0);
    F.b(row) = e.constant;
    ++row;
  }
  for (const LinearExpr& e : P.equalities()) {
    for (const auto& [s, c] : e.scalar_terms) add_scalar_coef(s, row, c);
    for (const auto& [v, W] : e.matrix_terms) add_trace_coef(v, row, W, 1.0);
    F.b(row) = -e.constant;
    ++row;
  }

  // Objective: min -(obj).
  const LinearExpr& obj = P.objective();
  for (const auto& [s, c] : obj.scalar_terms) {
    if (P.scalars()[s].sign == ScalarSign::nonnegative)
      F.c_lp(L.scalar_slot[s]) -= c;
    else
      F.f(L.scalar_slot[s]) -= c;
  }
  for (const auto& [v, W] : obj.matrix_terms) F.psd[L.matrix_block[v]].C -= herm_part(W);
  L.sign = -1.0;
  L.offset = obj.constant;
  return L;
}

struct Extracted {
  std::vector<double> x;
  std::vector<CMat> V;
  std::vector<CMat> multipliers;
};

Extracted extract(const SdpProblem& P, const Lowered& L, const IpmResult& r) {
  Extracted out;
  const int ns = static_cast<int>(P.scalars().size());
  out.x.resize(ns);
  if (L.kind == Lowering::dual) {
    for (int k = 0; k < ns; ++k) out.x[k] = r.y(k);
    for (std::size_t v = 0; v < P.matrices().size(); ++v) {
      CMat V = base_matrix(P.matrices()[v]);
      const auto& prm = L.params[v];
      for (std::size_t j = 0; j < prm.size(); ++j)
        for (const Triplet& t : basis_triplets(prm[j])) V(t.row, t.col) += r.y(L.matrix_offset[v] + static_cast<int>(j)) * t.value;
      out.V.push_back(V);
    }
    out.multipliers = r.X;
  } else {
    for (int k = 0; k < ns; ++k)
      out.x[k] = (P.scalars()[k].sign == ScalarSign::nonnegative) ? r.x_lp(L.scalar_slot[k]) : r.lam(L.scalar_slot[k]);
    for (std::size_t v = 0; v < P.matrices().size(); ++v) out.V.push_back(r.X[L.matrix_block[v]]);
    out.multipliers = r.Z;
  }
  return out;
}

void fill_violations(const SdpProblem& P, SdpSolution& s) {
  double psd = 0.0, lin = 0.0;
  for (const AffineBlock& b : P.blocks()) {
    CMat B = P.evaluate(b, s.scalars, s.matrices);
    Eigen::SelfAdjointEigenSolver<CMat> es(B, Eigen::EigenvaluesOnly);
    psd = std::max(psd, -es.eigenvalues().minCoeff());
  }
  for (const LinearExpr& e : P.equalities()) lin = std::max(lin, std::abs(P.evaluate(e, s.scalars, s.matrices)));
  for (const LinearExpr& e : P.inequalities()) lin = std::max(lin, -P.evaluate(e, s.scalars, s.matrices));
  for (std::size_t k = 0; k < P.scalars().size(); ++k)
    if (P.scalars()[k].sign == ScalarSign::nonnegative) lin = std::max(lin, -s.scalars[k]);
  for (std::size_t v = 0; v < P.matrices().size(); ++v)
    if (P.matrices()[v].fixed_diagonal)
      lin = std::max(lin, (s.matrices[v].diagonal().real() - *P.matrices()[v].fixed_diagonal).cwiseAbs().maxCoeff());
  s.max_psd_violation = std::max(0.0, psd);
  s.max_linear_violation = std::max(0.0, lin);
}

// Equality consistency in the dual parametrisation.
bool equalities_consistent(const SdpProblem& P, double tol) {
  if (P.equalities().empty()) return true;
  Lowered L = lower_dual(P);
  const RMat& F = L.form.F;
  const RVec& f = L.form.f;
  Eigen::CompleteOrthogonalDecomposition<RMat> cod(F);
  RVec y = cod.solve(f);
  return (F * y - f).norm() <= tol * (1.0 + f.norm()) * 10.0;
}

SdpProblem margin_problem(const SdpProblem& P, int& s_index) {
  SdpProblem Q;
  for (const ScalarVar& s : P.scalars()) Q.add_scalar(s.name, s.sign);
  for (const MatrixVar& mv : P.matrices()) Q.add_matrix(mv.name, mv.dim, mv.fixed_diagonal);
  s_index = Q.add_scalar("__margin", ScalarSign::free);
  for (AffineBlock b : P.blocks()) {
    b.scalar_terms.emplace_back(s_index, -CMat::Identity(b.dim(), b.dim()));
    Q.add_psd(std::move(b));
  }
  for (LinearExpr e : P.inequalities()) Q.add_inequality(std::move(e.add(s_index, -1.0)));
  for (const LinearExpr& e : P.equalities()) Q.add_equality(e);
  LinearExpr cap;
  cap.constant = 1.0;
  cap.add(s_index, -1.0);
  Q.add_inequality(cap);
  LinearExpr obj;
  obj.add(s_index, 1.0);
  Q.maximize(obj);
  return Q;
}

SdpSolution run(const SdpProblem& P, const SolverOptions& opt, bool allow_phase1);

SdpSolution phase1(const SdpProblem& P, const SolverOptions& opt, SdpSolution failed) {
  if (!equalities_consistent(P, opt.tol)) {
    failed.status = SolveStatus::infeasible;
    failed.phase1_margin = -std::numeric_limits<double>::infinity();
    return failed;
  }
  int s_index = -1;
  SdpProblem Q = margin_problem(P, s_index);
  SolverOptions o = opt;
  o.objective_threshold.reset();
  o.lowering = Lowering::automatic;
  SdpSolution q = run(Q, o, false);
  if (q.status == SolveStatus::optimal) {
    failed.phase1_margin = q.objective;
    if (q.objective < -std::max(1e3 * opt.tol, 1e-6)) {
      failed.status = SolveStatus::infeasible;
      failed.certificate = q.certificate;
    }
  }
  return failed;
}

SdpSolution run(const SdpProblem& P, const SolverOptions& opt, bool allow_phase1) {
  Lowering kind = opt.lowering;
  if (kind == Lowering::automatic) kind = primal_size(P) < dual_size(P) ? Lowering::primal : Lowering::dual;
  if (kind == Lowering::primal && primal_size(P) == std::numeric_limits<long>::max()) kind = Lowering::dual;
  Lowered L = (kind == Lowering::primal) ? lower_primal(P) : lower_dual(P);

  IpmOptions io;
  io.tol = opt.tol;
  io.max_iterations = opt.max_iterations;
  if (opt.objective_threshold) {
    io.early_stop = true;
    io.threshold = *opt.objective_threshold;
  }
  io.sign = L.sign;
  io.offset = L.offset;
  IpmResult r = ipm_solve(L.form, io);

  Extracted e = extract(P, L, r);
  SdpSolution s;
  s.scalars = e.x;
  s.matrices = e.V;
  s.certificate = e.multipliers;
  s.iterations = r.iterations;
  s.lowering_used = kind;
  s.objective = P.evaluate(P.objective(), s.scalars, s.matrices);
  const double feasible_side = (L.sign > 0) ? r.dobj : r.pobj;
  const double bound_side = (L.sign > 0) ? r.pobj : r.dobj;
  s.dual_bound = L.sign * bound_side + L.offset;
  (void)feasible_side;
  fill_violations(P, s);

  switch (r.status) {
    case IpmStatus::optimal:
      s.status = SolveStatus::optimal;
      break;
    case IpmStatus::early_feasible:
      s.status = SolveStatus::optimal;
      s.early_termination = true;
      break;
    case IpmStatus::early_bound:
      s.status = SolveStatus::optimal;
      s.early_termination = true;
      s.objective = s.dual_bound;
      break;
    default:
      s.status = SolveStatus::numerical_failure;
      if (allow_phase1 && opt.detect_infeasibility) return phase1(P, opt, std::move(s));
  }
  return s;
}

}  // namespace

SdpSolution solve(const SdpProblem& problem, const SolverOptions& options) {
  return run(problem, options, true);
}

SdpSolution solve(const SdpProblem& problem, double tol) {
  SolverOptions o;
  o.tol = tol;
  return solve(problem, o);
}

}  // namespace rha::conic
