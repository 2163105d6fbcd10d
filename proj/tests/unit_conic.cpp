#include <random>

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "rha/conic.hpp"

using namespace rha;
using namespace rha::conic;

namespace {

CMat random_hermitian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  CMat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = cd(N(rng), N(rng));
  return 0.5 * (A + A.adjoint());
}

CMat random_psd(int n, int rank, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  CMat B(n, rank);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < rank; ++j) B(i, j) = cd(N(rng), N(rng));
  return B * B.adjoint();
}

}  // namespace

TEST(Conic, TwoByTwoDeterminant) {
  SdpProblem P;
  int t = P.add_scalar("t");
  AffineBlock b;
  b.name = "det";
  b.constant = CMat::Identity(2, 2);
  CMat H = CMat::Zero(2, 2);
  H(0, 1) = H(1, 0) = 1.0;
  b.scalar_terms.emplace_back(t, H);
  P.add_psd(b);
  LinearExpr obj;
  obj.add(t, 1.0);
  P.maximize(obj);
  SdpSolution s = solve(P);
  ASSERT_EQ(s.status, SolveStatus::optimal);
  EXPECT_NEAR(s.scalars[t], 1.0, 1e-6);
  EXPECT_LE(s.objective, s.dual_bound + 1e-6);
}

TEST(Conic, TraceContradictionIsInfeasible) {
  SdpProblem P;
  int X = P.add_matrix("X", 2);
  AffineBlock b;
  b.name = "X";
  b.constant = CMat::Zero(2, 2);
  b.congruences.push_back({X, CMat::Identity(2, 2), 1.0});
  P.add_psd(b);
  LinearExpr tr;
  tr.constant = -1.0;
  tr.add_trace(X, CMat::Identity(2, 2));
  P.add_equality(tr);
  LinearExpr x11;
  x11.constant = -2.0;
  CMat E = CMat::Zero(2, 2);
  E(0, 0) = 1.0;
  x11.add_trace(X, E);
  P.add_equality(x11);
  P.maximize(LinearExpr{});
  SdpSolution s = solve(P);
  EXPECT_EQ(s.status, SolveStatus::infeasible);
  ASSERT_TRUE(s.phase1_margin.has_value());
  EXPECT_LT(*s.phase1_margin, -0.5);
}

TEST(Conic, InconsistentEqualitiesAreInfeasible) {
  SdpProblem P;
  int a = P.add_scalar("a");
  LinearExpr e1, e2;
  e1.add(a, 1.0).constant = -1.0;
  e2.add(a, 1.0).constant = -2.0;
  P.add_equality(e1);
  P.add_equality(e2);
  LinearExpr obj;
  obj.add(a, 1.0);
  P.maximize(obj);
  EXPECT_EQ(solve(P).status, SolveStatus::infeasible);
}

// Primal-dual certified instance: X* Z* = 0, C = Z* + sum y*_i A_i, b = A(X*).
class ConstructedSdp : public ::testing::TestWithParam<int> {};

TEST_P(ConstructedSdp, MatchesKnownOptimum) {
  std::mt19937_64 rng(1234 + GetParam());
  const int n = 5, m = 7, r = 2;
  // X* = U diag U^H on the first r eigvecs, Z* on the complement.
  Eigen::ComplexEigenSolver<CMat> ces(random_hermitian(n, rng));
  Eigen::HouseholderQR<CMat> qr(random_hermitian(n, rng) + cd(0, 1) * random_hermitian(n, rng));
  CMat U = qr.householderQ() * CMat::Identity(n, n);
  Eigen::VectorXd dx = Eigen::VectorXd::Zero(n), dz = Eigen::VectorXd::Zero(n);
  std::uniform_real_distribution<double> Uf(0.5, 2.0);
  for (int i = 0; i < r; ++i) dx(i) = Uf(rng);
  for (int i = r; i < n; ++i) dz(i) = Uf(rng);
  CMat Xs = U * dx.cast<cd>().asDiagonal() * U.adjoint();
  CMat Zs = U * dz.cast<cd>().asDiagonal() * U.adjoint();
  // LP part: x* = (1, 0), z* = (0, 1)
  std::normal_distribution<double> N;
  std::vector<CMat> A(m);
  RMat Alp(m, 2);
  RVec ys(m), b(m);
  for (int i = 0; i < m; ++i) {
    A[i] = random_hermitian(n, rng);
    Alp(i, 0) = N(rng);
    Alp(i, 1) = N(rng);
    ys(i) = N(rng);
  }
  CMat C = Zs;
  RVec clp(2);
  clp << 0.0, 1.0;
  for (int i = 0; i < m; ++i) {
    C += ys(i) * A[i];
    clp += ys(i) * Alp.row(i).transpose();
    b(i) = (A[i] * Xs).trace().real() + Alp(i, 0) * 1.0;
  }
  const double opt = b.dot(ys);

  // Dual form: max b'y s.t. C - sum y A >= 0, clp - Alp' y >= 0.
  SdpProblem D;
  std::vector<int> y(m);
  for (int i = 0; i < m; ++i) y[i] = D.add_scalar("y" + std::to_string(i));
  AffineBlock blk;
  blk.name = "slack";
  blk.constant = C;
  for (int i = 0; i < m; ++i) blk.scalar_terms.emplace_back(y[i], -A[i]);
  D.add_psd(blk);
  for (int l = 0; l < 2; ++l) {
    LinearExpr e;
    e.constant = clp(l);
    for (int i = 0; i < m; ++i) e.add(y[i], -Alp(i, l));
    D.add_inequality(e);
  }
  LinearExpr obj;
  for (int i = 0; i < m; ++i) obj.add(y[i], b(i));
  D.maximize(obj);
  SdpSolution sd = solve(D);
  ASSERT_EQ(sd.status, SolveStatus::optimal);
  EXPECT_NEAR(sd.objective, opt, 1e-6 * (1.0 + std::abs(opt)));
  EXPECT_LE(sd.objective, sd.dual_bound + 1e-6 * (1.0 + std::abs(opt)));

  // Primal form: max -<C,X> - clp'x s.t. A(X) + Alp x = b.
  SdpProblem Pp;
  int X = Pp.add_matrix("X", n);
  int x0 = Pp.add_scalar("x0", ScalarSign::nonnegative);
  int x1 = Pp.add_scalar("x1", ScalarSign::nonnegative);
  AffineBlock xb;
  xb.name = "X";
  xb.constant = CMat::Zero(n, n);
  xb.congruences.push_back({X, CMat::Identity(n, n), 1.0});
  Pp.add_psd(xb);
  for (int i = 0; i < m; ++i) {
    LinearExpr e;
    e.constant = -b(i);
    e.add_trace(X, A[i]).add(x0, Alp(i, 0)).add(x1, Alp(i, 1));
    Pp.add_equality(e);
  }
  LinearExpr pobj;
  pobj.add_trace(X, -C).add(x0, -clp(0)).add(x1, -clp(1));
  Pp.maximize(pobj);
  for (Lowering low : {Lowering::primal, Lowering::dual}) {
    SolverOptions o;
    o.lowering = low;
    SdpSolution sp = solve(Pp, o);
    ASSERT_EQ(sp.status, SolveStatus::optimal);
    EXPECT_NEAR(sp.objective, -opt, 1e-6 * (1.0 + std::abs(opt)));
    EXPECT_LE(sp.max_psd_violation, 1e-6);
    EXPECT_LE(sp.max_linear_violation, 1e-6);
    EXPECT_NEAR((sp.matrices[X] - Xs).norm(), 0.0, 1e-3);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, ConstructedSdp, ::testing::Range(0, 5));

TEST(Conic, CongruenceAndFixedDiagonal) {
  // max Re(v^H h)^2 relaxation: max <h h^H, V> s.t. diag(V) = 1, V psd
  // optimum = (sum |h_i|)^2 attained by V = u u^H with u_i = h_i/|h_i|.
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N;
  const int n = 4;
  CVec h(n);
  for (int i = 0; i < n; ++i) h(i) = cd(N(rng), N(rng));
  for (Lowering low : {Lowering::primal, Lowering::dual}) {
    SdpProblem P;
    int V = P.add_matrix("V", n, RVec::Ones(n));
    AffineBlock b;
    b.name = "V";
    b.constant = CMat::Zero(n, n);
    b.congruences.push_back({V, CMat::Identity(n, n), 1.0});
    P.add_psd(b);
    LinearExpr obj;
    obj.add_trace(V, h * h.adjoint());
    P.maximize(obj);
    SolverOptions o;
    o.lowering = low;
    SdpSolution s = solve(P, o);
    ASSERT_EQ(s.status, SolveStatus::optimal);
    double expect = std::pow(h.cwiseAbs().sum(), 2);
    EXPECT_NEAR(s.objective, expect, 1e-6 * expect);
  }
}

TEST(Conic, ObjectiveThresholdStopsEarly) {
  SdpProblem P;
  int t = P.add_scalar("t");
  AffineBlock b;
  b.name = "det";
  b.constant = CMat::Identity(2, 2);
  CMat H = CMat::Zero(2, 2);
  H(0, 1) = H(1, 0) = 1.0;
  b.scalar_terms.emplace_back(t, H);
  P.add_psd(b);
  LinearExpr obj;
  obj.add(t, 1.0);
  P.maximize(obj);
  SolverOptions o;
  o.objective_threshold = 0.5;
  SdpSolution s = solve(P, o);
  ASSERT_EQ(s.status, SolveStatus::optimal);
  EXPECT_TRUE(s.early_termination);
  EXPECT_GE(s.objective, 0.5);
  o.objective_threshold = 1.5;
  s = solve(P, o);
  ASSERT_EQ(s.status, SolveStatus::optimal);
  EXPECT_LT(s.objective, 1.5);
}

TEST(Embedding, Identity) {
  RMat S = embed_hermitian(CMat::Identity(2, 2));
  EXPECT_TRUE(S.isApprox(RMat::Identity(4, 4)));
}

TEST(Embedding, KnownSpectrum) {
  CMat H(2, 2);
  H << 0.0, kJ, -kJ, 0.0;
  Eigen::SelfAdjointEigenSolver<RMat> es(embed_hermitian(H));
  RVec ev = es.eigenvalues();
  EXPECT_NEAR(ev(0), -1.0, 1e-12);
  EXPECT_NEAR(ev(1), -1.0, 1e-12);
  EXPECT_NEAR(ev(2), 1.0, 1e-12);
  EXPECT_NEAR(ev(3), 1.0, 1e-12);
}

TEST(Embedding, RandomSpectrumDoubles) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    CMat H = random_hermitian(6, rng);
    Eigen::SelfAdjointEigenSolver<CMat> ec(H);
    Eigen::SelfAdjointEigenSolver<RMat> er(embed_hermitian(H));
    for (int i = 0; i < 6; ++i) {
      EXPECT_NEAR(er.eigenvalues()(2 * i), ec.eigenvalues()(i), 1e-10);
      EXPECT_NEAR(er.eigenvalues()(2 * i + 1), ec.eigenvalues()(i), 1e-10);
    }
    RMat S = embed_hermitian(H);
    EXPECT_LE((embed_hermitian(extract_hermitian(S)) - S).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Embedding, RejectsNonHermitian) {
  CMat H = CMat::Zero(2, 2);
  H(0, 1) = 1.0;
  EXPECT_THROW(embed_hermitian(H), DomainError);
}

TEST(Conic, PsdIffEmbeddedPsd) {
  std::mt19937_64 rng(5);
  CMat H = random_psd(4, 2, rng);
  Eigen::SelfAdjointEigenSolver<RMat> er(embed_hermitian(H));
  EXPECT_GE(er.eigenvalues().minCoeff(), -1e-10);
}

TEST(Conic, JsonDumpIsSelfDescribing) {
  SdpProblem P;
  int t = P.add_scalar("t");
  AffineBlock b;
  b.name = "blk";
  b.constant = CMat::Identity(2, 2);
  b.scalar_terms.emplace_back(t, CMat::Identity(2, 2));
  P.add_psd(b);
  std::string s = dump_json(P);
  EXPECT_NE(s.find("\"psd_blocks\""), std::string::npos);
  EXPECT_NE(s.find("\"re\""), std::string::npos);
}
