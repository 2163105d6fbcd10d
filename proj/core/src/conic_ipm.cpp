// Infeasible primal-dual path-following method, HKM search direction with
// Mehrotra predictor-corrector. Complex Hermitian PSD blocks plus an LP block
// plus free primal variables handled through a saddle-point solve.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "conic_internal.hpp"

namespace rha::conic::detail {
namespace {

CMat herm(const CMat& A) { return 0.5 * (A + A.adjoint()); }

double inner(const CMat& A, const CMat& B) {
  // Re tr(A^H B) for Hermitian A, B.
  return (A.conjugate().cwiseProduct(B)).sum().real();
}

struct Workspace {
  const ConicForm& f;
  explicit Workspace(const ConicForm& form) : f(form) {}

  // A(X) for the PSD part
  RVec apply_A(const std::vector<CMat>& X) const {
    RVec out = RVec::Zero(f.m);
    for (std::size_t k = 0; k < f.psd.size(); ++k) {
      const PsdBlock& blk = f.psd[k];
      for (std::size_t c = 0; c < blk.carriers.size(); ++c) {
        const Carrier& car = blk.carriers[c];
        const CarrierTerms& tm = blk.terms[c];
        if (tm.constraint.empty()) continue;
        CMat P = car.K * X[k] * car.K.adjoint();
        for (std::size_t t = 0; t < tm.constraint.size(); ++t) {
          cd s = 0.0;
          for (const Triplet& e : tm.entries[t]) s += e.value * P(e.col, e.row);
          out(tm.constraint[t]) += car.weight * s.real();
        }
      }
    }
    return out;
  }

  std::vector<CMat> apply_At(const RVec& y) const {
    std::vector<CMat> out;
    out.reserve(f.psd.size());
    for (const PsdBlock& blk : f.psd) {
      CMat acc = CMat::Zero(blk.dim, blk.dim);
      for (std::size_t c = 0; c < blk.carriers.size(); ++c) {
        const Carrier& car = blk.carriers[c];
        const CarrierTerms& tm = blk.terms[c];
        if (tm.constraint.empty()) continue;
        CMat S = CMat::Zero(car.K.rows(), car.K.rows());
        for (std::size_t t = 0; t < tm.constraint.size(); ++t) {
          double yi = y(tm.constraint[t]);
          if (yi == 0.0) continue;
          for (const Triplet& e : tm.entries[t]) S(e.row, e.col) += yi * e.value;
        }
        acc.noalias() += car.weight * (car.K.adjoint() * S * car.K);
      }
      out.push_back(herm(acc));
    }
    return out;
  }

  // M_ij = Re tr(A_i X A_j Z^{-1}) summed over blocks, plus LP part.
  RMat schur(const std::vector<CMat>& X, const std::vector<CMat>& Zi, const RVec& x, const RVec& z) const {
    RMat M = RMat::Zero(f.m, f.m);
    for (std::size_t k = 0; k < f.psd.size(); ++k) {
      const PsdBlock& blk = f.psd[k];
      const std::size_t nc = blk.carriers.size();
      for (std::size_t c = 0; c < nc; ++c) {
        const CarrierTerms& ti = blk.terms[c];
        if (ti.constraint.empty()) continue;
        const Carrier& ci = blk.carriers[c];
        for (std::size_t c2 = 0; c2 < nc; ++c2) {
          const CarrierTerms& tj = blk.terms[c2];
          if (tj.constraint.empty()) continue;
          const Carrier& cj = blk.carriers[c2];
          CMat P = ci.K * X[k] * cj.K.adjoint();   // p_c x p_c2
          CMat Q = cj.K * Zi[k] * ci.K.adjoint();  // p_c2 x p_c
          const double w = ci.weight * cj.weight;
          for (std::size_t a = 0; a < ti.constraint.size(); ++a) {
            const auto& Ei = ti.entries[a];
            const int i = ti.constraint[a];
            for (std::size_t bb = 0; bb < tj.constraint.size(); ++bb) {
              const auto& Ej = tj.entries[bb];
              cd s = 0.0;
              for (const Triplet& e1 : Ei) {
                cd inner_sum = 0.0;
                for (const Triplet& e2 : Ej) inner_sum += e2.value * P(e1.col, e2.row) * Q(e2.col, e1.row);
                s += e1.value * inner_sum;
              }
              M(i, tj.constraint[bb]) += w * s.real();
            }
          }
        }
      }
    }
    if (f.A_lp.cols() > 0) {
      RVec d = x.cwiseQuotient(z);
      M.noalias() += f.A_lp * d.asDiagonal() * f.A_lp.transpose();
    }
    return 0.5 * (M + M.transpose());
  }
};

double max_step(const CMat& X, const CMat& dX) {
  Eigen::LLT<CMat> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  CMat Li = llt.matrixL().solve(CMat::Identity(X.rows(), X.cols()));
  CMat S = herm(Li * dX * Li.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(S, Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

double max_step_lp(const RVec& x, const RVec& dx) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
  return a;
}

CMat hermitian_inverse(const CMat& Z) {
  Eigen::LLT<CMat> llt(Z);
  CMat I = CMat::Identity(Z.rows(), Z.cols());
  return herm(llt.solve(I));
}

class SaddleSolver {
 public:
  bool factor(const RMat& M, const RMat& F) {
    const Eigen::Index m = M.rows();
    double scale = std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
    double reg = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      RMat Mr = M;
      if (reg > 0.0) Mr.diagonal().array() += reg;
      llt_.compute(Mr);
      if (llt_.info() == Eigen::Success) break;
      reg = (reg == 0.0) ? 1e-14 * scale : reg * 100.0;
      if (attempt == 7) return false;
    }
    p_ = F.rows();
    if (p_ > 0) {
      W_ = llt_.matrixL().solve(F.transpose());
      RMat S = W_.transpose() * W_;
      cod_.compute(S);
    }
    (void)m;
    return true;
  }

  void solve(const RVec& r1, const RVec& rf, RVec& dy, RVec& dlam) const {
    RVec u = llt_.matrixL().solve(r1);
    if (p_ > 0) {
      dlam = cod_.solve(W_.transpose() * u - rf);
      u -= W_ * dlam;
    } else {
      dlam.resize(0);
    }
    dy = llt_.matrixU().solve(u);
  }

 private:
  Eigen::LLT<RMat> llt_;
  RMat W_;
  Eigen::CompleteOrthogonalDecomposition<RMat> cod_;
  Eigen::Index p_ = 0;
};

}  // namespace

IpmResult ipm_solve(const ConicForm& input, const IpmOptions& opt) {
  // Row scaling of the constraints.
  ConicForm f = input;
  const int m = f.m;
  const std::size_t nb = f.psd.size();
  const int nlp = static_cast<int>(f.c_lp.size());
  const int p = static_cast<int>(f.f.size());

  std::vector<RVec> blk_norm(nb, RVec::Zero(m));
  RVec row2 = RVec::Zero(m);
  for (std::size_t k = 0; k < nb; ++k) {
    const PsdBlock& blk = f.psd[k];
    for (std::size_t c = 0; c < blk.carriers.size(); ++c) {
      const Carrier& car = blk.carriers[c];
      const CarrierTerms& tm = blk.terms[c];
      for (std::size_t t = 0; t < tm.constraint.size(); ++t) {
        CMat S = CMat::Zero(car.K.rows(), car.K.rows());
        for (const Triplet& e : tm.entries[t]) S(e.row, e.col) += e.value;
        double nrm2 = (car.weight * (car.K.adjoint() * S * car.K)).squaredNorm();
        blk_norm[k](tm.constraint[t]) += nrm2;
      }
    }
    row2 += blk_norm[k];
  }
  if (nlp > 0) row2 += f.A_lp.rowwise().squaredNorm();
  RVec scale(m);
  for (int i = 0; i < m; ++i) scale(i) = row2(i) > 0.0 ? std::sqrt(row2(i)) : 1.0;
  for (std::size_t k = 0; k < nb; ++k) {
    for (auto& tm : f.psd[k].terms)
      for (std::size_t t = 0; t < tm.constraint.size(); ++t)
        for (Triplet& e : tm.entries[t]) e.value /= scale(tm.constraint[t]);
    blk_norm[k] = blk_norm[k].cwiseSqrt().cwiseQuotient(scale);
  }
  f.b = f.b.cwiseQuotient(scale);
  if (nlp > 0) f.A_lp = scale.cwiseInverse().asDiagonal() * f.A_lp;
  if (p > 0) f.F = f.F * scale.cwiseInverse().asDiagonal();

  Workspace ws(f);

  // Starting point.
  std::vector<CMat> X(nb), Z(nb);
  double bmax = (1.0 + f.b.cwiseAbs().array()).maxCoeff();
  double normC2 = 0.0;
  for (std::size_t k = 0; k < nb; ++k) {
    const int n = f.psd[k].dim;
    const double sn = std::sqrt(static_cast<double>(n));
    double xi = std::max(10.0, sn);
    double eta = std::max(10.0, sn);
    for (int i = 0; i < m; ++i) {
      xi = std::max(xi, n * (1.0 + std::abs(f.b(i))) / (1.0 + blk_norm[k](i)));
      eta = std::max(eta, blk_norm[k](i));
    }
    double nc = f.psd[k].C.norm();
    normC2 += nc * nc;
    eta = std::max(eta, nc);
    eta = (1.0 + eta) / sn * 1.0;
    eta = std::max(eta, 1.0);
    X[k] = xi * CMat::Identity(n, n);
    Z[k] = eta * CMat::Identity(n, n);
  }
  RVec x_lp(nlp), z_lp(nlp);
  if (nlp > 0) {
    RVec coln = f.A_lp.colwise().norm();
    double xi = std::max(10.0, bmax);
    double eta = std::max({10.0, coln.maxCoeff(), f.c_lp.cwiseAbs().maxCoeff()});
    x_lp.setConstant(xi);
    z_lp.setConstant(1.0 + eta);
    normC2 += f.c_lp.squaredNorm();
  }
  const double normC = std::sqrt(normC2);
  const double normB = f.b.norm();
  const double normf = p > 0 ? f.f.norm() : 0.0;
  RVec y = RVec::Zero(m);
  RVec lam = RVec::Zero(p);

  double total_dim = nlp;
  for (const auto& blk : f.psd) total_dim += blk.dim;

  IpmResult res;
  SaddleSolver saddle;
  int small_steps = 0;

  for (int it = 0;; ++it) {
    // Residuals.
    RVec AX = ws.apply_A(X);
    if (nlp > 0) AX.noalias() += f.A_lp * x_lp;
    if (p > 0) AX.noalias() += f.F.transpose() * lam;
    RVec Rp = f.b - AX;
    std::vector<CMat> Aty = ws.apply_At(y);
    std::vector<CMat> Rd(nb);
    double rd2 = 0.0;
    double pobj = 0.0, xz = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      Rd[k] = herm(f.psd[k].C - Z[k] - Aty[k]);
      rd2 += Rd[k].squaredNorm();
      pobj += inner(f.psd[k].C, X[k]);
      xz += inner(X[k], Z[k]);
    }
    RVec rd_lp(nlp);
    if (nlp > 0) {
      rd_lp = f.c_lp - z_lp - f.A_lp.transpose() * y;
      rd2 += rd_lp.squaredNorm();
      pobj += f.c_lp.dot(x_lp);
      xz += x_lp.dot(z_lp);
    }
    RVec Rf(p);
    if (p > 0) {
      Rf = f.f - f.F * y;
      pobj += f.f.dot(lam);
    }
    double dobj = f.b.dot(y);
    double mu = xz / total_dim;
    double relp = Rp.norm() / (1.0 + normB);
    double reld = std::sqrt(rd2) / (1.0 + normC);
    if (p > 0) reld = std::max(reld, Rf.norm() / (1.0 + normf));
    double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

    res.iterations = it;
    res.pobj = pobj;
    res.dobj = dobj;
    res.rel_primal = relp;
    res.rel_dual = reld;
    res.rel_gap = gap;

    auto finish = [&](IpmStatus s) {
      res.status = s;
      res.X = X;
      res.Z = Z;
      res.x_lp = x_lp;
      res.z_lp = z_lp;
      res.y = y.cwiseQuotient(scale);
      res.lam = lam;
      return res;
    };

    if (std::getenv("RHA_IPM_TRACE")) std::fprintf(stderr, "it %2d pobj %.10e dobj %.10e relp %.2e reld %.2e gap %.2e mu %.2e\n", it, pobj, dobj, relp, reld, gap, mu);
    const double gap_abs_ok = xz / (1.0 + std::abs(pobj) + std::abs(dobj));
    if (relp <= opt.tol && reld <= opt.tol && (gap <= opt.tol || gap_abs_ok <= opt.tol))
      return finish(IpmStatus::optimal);

    if (opt.early_stop) {
      const double vp = opt.sign * pobj + opt.offset;
      const double vd = opt.sign * dobj + opt.offset;
      if (opt.sign > 0) {
        if (reld <= opt.tol && vd >= opt.threshold) return finish(IpmStatus::early_feasible);
        if (relp <= opt.tol && vp < opt.threshold) return finish(IpmStatus::early_bound);
      } else {
        if (relp <= opt.tol && vp >= opt.threshold) return finish(IpmStatus::early_feasible);
        if (reld <= opt.tol && vd < opt.threshold) return finish(IpmStatus::early_bound);
      }
    }

    if (it >= opt.max_iterations) return finish(IpmStatus::max_iterations);

    double xnorm = 0.0;
    for (const auto& Xk : X) xnorm = std::max(xnorm, Xk.norm());
    if (nlp > 0) xnorm = std::max(xnorm, x_lp.norm());
    if (xnorm > 1e12 || y.norm() > 1e12 || (p > 0 && lam.norm() > 1e12)) return finish(IpmStatus::diverged);

    std::vector<CMat> Zi(nb);
    for (std::size_t k = 0; k < nb; ++k) Zi[k] = hermitian_inverse(Z[k]);
    RMat M = ws.schur(X, Zi, x_lp, z_lp);
    if (!saddle.factor(M, f.F)) return finish(IpmStatus::stalled);

    std::vector<CMat> dX(nb), dZ(nb);
    RVec dx(nlp), dz(nlp), dy, dlam;

    auto direction = [&](const std::vector<CMat>& G, const RVec& g_lp) {
      std::vector<CMat> T(nb);
      for (std::size_t k = 0; k < nb; ++k) T[k] = G[k] - herm(X[k] * Rd[k] * Zi[k]);
      RVec r1 = Rp - ws.apply_A(T);
      RVec t_lp(nlp);
      if (nlp > 0) {
        t_lp = g_lp - x_lp.cwiseProduct(rd_lp).cwiseQuotient(z_lp);
        r1 -= f.A_lp * t_lp;
      }
      saddle.solve(r1, Rf, dy, dlam);
      std::vector<CMat> Ady = ws.apply_At(dy);
      for (std::size_t k = 0; k < nb; ++k) {
        dZ[k] = Rd[k] - Ady[k];
        dX[k] = herm(G[k] - herm(X[k] * dZ[k] * Zi[k]));
      }
      if (nlp > 0) {
        dz = rd_lp - f.A_lp.transpose() * dy;
        dx = g_lp - x_lp.cwiseProduct(dz).cwiseQuotient(z_lp);
      }
    };

    auto steps = [&](double& ap, double& ad) {
      ap = std::numeric_limits<double>::infinity();
      ad = ap;
      for (std::size_t k = 0; k < nb; ++k) {
        ap = std::min(ap, max_step(X[k], dX[k]));
        ad = std::min(ad, max_step(Z[k], dZ[k]));
      }
      if (nlp > 0) {
        ap = std::min(ap, max_step_lp(x_lp, dx));
        ad = std::min(ad, max_step_lp(z_lp, dz));
      }
    };

    // Predictor.
    std::vector<CMat> G(nb);
    for (std::size_t k = 0; k < nb; ++k) G[k] = -X[k];
    RVec g_lp = -x_lp;
    direction(G, g_lp);
    double ap, ad;
    steps(ap, ad);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double xz_aff = 0.0;
    for (std::size_t k = 0; k < nb; ++k) xz_aff += inner(X[k] + ap * dX[k], Z[k] + ad * dZ[k]);
    if (nlp > 0) xz_aff += (x_lp + ap * dx).dot(z_lp + ad * dz);
    double sigma = std::pow(std::max(0.0, xz_aff) / std::max(xz, 1e-300), 3.0);
    sigma = std::clamp(sigma, 0.0, 1.0);
    if (relp > 1e2 * opt.tol || reld > 1e2 * opt.tol) sigma = std::max(sigma, 0.02);

    // Corrector.
    for (std::size_t k = 0; k < nb; ++k) G[k] = sigma * mu * Zi[k] - X[k] - herm(dX[k] * dZ[k] * Zi[k]);
    if (nlp > 0) g_lp = (sigma * mu) * z_lp.cwiseInverse() - x_lp - dx.cwiseProduct(dz).cwiseQuotient(z_lp);
    direction(G, g_lp);
    steps(ap, ad);
    const double tau = 0.9 + 0.09 * std::min({1.0, ap, ad});
    ap = std::min(1.0, tau * ap);
    ad = std::min(1.0, tau * ad);

    for (std::size_t k = 0; k < nb; ++k) {
      X[k] = herm(X[k] + ap * dX[k]);
      Z[k] = herm(Z[k] + ad * dZ[k]);
    }
    if (nlp > 0) {
      x_lp += ap * dx;
      z_lp += ad * dz;
    }
    y += ad * dy;
    if (p > 0) lam += ap * dlam;

    if (std::max(ap, ad) < 1e-8) {
      if (++small_steps >= 3) return finish(IpmStatus::stalled);
    } else {
      small_steps = 0;
    }
  }
}

std::vector<Triplet> dense_to_triplets(const CMat& H, double drop) {
  std::vector<Triplet> out;
  for (Eigen::Index c = 0; c < H.cols(); ++c)
    for (Eigen::Index r = 0; r < H.rows(); ++r)
      if (std::abs(H(r, c)) > drop) out.push_back({static_cast<int>(r), static_cast<int>(c), H(r, c)});
  return out;
}

}  // namespace rha::conic::detail
