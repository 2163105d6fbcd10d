#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "rha/estimation.hpp"

namespace rha::est {

CMat toeplitz_hermitian(const CVec& u) {
  const Eigen::Index G = u.size();
  CMat T(G, G);
  for (Eigen::Index g = 0; g < G; ++g)
    for (Eigen::Index h = 0; h < G; ++h) T(g, h) = g >= h ? u(g - h) : std::conj(u(h - g));
  return T;
}

CVec grid_atom(double f, int G) {
  CVec a(G);
  for (int g = 0; g < G; ++g) a(g) = std::polar(1.0, -kTwoPi * f * g);
  return a;
}

AnmSolution solve_anm(const AnmInput& in, const conic::SolverOptions& opts) {
  const int G = static_cast<int>(in.S.rows()), r = static_cast<int>(in.S.cols());
  if (G < 1 || r < 1) throw DimensionError("solve_anm: empty data");
  if (static_cast<int>(in.observed.size()) != G) throw DimensionError("solve_anm: observed mask has wrong length");
  if (!in.S.allFinite()) throw DomainError("solve_anm: data must be finite");
  if (in.noise_radius < 0) throw DomainError("solve_anm: negative noise radius");

  const int n = r + G;
  const bool ball = in.noise_radius > 0;
  conic::SdpProblem P;

  // [[Z, X^H], [X, T(u)]] >= 0
  conic::AffineBlock blk;
  blk.name = "anm";
  blk.constant = CMat::Zero(n, n);

  const int Zv = P.add_matrix("Z", r);
  CMat KZ = CMat::Zero(r, n);
  KZ.leftCols(r).setIdentity();
  blk.congruences.push_back({Zv, KZ, 1.0});

  std::vector<int> ure(G, -1), uim(G, -1);
  for (int k = 0; k < G; ++k) {
    ure[k] = P.add_scalar("u_re_" + std::to_string(k));
    CMat H = CMat::Zero(n, n);
    for (int g = 0; g + k < G; ++g) {
      H(r + g + k, r + g) += 1.0;
      if (k > 0) H(r + g, r + g + k) += 1.0;
    }
    blk.scalar_terms.emplace_back(ure[k], H);
    if (k == 0) continue;
    uim[k] = P.add_scalar("u_im_" + std::to_string(k));
    CMat Hi = CMat::Zero(n, n);
    for (int g = 0; g + k < G; ++g) {
      Hi(r + g + k, r + g) = kJ;
      Hi(r + g, r + g + k) = -kJ;
    }
    blk.scalar_terms.emplace_back(uim[k], Hi);
  }

  // X entries: data where observed (exact mode), free otherwise
  std::vector<std::array<int, 2>> xvar(static_cast<size_t>(G) * r, {-1, -1});
  for (int g = 0; g < G; ++g)
    for (int c = 0; c < r; ++c) {
      if (in.observed[g] && !ball) {
        blk.constant(r + g, c) = in.S(g, c);
        blk.constant(c, r + g) = std::conj(in.S(g, c));
        continue;
      }
      auto& xv = xvar[static_cast<size_t>(g) * r + c];
      xv[0] = P.add_scalar("x_re");
      xv[1] = P.add_scalar("x_im");
      CMat Hr = CMat::Zero(n, n), Hi = CMat::Zero(n, n);
      Hr(r + g, c) = 1.0;
      Hr(c, r + g) = 1.0;
      Hi(r + g, c) = kJ;
      Hi(c, r + g) = -kJ;
      blk.scalar_terms.emplace_back(xv[0], Hr);
      blk.scalar_terms.emplace_back(xv[1], Hi);
    }
  P.add_psd(blk);

  if (ball) {
    // [[eps I, e], [e^H, eps]] >= 0 with e = X_obs - S_obs
    int ne = 0;
    for (int g = 0; g < G; ++g) ne += in.observed[g] ? r : 0;
    conic::AffineBlock arrow;
    arrow.name = "noise_ball";
    arrow.constant = in.noise_radius * CMat::Identity(ne + 1, ne + 1);
    int e = 0;
    for (int g = 0; g < G; ++g) {
      if (!in.observed[g]) continue;
      for (int c = 0; c < r; ++c, ++e) {
        arrow.constant(e, ne) = -in.S(g, c);
        arrow.constant(ne, e) = -std::conj(in.S(g, c));
        const auto& xv = xvar[static_cast<size_t>(g) * r + c];
        CMat Hr = CMat::Zero(ne + 1, ne + 1), Hi = CMat::Zero(ne + 1, ne + 1);
        Hr(e, ne) = 1.0;
        Hr(ne, e) = 1.0;
        Hi(e, ne) = kJ;
        Hi(ne, e) = -kJ;
        arrow.scalar_terms.emplace_back(xv[0], Hr);
        arrow.scalar_terms.emplace_back(xv[1], Hi);
      }
    }
    P.add_psd(arrow);
  }

  // minimize tr Z + tr T(u) = tr Z + G u_0
  conic::LinearExpr obj;
  obj.add(ure[0], -static_cast<double>(G));
  obj.add_trace(Zv, -CMat::Identity(r, r));
  P.maximize(obj);

  conic::SdpSolution sol = conic::solve(P, opts);
  AnmSolution out;
  out.status = sol.status;
  out.iterations = sol.iterations;
  if (sol.scalars.empty()) return out;

  out.u = CVec::Zero(G);
  out.u(0) = sol.scalars[ure[0]];
  for (int k = 1; k < G; ++k) out.u(k) = cd(sol.scalars[ure[k]], sol.scalars[uim[k]]);
  out.T = toeplitz_hermitian(out.u);
  out.Z = sol.matrices[Zv];
  out.X = CMat::Zero(G, r);
  for (int g = 0; g < G; ++g)
    for (int c = 0; c < r; ++c) {
      const auto& xv = xvar[static_cast<size_t>(g) * r + c];
      out.X(g, c) = xv[0] >= 0 ? cd(sol.scalars[xv[0]], sol.scalars[xv[1]]) : in.S(g, c);
    }
  out.objective = out.Z.trace().real() + out.T.trace().real();
  CMat B(n, n);
  B << out.Z, out.X.adjoint(), out.X, out.T;
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (B + B.adjoint()), Eigen::EigenvaluesOnly);
  out.min_block_eigenvalue = es.eigenvalues()(0);
  return out;
}

namespace {

// MUSIC pseudo-spectrum peaks on a fine frequency grid, used when polynomial
// rooting does not yield enough candidates.
std::vector<double> spectral_peaks(const CMat& En, int order, double f_lo, double f_hi, int points) {
  const int G = static_cast<int>(En.rows());
  std::vector<double> f(points), p(points);
  for (int i = 0; i < points; ++i) {
    f[i] = f_lo + (f_hi - f_lo) * i / (points - 1);
    CVec a = grid_atom(f[i], G);
    p[i] = 1.0 / std::max((En.adjoint() * a).squaredNorm(), 1e-300);
  }
  std::vector<std::pair<double, double>> peaks;
  for (int i = 1; i + 1 < points; ++i)
    if (p[i] >= p[i - 1] && p[i] > p[i + 1]) peaks.emplace_back(p[i], f[i]);
  std::sort(peaks.rbegin(), peaks.rend());
  std::vector<double> out;
  for (int i = 0; i < std::min<int>(order, static_cast<int>(peaks.size())); ++i) out.push_back(peaks[i].second);
  return out;
}

}  // namespace

DoaResult extract_frequencies(const CMat& T, int max_paths, double order_threshold) {
  if (T.rows() != T.cols() || T.rows() < 1) throw DimensionError("extract_frequencies: T must be square");
  const int G = static_cast<int>(T.rows());
  DoaResult res;
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (T + T.adjoint()));
  const RVec& lam = es.eigenvalues();
  const double lmax = lam(G - 1);
  if (!(lmax > 0)) {
    res.no_peaks = true;
    return res;
  }
  int order = 0;
  for (int i = 0; i < G; ++i) order += lam(i) > order_threshold * lmax ? 1 : 0;
  if (order >= G) {
    res.no_peaks = true;
    res.order = order;
    return res;
  }
  res.order = order;
  if (order > max_paths) {
    res.truncated = true;
    order = max_paths;
  }
  if (order == 0) return res;
  const CMat En = es.eigenvectors().leftCols(G - order);
  const CMat C = En * En.adjoint();

  // coefficients of z^(k + G - 1), k = -(G-1)..(G-1)
  const int D = 2 * G - 2;
  CVec a = CVec::Zero(D + 1);
  for (int g = 0; g < G; ++g)
    for (int h = 0; h < G; ++h) a(g - h + G - 1) += C(g, h);
  int deg = D;
  const double amax = a.cwiseAbs().maxCoeff();
  while (deg > 0 && std::abs(a(deg)) < 1e-14 * amax) --deg;
  std::vector<cd> roots;
  if (deg > 0) {
    CMat comp = CMat::Zero(deg, deg);
    for (int i = 0; i < deg; ++i) comp(0, i) = -a(deg - 1 - i) / a(deg);
    for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
    Eigen::ComplexEigenSolver<CMat> ces(comp, false);
    if (ces.info() == Eigen::Success)
      for (int i = 0; i < deg; ++i) roots.push_back(ces.eigenvalues()(i));
  }
  // roots come in (z, 1/conj z) pairs; keep the ones inside or on the circle
  std::vector<cd> inside;
  for (cd z : roots)
    if (std::abs(z) <= 1.0 + 1e-7 && std::abs(z) > 1e-12) inside.push_back(z);
  std::sort(inside.begin(), inside.end(),
            [](cd x, cd y) { return std::abs(1.0 - std::abs(x)) < std::abs(1.0 - std::abs(y)); });
  std::vector<double> freqs;
  for (cd z : inside) {
    if (static_cast<int>(freqs.size()) == order) break;
    const double f = std::arg(z) / kTwoPi;
    bool dup = false;
    for (double q : freqs) {
      double d = std::abs(f - q);
      dup = dup || std::min(d, 1.0 - d) < 1e-6;  // split copies of a double root
    }
    if (!dup) freqs.push_back(f);
  }
  if (static_cast<int>(freqs.size()) < order) freqs = spectral_peaks(En, order, -0.5, 0.5, 36001);
  std::sort(freqs.begin(), freqs.end());
  res.frequencies = freqs;
  return res;
}

std::vector<double> frequencies_to_angles(const std::vector<double>& f, double spacing_over_lambda) {
  std::vector<double> th;
  for (double x : f) th.push_back(std::asin(std::clamp(x / spacing_over_lambda, -1.0, 1.0)));
  std::sort(th.begin(), th.end());
  return th;
}

DoaResult extract_doa(const AnmSolution& anm, int max_paths, double spacing_over_lambda, std::vector<double>* angles) {
  DoaResult r = extract_frequencies(anm.T, max_paths);
  if (angles) *angles = frequencies_to_angles(r.frequencies, spacing_over_lambda);
  return r;
}

}  // namespace rha::est
