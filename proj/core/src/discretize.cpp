#include <algorithm>
#include <cmath>

#include "rha/robust.hpp"

namespace rha::robust {

namespace {

double wrap(double a) {  // (-pi, pi]
  a = std::remainder(a, kTwoPi);
  return a <= -kPi ? a + kTwoPi : a;
}

// nearest state of Psi to the phase `target`
int nearest_state(double target, int states) {
  const double step = kTwoPi / states;
  long k = std::lround(target / step);
  return static_cast<int>(((k % states) + states) % states);
}

}  // namespace

CVec DiscreteResult::stacked() const {
  const Eigen::Index M = phases.rows(), N = phases.cols();
  CVec v(M * N);
  for (Eigen::Index m = 0; m < M; ++m)
    for (Eigen::Index n = 0; n < N; ++n) v(m * N + n) = weights(m) * phases(m, n);
  return v;
}

double discretization_objective(const CVec& v_opt, const CMat& phases, const CVec& weights) {
  const Eigen::Index M = phases.rows(), N = phases.cols();
  double e = 0.0;
  for (Eigen::Index m = 0; m < M; ++m)
    for (Eigen::Index n = 0; n < N; ++n) e += std::abs(v_opt(m * N + n) + weights(m) * phases(m, n));
  return e;
}

namespace {

DiscreteResult alternate(const CVec& v_opt, int M, int N, int bits, const CVec& w_init, double eps,
                         int max_iterations) {
  const int states = 1 << bits;
  const double step = kTwoPi / states;
  const double pmax = kPi / states;

  DiscreteResult r;
  r.weights = w_init.size() == M ? w_init : CVec::Ones(M);
  for (int m = 0; m < M; ++m) r.weights(m) = std::polar(1.0, std::arg(r.weights(m)));
  r.indices.resize(M, N);
  r.phases.resize(M, N);

  // argmax over Psi of |v + w omega| is the state nearest arg v - arg w
  auto project = [&](const CVec& w, Eigen::MatrixXi& idx, CMat& ph) {
    for (int m = 0; m < M; ++m)
      for (int n = 0; n < N; ++n) {
        idx(m, n) = nearest_state(std::arg(v_opt(m * N + n)) - std::arg(w(m)), states);
        ph(m, n) = std::polar(1.0, step * idx(m, n));
      }
  };
  project(r.weights, r.indices, r.phases);
  double e_prev = 0.0;
  double e = discretization_objective(v_opt, r.phases, r.weights);
  r.trace.push_back(e);
  r.iterations = 1;
  while (e - e_prev > eps && r.iterations < max_iterations) {
    CVec w(M);
    for (int m = 0; m < M; ++m) {
      double p = 0.0;
      for (int n = 0; n < N; ++n) p += wrap(std::arg(v_opt(m * N + n)) - step * r.indices(m, n));
      p = std::clamp(p / N, -pmax, pmax);
      w(m) = std::polar(1.0, p);
    }
    Eigen::MatrixXi idx(M, N);
    CMat ph(M, N);
    project(w, idx, ph);
    const double e_new = discretization_objective(v_opt, ph, w);
    ++r.iterations;
    if (e_new < e) {  // keep the better iterate; the trace never decreases
      r.rejected_update = true;
      r.trace.push_back(e);
      break;
    }
    e_prev = e;
    e = e_new;
    r.weights = w;
    r.indices = idx;
    r.phases = ph;
    r.trace.push_back(e);
  }
  return r;
}

}  // namespace

DiscreteResult discretize(const CVec& v_opt, int M, int N, int bits, const CVec& w_init, double eps,
                          int max_iterations) {
  if (M < 1 || N < 1 || v_opt.size() != static_cast<Eigen::Index>(M) * N)
    throw DimensionError("discretize: v must have length M N");
  if (bits < 1 || bits > 16) throw DomainError("discretize: bits must be in 1..16");
  for (Eigen::Index i = 0; i < v_opt.size(); ++i)
    if (std::abs(std::abs(v_opt(i)) - 1.0) > 1e-6) throw DomainError("discretize: v must be unit modulus");
  if (w_init.size() == M) return alternate(v_opt, M, N, bits, w_init, eps, max_iterations);
  // The alternation stops in local optima of the state pattern; start it from
  // a few weight phases across the clamp range and keep the best run.
  const double pmax = kPi / (1 << bits);
  DiscreteResult best;
  for (double f : {0.0, -1.0, -0.5, 0.5, 1.0}) {
    DiscreteResult r = alternate(v_opt, M, N, bits, CVec::Constant(M, std::polar(1.0, f * pmax)), eps, max_iterations);
    if (best.trace.empty() || r.trace.back() > best.trace.back()) best = std::move(r);
  }
  return best;
}

}  // namespace rha::robust
