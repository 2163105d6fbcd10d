#include <algorithm>
#include <cmath>
#include <limits>

#include "rha/robust.hpp"

namespace rha::robust {

namespace {

struct Eval {
  const StackedModel& m;
  std::vector<ChannelDraw> draws;  // nominal first

  Eval(const array::ScenarioConfig& s, const StackedModel& mm, const ErrorBalls& b, const RefineOptions& o) : m(mm) {
    draws.push_back({m.channel_alice(), m.channel_jam()});
    if (!b.alice.zero() || !b.jam.zero()) {
      auto more = draw_channels(s, m, b, o.samples / 2, o.samples - o.samples / 2, o.seed);
      draws.insert(draws.end(), more.begin(), more.end());
    }
  }

  SurrogateScore operator()(const CVec& v) const {
    const double nv = m.noise * v.squaredNorm() / static_cast<double>(v.size());
    SurrogateScore r;
    r.sinr = std::numeric_limits<double>::infinity();
    r.blocking_min = 1.0;
    r.violation = 0.0;
    for (std::size_t k = 0; k < draws.size(); ++k) {
      const ChannelDraw& d = draws[k];
      const double den = m.Pj * std::norm(v.dot(d.cj)) + nv;
      const double sinr = den > 0 ? m.Pa * std::norm(v.dot(d.ca)) / den : 0.0;
      if (k == 0) r.soft = sinr;
      r.sinr = std::min(r.sinr, sinr);
      for (int a = 0; a < m.M; ++a) {
        const auto va = v.segment(a * m.N, m.N);
        const double sp = m.xi * m.Pa * std::norm(va.dot(d.ca.segment(a * m.N, m.N)));
        const double jp = m.Pj * std::norm(va.dot(d.cj.segment(a * m.N, m.N)));
        const double margin = sp + jp > 0 ? (sp - jp) / (sp + jp) : 0.0;
        r.blocking_min = std::min(r.blocking_min, margin);
        r.violation += std::min(0.0, margin);
      }
    }
    r.violation /= static_cast<double>(draws.size());
    return r;
  }
};

// Best joint change of two element states; single-element moves cannot
// leave a configuration whose jam null needs two elements to shift together.
bool pair_move(const Eval& f, CVec& v, Eigen::MatrixXi& idx, const CVec& w, int N, int states, double step,
               SurrogateScore& best, bool check_blocking) {
  const Eigen::Index n = v.size();
  Eigen::Index bi = -1, bj = -1;
  int si = 0, sj = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const cd vi = v(i), vj = v(j);
      const int ki = idx(i / N, i % N), kj = idx(j / N, j % N);
      for (int a = 0; a < states; ++a) {
        if (a == ki) continue;
        v(i) = w(i / N) * std::polar(1.0, step * a);
        for (int b = 0; b < states; ++b) {
          if (b == kj) continue;
          v(j) = w(j / N) * std::polar(1.0, step * b);
          const SurrogateScore sc = f(v);
          if (better(sc, best, check_blocking)) {
            best = sc;
            bi = i;
            bj = j;
            si = a;
            sj = b;
          }
        }
      }
      v(i) = vi;
      v(j) = vj;
    }
  if (bi < 0) return false;
  idx(bi / N, bi % N) = si;
  idx(bj / N, bj % N) = sj;
  v(bi) = w(bi / N) * std::polar(1.0, step * si);
  v(bj) = w(bj / N) * std::polar(1.0, step * sj);
  return true;
}

}  // namespace

SurrogateScore surrogate_score(const array::ScenarioConfig& s, const StackedModel& m, const ErrorBalls& balls,
                               const CVec& v, const RefineOptions& o) {
  if (v.size() != static_cast<Eigen::Index>(m.M) * m.N) throw DimensionError("surrogate_score: v has wrong length");
  return Eval(s, m, balls, o)(v);
}

bool better(const SurrogateScore& a, const SurrogateScore& b, bool check_blocking) {
  if (check_blocking) {
    if (a.blocking_ok() != b.blocking_ok()) return a.blocking_ok();
    // margins are separable over antennas, so their summed violation is a
    // better ascent target than the minimum
    if (!a.blocking_ok()) return a.violation > b.violation;
  }
  if (a.sinr > 0.0 || b.sinr > 0.0) return a.sinr > b.sinr;
  return a.soft > b.soft;
}

CVec refine_continuous(const array::ScenarioConfig& s, const StackedModel& m, const ErrorBalls& balls, const CVec& v0,
                       const RefineOptions& o) {
  const Eval f(s, m, balls, o);
  CVec v = v0;
  SurrogateScore best = f(v);
  const double half = kPi / o.grid;
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int sweep = 0; sweep < o.sweeps; ++sweep) {
    const SurrogateScore start = best;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      const cd keep = v(k);
      double arg_best = 0.0;
      for (int g = 1; g < o.grid; ++g) {
        v(k) = keep * std::polar(1.0, kTwoPi * g / o.grid);
        const SurrogateScore sc = f(v);
        if (better(sc, best, o.check_blocking)) {
          best = sc;
          arg_best = kTwoPi * g / o.grid;
        }
      }
      // golden-section refinement inside the winning grid cell
      double lo = arg_best - half, hi = arg_best + half;
      auto at = [&](double t) {
        v(k) = keep * std::polar(1.0, t);
        return f(v);
      };
      double x1 = hi - golden * (hi - lo), x2 = lo + golden * (hi - lo);
      SurrogateScore f1 = at(x1), f2 = at(x2);
      for (int it = 0; it < 40 && hi - lo > 1e-9; ++it) {
        if (better(f1, f2, o.check_blocking)) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - golden * (hi - lo);
          f1 = at(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + golden * (hi - lo);
          f2 = at(x2);
        }
      }
      const SurrogateScore fin = at(0.5 * (lo + hi));
      if (better(fin, best, o.check_blocking)) {
        best = fin;
        arg_best = 0.5 * (lo + hi);
      }
      v(k) = keep * std::polar(1.0, arg_best);
    }
    if (!better(best, start, o.check_blocking)) break;
    // relative progress below 1e-9 counts as converged
    if (best.blocking_ok() == start.blocking_ok() && best.sinr > 0 && best.sinr < start.sinr * (1.0 + 1e-9)) break;
  }
  return v;
}

void refine_discrete(const array::ScenarioConfig& s, const StackedModel& m, const ErrorBalls& balls, int bits,
                     DiscreteResult& d, const RefineOptions& o) {
  const Eval f(s, m, balls, o);
  const int M = m.M, N = m.N, states = 1 << bits;
  const double step = kTwoPi / states, pmax = kPi / states;
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  auto stacked = [&]() {
    CVec v(M * N);
    for (int a = 0; a < M; ++a)
      for (int n = 0; n < N; ++n) v(a * N + n) = d.weights(a) * std::polar(1.0, step * d.indices(a, n));
    return v;
  };
  CVec v = stacked();
  SurrogateScore best = f(v);
  for (int sweep = 0; sweep < o.sweeps; ++sweep) {
    bool moved = false;
    for (int a = 0; a < M; ++a) {
      for (int n = 0; n < N; ++n) {
        const int keep = d.indices(a, n);
        int arg_best = keep;
        for (int s = 0; s < states; ++s) {
          if (s == keep) continue;
          v(a * N + n) = d.weights(a) * std::polar(1.0, step * s);
          const SurrogateScore sc = f(v);
          if (better(sc, best, o.check_blocking)) {
            best = sc;
            arg_best = s;
          }
        }
        d.indices(a, n) = arg_best;
        v(a * N + n) = d.weights(a) * std::polar(1.0, step * arg_best);
        moved = moved || arg_best != keep;
      }
      const cd keep_w = d.weights(a);
      cd best_w = keep_w;
      for (int g = 0; g < o.weight_grid; ++g) {
        const double p = o.weight_grid > 1 ? -pmax + 2.0 * pmax * g / (o.weight_grid - 1) : 0.0;
        d.weights(a) = std::polar(1.0, p);
        const SurrogateScore sc = f(stacked());
        if (better(sc, best, o.check_blocking)) {
          best = sc;
          best_w = d.weights(a);
        }
      }
      // polish the weight phase between its grid neighbours
      if (o.weight_grid > 1) {
        const double h = 2.0 * pmax / (o.weight_grid - 1), c = std::arg(best_w);
        double lo = std::max(-pmax, c - h), hi = std::min(pmax, c + h);
        auto at = [&](double x) {
          d.weights(a) = std::polar(1.0, x);
          return f(stacked());
        };
        double x1 = hi - golden * (hi - lo), x2 = lo + golden * (hi - lo);
        SurrogateScore f1 = at(x1), f2 = at(x2);
        for (int it = 0; it < 40 && hi - lo > 1e-10; ++it) {
          if (better(f1, f2, o.check_blocking)) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = at(x1);
          } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = at(x2);
          }
        }
        const SurrogateScore fin = at(0.5 * (lo + hi));
        if (better(fin, best, o.check_blocking)) {
          best = fin;
          best_w = d.weights(a);
        }
      }
      d.weights(a) = best_w;
      moved = moved || best_w != keep_w;
      v = stacked();
    }
    if (!moved && o.pair_moves) moved = pair_move(f, v, d.indices, d.weights, N, states, step, best, o.check_blocking);
    if (!moved) break;
  }
  for (int a = 0; a < M; ++a)
    for (int n = 0; n < N; ++n) d.phases(a, n) = std::polar(1.0, step * d.indices(a, n));
}

}  // namespace rha::robust
