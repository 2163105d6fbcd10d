#pragma once

// Standard-form conic data shared by the lowerings and the interior-point
// core. Not installed.
//
//   (P) min <C,X> + c_lp'x + f'lam   s.t.  A(X) + A_lp x + F'lam = b,  X psd, x >= 0
//   (D) max b'y                      s.t.  C - A*(y) = Z psd, c_lp - A_lp'y = z >= 0, F y = f
//
// Each constraint coefficient restricted to a PSD block is stored through
// "carriers": A_i = sum_c w_c K_c^H E_ic K_c with sparse Hermitian E_ic.

#include <functional>
#include <vector>

#include "rha/types.hpp"

namespace rha::conic::detail {

struct Triplet {
  int row;
  int col;
  cd value;
};

struct Carrier {
  CMat K;  // p x n, E lives in the p-space
  double weight = 1.0;
};

struct CarrierTerms {
  std::vector<int> constraint;
  std::vector<std::vector<Triplet>> entries;
};

struct PsdBlock {
  int dim = 0;
  CMat C;
  std::vector<Carrier> carriers;
  std::vector<CarrierTerms> terms;  // one per carrier

  int add_carrier(CMat K, double weight) {
    carriers.push_back({std::move(K), weight});
    terms.emplace_back();
    return static_cast<int>(carriers.size()) - 1;
  }
  void add_term(int carrier, int constraint, std::vector<Triplet> e) {
    if (e.empty()) return;
    terms[carrier].constraint.push_back(constraint);
    terms[carrier].entries.push_back(std::move(e));
  }
};

struct ConicForm {
  int m = 0;
  RVec b;
  std::vector<PsdBlock> psd;
  RVec c_lp;
  RMat A_lp;  // m x n_lp
  RMat F;     // p x m
  RVec f;     // p
};

struct IpmOptions {
  double tol = 1e-7;
  int max_iterations = 120;
  // Early termination: model value = sign * objective + offset. With sign = +1
  // the dual side carries the model's feasible points, with sign = -1 the primal.
  bool early_stop = false;
  double threshold = 0.0;
  double sign = 1.0;
  double offset = 0.0;
};

enum class IpmStatus { optimal, early_feasible, early_bound, max_iterations, diverged, stalled };

struct IpmResult {
  IpmStatus status = IpmStatus::stalled;
  std::vector<CMat> X, Z;
  RVec x_lp, z_lp;
  RVec y, lam;
  double pobj = 0.0, dobj = 0.0;
  double rel_primal = 0.0, rel_dual = 0.0, rel_gap = 0.0;
  int iterations = 0;
};

IpmResult ipm_solve(const ConicForm& form, const IpmOptions& opt);

// Helpers shared by lowering code.
std::vector<Triplet> dense_to_triplets(const CMat& H, double drop = 0.0);

// Real parametrisation of an n x n Hermitian matrix: diagonal entries (unless
// fixed), then Re and Im of each strictly upper entry.
struct HermParam {
  int p;
  int q;
  int kind;  // 0 diagonal, 1 real part, 2 imaginary part
};
std::vector<HermParam> hermitian_params(int n, bool include_diagonal);
// Basis matrix E with V = V0 + sum y E.
std::vector<Triplet> basis_triplets(const HermParam& h);
// Functional A with <A, V> = the parameter value.
std::vector<Triplet> component_triplets(const HermParam& h);

}  // namespace rha::conic::detail
