#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rha/types.hpp"

namespace rha::conic {

enum class ScalarSign { free, nonnegative };

struct ScalarVar {
  std::string name;
  ScalarSign sign = ScalarSign::free;
};

// Hermitian matrix variable. When fixed_diagonal is set the diagonal is not a
// decision variable (used for the unit-modulus relaxation diag(V) = 1).
struct MatrixVar {
  std::string name;
  int dim = 0;
  std::optional<RVec> fixed_diagonal;
};

// weight * K^H V K with V = matrix variable `var`; K is dim(V) x n.
struct Congruence {
  int var = -1;
  CMat K;
  double weight = 1.0;
};

// An affine Hermitian n x n expression required to be PSD:
//   constant + sum_k x_k H_k + sum_t weight_t K_t^H V_t K_t
struct AffineBlock {
  std::string name;
  CMat constant;
  std::vector<std::pair<int, CMat>> scalar_terms;
  std::vector<Congruence> congruences;

  int dim() const { return static_cast<int>(constant.rows()); }
};

// constant + sum c_k x_k + sum Re tr(W_t V_t)
struct LinearExpr {
  double constant = 0.0;
  std::vector<std::pair<int, double>> scalar_terms;
  std::vector<std::pair<int, CMat>> matrix_terms;

  LinearExpr& add(int scalar, double c) {
    scalar_terms.emplace_back(scalar, c);
    return *this;
  }
  LinearExpr& add_trace(int matrix, CMat W) {
    matrix_terms.emplace_back(matrix, std::move(W));
    return *this;
  }
};

class SdpProblem {
 public:
  int add_scalar(std::string name, ScalarSign sign = ScalarSign::free);
  int add_matrix(std::string name, int dim, std::optional<RVec> fixed_diagonal = std::nullopt);

  // Throws DimensionError / InternalError on malformed blocks.
  void add_psd(AffineBlock block);
  void add_equality(LinearExpr e);    // e == 0
  void add_inequality(LinearExpr e);  // e >= 0
  void maximize(LinearExpr objective);

  const std::vector<ScalarVar>& scalars() const { return scalars_; }
  const std::vector<MatrixVar>& matrices() const { return matrices_; }
  const std::vector<AffineBlock>& blocks() const { return blocks_; }
  const std::vector<LinearExpr>& equalities() const { return equalities_; }
  const std::vector<LinearExpr>& inequalities() const { return inequalities_; }
  const LinearExpr& objective() const { return objective_; }

  // Evaluation helpers on a candidate point.
  CMat evaluate(const AffineBlock& b, const std::vector<double>& x, const std::vector<CMat>& V) const;
  double evaluate(const LinearExpr& e, const std::vector<double>& x, const std::vector<CMat>& V) const;

 private:
  void check_expr(const LinearExpr& e) const;

  std::vector<ScalarVar> scalars_;
  std::vector<MatrixVar> matrices_;
  std::vector<AffineBlock> blocks_;
  std::vector<LinearExpr> equalities_;
  std::vector<LinearExpr> inequalities_;
  LinearExpr objective_;
};

enum class SolveStatus { optimal, infeasible, numerical_failure };

const char* to_string(SolveStatus s);

enum class Lowering { automatic, dual, primal };

struct SolverOptions {
  double tol = 1e-7;
  int max_iterations = 120;
  Lowering lowering = Lowering::automatic;
  // Stop as soon as the optimum is known to be >= or < this value.
  std::optional<double> objective_threshold;
  // Run the phase-1 margin problem when the main solve does not converge.
  bool detect_infeasibility = true;
};

struct SdpSolution {
  SolveStatus status = SolveStatus::numerical_failure;
  std::vector<double> scalars;
  std::vector<CMat> matrices;
  double objective = 0.0;       // primal-side (modeling) objective at the returned point
  double dual_bound = 0.0;      // upper bound on the maximum from the other side
  double max_psd_violation = 0.0;
  double max_linear_violation = 0.0;
  int iterations = 0;
  bool early_termination = false;
  Lowering lowering_used = Lowering::automatic;
  // Infeasibility certificate: optimal value of the phase-1 margin problem
  // (max s such that every cone constraint holds with margin s) and its dual
  // block matrices.
  std::optional<double> phase1_margin;
  std::vector<CMat> certificate;
};

SdpSolution solve(const SdpProblem& problem, const SolverOptions& options = {});
SdpSolution solve(const SdpProblem& problem, double tol);

// [[Re H, -Im H], [Im H, Re H]]; throws DomainError if H is not Hermitian.
RMat embed_hermitian(const CMat& H, double tol = 1e-10);
CMat extract_hermitian(const RMat& S);

// Self-describing JSON dump of a problem (dense re/im arrays).
std::string dump_json(const SdpProblem& problem);

}  // namespace rha::conic
