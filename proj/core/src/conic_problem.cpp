#include <cmath>

#include "rha/conic.hpp"

namespace rha::conic {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

int SdpProblem::add_scalar(std::string name, ScalarSign sign) {
  scalars_.push_back({std::move(name), sign});
  return static_cast<int>(scalars_.size()) - 1;
}

int SdpProblem::add_matrix(std::string name, int dim, std::optional<RVec> fixed_diagonal) {
  if (dim < 1) throw DimensionError("matrix variable '" + name + "' needs dim >= 1");
  if (fixed_diagonal && fixed_diagonal->size() != dim)
    throw DimensionError("fixed diagonal of '" + name + "' has wrong length");
  matrices_.push_back({std::move(name), dim, std::move(fixed_diagonal)});
  return static_cast<int>(matrices_.size()) - 1;
}

namespace {

void require_hermitian(const CMat& H, const std::string& what) {
  if (H.rows() != H.cols()) throw DimensionError(what + " is not square");
  double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if ((H - H.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InternalError(what + " is not Hermitian");
}

}  // namespace

void SdpProblem::add_psd(AffineBlock block) {
  const int n = block.dim();
  const std::string tag = "block '" + block.name + "'";
  if (n < 1) throw DimensionError(tag + " is empty");
  require_hermitian(block.constant, tag + " constant");
  for (auto& [k, H] : block.scalar_terms) {
    if (k < 0 || k >= static_cast<int>(scalars_.size())) throw DimensionError(tag + " references unknown scalar");
    if (H.rows() != n || H.cols() != n) throw DimensionError(tag + " scalar coefficient has wrong size");
    require_hermitian(H, tag + " scalar coefficient");
  }
  for (const Congruence& c : block.congruences) {
    if (c.var < 0 || c.var >= static_cast<int>(matrices_.size())) throw DimensionError(tag + " references unknown matrix");
    if (c.K.rows() != matrices_[c.var].dim || c.K.cols() != n)
      throw DimensionError(tag + " congruence factor has wrong size");
  }
  blocks_.push_back(std::move(block));
}

void SdpProblem::check_expr(const LinearExpr& e) const {
  for (const auto& [k, c] : e.scalar_terms) {
    (void)c;
    if (k < 0 || k >= static_cast<int>(scalars_.size())) throw DimensionError("expression references unknown scalar");
  }
  for (const auto& [k, W] : e.matrix_terms) {
    if (k < 0 || k >= static_cast<int>(matrices_.size())) throw DimensionError("expression references unknown matrix");
    if (W.rows() != matrices_[k].dim || W.cols() != matrices_[k].dim)
      throw DimensionError("expression trace coefficient has wrong size");
  }
}

void SdpProblem::add_equality(LinearExpr e) {
  check_expr(e);
  equalities_.push_back(std::move(e));
}

void SdpProblem::add_inequality(LinearExpr e) {
  check_expr(e);
  inequalities_.push_back(std::move(e));
}

void SdpProblem::maximize(LinearExpr objective) {
  check_expr(objective);
  objective_ = std::move(objective);
}

CMat SdpProblem::evaluate(const AffineBlock& b, const std::vector<double>& x, const std::vector<CMat>& V) const {
  CMat out = b.constant;
  for (const auto& [k, H] : b.scalar_terms) out += x[k] * H;
  for (const Congruence& c : b.congruences) out += c.weight * (c.K.adjoint() * V[c.var] * c.K);
  return 0.5 * (out + out.adjoint());
}

double SdpProblem::evaluate(const LinearExpr& e, const std::vector<double>& x, const std::vector<CMat>& V) const {
  double v = e.constant;
  for (const auto& [k, c] : e.scalar_terms) v += c * x[k];
  for (const auto& [k, W] : e.matrix_terms) v += (W.cwiseProduct(V[k].transpose())).sum().real();
  return v;
}

}  // namespace rha::conic
