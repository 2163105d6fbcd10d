#include <nlohmann/json.hpp>

#include "rha/conic.hpp"

namespace rha::conic {

RMat embed_hermitian(const CMat& H, double tol) {
  if (H.rows() != H.cols()) throw DomainError("embed_hermitian: matrix is not square");
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if ((H - H.adjoint()).cwiseAbs().maxCoeff() > tol * scale)
    throw DomainError("embed_hermitian: matrix is not Hermitian");
  const Eigen::Index n = H.rows();
  RMat S(2 * n, 2 * n);
  S.topLeftCorner(n, n) = H.real();
  S.topRightCorner(n, n) = -H.imag();
  S.bottomLeftCorner(n, n) = H.imag();
  S.bottomRightCorner(n, n) = H.real();
  return S;
}

CMat extract_hermitian(const RMat& S) {
  if (S.rows() != S.cols() || S.rows() % 2 != 0) throw DimensionError("extract_hermitian: bad shape");
  const Eigen::Index n = S.rows() / 2;
  // average the two copies so slightly asymmetric input still round-trips
  RMat re = 0.5 * (S.topLeftCorner(n, n) + S.bottomRightCorner(n, n));
  RMat im = 0.5 * (S.bottomLeftCorner(n, n) - S.topRightCorner(n, n));
  CMat H(n, n);
  H.real() = re;
  H.imag() = im;
  return H;
}

namespace {

nlohmann::json dense(const CMat& M) {
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    nlohmann::json rr = nlohmann::json::array(), ii = nlohmann::json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
      rr.push_back(M(r, c).real());
      ii.push_back(M(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  return {{"rows", M.rows()}, {"cols", M.cols()}, {"re", re}, {"im", im}};
}

nlohmann::json expr(const LinearExpr& e) {
  nlohmann::json j;
  j["constant"] = e.constant;
  j["scalars"] = nlohmann::json::array();
  for (const auto& [k, c] : e.scalar_terms) j["scalars"].push_back({{"var", k}, {"coef", c}});
  j["traces"] = nlohmann::json::array();
  for (const auto& [k, W] : e.matrix_terms) j["traces"].push_back({{"var", k}, {"W", dense(W)}});
  return j;
}

}  // namespace

std::string dump_json(const SdpProblem& P) {
  nlohmann::json j;
  j["format"] = "rha-sdp/1";
  j["sense"] = "maximize";
  j["scalars"] = nlohmann::json::array();
  for (const ScalarVar& s : P.scalars())
    j["scalars"].push_back({{"name", s.name}, {"sign", s.sign == ScalarSign::free ? "free" : "nonnegative"}});
  j["matrices"] = nlohmann::json::array();
  for (const MatrixVar& m : P.matrices()) {
    nlohmann::json mj = {{"name", m.name}, {"dim", m.dim}};
    if (m.fixed_diagonal) mj["fixed_diagonal"] = std::vector<double>(m.fixed_diagonal->data(), m.fixed_diagonal->data() + m.dim);
    j["matrices"].push_back(mj);
  }
  j["psd_blocks"] = nlohmann::json::array();
  for (const AffineBlock& b : P.blocks()) {
    nlohmann::json bj;
    bj["name"] = b.name;
    bj["constant"] = dense(b.constant);
    bj["scalar_terms"] = nlohmann::json::array();
    for (const auto& [k, H] : b.scalar_terms) bj["scalar_terms"].push_back({{"var", k}, {"H", dense(H)}});
    bj["congruences"] = nlohmann::json::array();
    for (const Congruence& c : b.congruences)
      bj["congruences"].push_back({{"var", c.var}, {"weight", c.weight}, {"K", dense(c.K)}});
    j["psd_blocks"].push_back(bj);
  }
  j["equalities"] = nlohmann::json::array();
  for (const LinearExpr& e : P.equalities()) j["equalities"].push_back(expr(e));
  j["inequalities"] = nlohmann::json::array();
  for (const LinearExpr& e : P.inequalities()) j["inequalities"].push_back(expr(e));
  j["objective"] = expr(P.objective());
  return j.dump(1);
}

}  // namespace rha::conic
