#include <string>

#include "rha/estimation.hpp"

namespace rha::est {

namespace {

bool is_prime(int q) {
  if (q < 2) return false;
  for (int d = 2; d * d <= q; ++d)
    if (q % d == 0) return false;
  return true;
}

// Quadratic character over GF(q), q prime.
RMat jacobsthal(int q) {
  std::vector<int> chi(q, -1);
  chi[0] = 0;
  for (int x = 1; x < q; ++x) chi[(x * x) % q] = 1;
  RMat Q(q, q);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) Q(i, j) = chi[((j - i) % q + q) % q];
  return Q;
}

RMat paley1(int q) {  // q = 3 mod 4, order q + 1
  RMat S = RMat::Zero(q + 1, q + 1);
  S.block(0, 1, 1, q).setOnes();
  S.block(1, 0, q, 1).setConstant(-1);
  S.bottomRightCorner(q, q) = jacobsthal(q);
  return RMat::Identity(q + 1, q + 1) + S;
}

RMat paley2(int q) {  // q = 1 mod 4, order 2(q + 1)
  RMat C = RMat::Zero(q + 1, q + 1);
  C.block(0, 1, 1, q).setOnes();
  C.block(1, 0, q, 1).setOnes();
  C.bottomRightCorner(q, q) = jacobsthal(q);
  RMat H(2 * (q + 1), 2 * (q + 1));
  for (int i = 0; i <= q; ++i)
    for (int j = 0; j <= q; ++j) {
      RMat b(2, 2);
      if (i == j)
        b << 1, -1, -1, -1;
      else
        b << C(i, j), C(i, j), C(i, j), -C(i, j);
      H.block(2 * i, 2 * j, 2, 2) = b;
    }
  return H;
}

RMat kron(const RMat& A, const RMat& B) {
  RMat K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

// Base constructions that are not themselves Kronecker products of smaller ones.
std::optional<RMat> base(int n) {
  if (n == 1) return RMat::Ones(1, 1);
  if (n == 2) {
    RMat H(2, 2);
    H << 1, 1, 1, -1;
    return H;
  }
  if (n % 4 != 0) return std::nullopt;
  if (is_prime(n - 1) && (n - 1) % 4 == 3) return paley1(n - 1);
  if (n % 2 == 0 && is_prime(n / 2 - 1) && (n / 2 - 1) % 4 == 1) return paley2(n / 2 - 1);
  return std::nullopt;
}

std::optional<RMat> build(int n) {
  if (n > 2 && (n & (n - 1)) == 0) return kron(*base(2), *build(n / 2));  // Sylvester
  if (auto b = base(n)) return b;
  if (n % 2 == 0 && n > 2)
    if (auto h = build(n / 2)) return kron(*base(2), *h);
  return std::nullopt;
}

}  // namespace

bool hadamard_supported(int n) { return n >= 1 && build(n).has_value(); }

RMat hadamard(int n) {
  if (n < 1) throw DomainError("Hadamard order must be positive");
  if (auto h = build(n)) return *h;
  int lo = n - 1, hi = n + 1;
  while (lo > 1 && !hadamard_supported(lo)) --lo;
  while (!hadamard_supported(hi)) ++hi;
  throw DomainError("no Hadamard construction of order " + std::to_string(n) + "; nearest supported orders are " +
                    std::to_string(lo) + " and " + std::to_string(hi));
}

PatternSchedule build_pattern_schedule(int N, int Kr) {
  if (Kr != N) throw DomainError("pattern schedule requires K_r = N (got K_r = " + std::to_string(Kr) + ")");
  PatternSchedule s;
  s.Kr = Kr;
  s.H = hadamard(N);
  s.patterns = s.H;
  return s;
}

}  // namespace rha::est
