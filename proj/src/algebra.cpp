#include "vlq/algebra.hpp"

#include <Eigen/SVD>

namespace vlq {

namespace {

void check_grid(const KernelField& M, const RiccatiSolution& P, const char* who) {
  if (M.N() != P.grid.N) throw std::invalid_argument(std::string(who) + ": grid mismatch");
}

void check_inner(int inner, int d, const char* who) {
  if (inner != d) throw std::invalid_argument(std::string(who) + ": shape mismatch with solution dimension");
}

}  // namespace

Matrix pinv(const Matrix& M, double rel_tol) {
  if (M.size() == 0) return M;
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = rel_tol * (sv.size() ? sv(0) : 0.0);
  Vector inv = sv;
  for (Eigen::Index i = 0; i < sv.size(); ++i) inv(i) = sv(i) > cutoff ? 1.0 / sv(i) : 0.0;
  Matrix out = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  if (!out.allFinite()) throw std::runtime_error("pinv: non-finite result");
  return out;
}

Matrix mul_23(const KernelField& M, const RiccatiSolution& P, Side side, int k) {
  check_grid(M, P, "mul_23");
  const int N = P.grid.N;
  const double dt = P.grid.dt;
  if (k < 0 || k > N) throw std::out_of_range("mul_23: node index");
  if (k == N) throw std::domain_error("mul_23: base node N needs the undefined corner value M(T,T)");

  if (side == Side::Left) {
    check_inner(M.cols(), P.d, "mul_23");
    Matrix acc = M(N, k) * P.P2(k);
    for (int i = k + 1; i <= N; ++i) acc.noalias() += dt * M(i, k) * P.P3(i, k).transpose();
    return acc;
  }
  check_inner(M.rows(), P.d, "mul_23");
  Matrix acc = P.P2(k) * M(N, k);
  for (int i = k + 1; i <= N; ++i) acc.noalias() += dt * P.P3(i, k) * M(i, k);
  return acc;
}

Matrix mul_134(const KernelField& M, const RiccatiSolution& P, Side side, int i, int k) {
  check_grid(M, P, "mul_134");
  const int N = P.grid.N;
  const double dt = P.grid.dt;
  if (i <= k || i > N || k < 0) throw std::domain_error("mul_134: needs k < i <= N");

  if (side == Side::Left) {
    check_inner(M.cols(), P.d, "mul_134");
    Matrix acc = M(i, k) * P.P1(i) + M(N, k) * P.P3(i, k);
    for (int r = k + 1; r <= N; ++r) acc.noalias() += dt * M(r, k) * P.P4.get(r, i, k);
    return acc;
  }
  check_inner(M.rows(), P.d, "mul_134");
  Matrix acc = P.P1(i) * M(i, k) + P.P3(i, k).transpose() * M(N, k);
  for (int r = k + 1; r <= N; ++r) acc.noalias() += dt * P.P4.get(i, r, k) * M(r, k);
  return acc;
}

Matrix sandwich(const KernelField& M, const RiccatiSolution& P, const KernelField& N_field, int k) {
  check_grid(M, P, "sandwich");
  check_grid(N_field, P, "sandwich");
  check_inner(M.cols(), P.d, "sandwich");
  check_inner(N_field.rows(), P.d, "sandwich");
  const int N = P.grid.N;
  const double dt = P.grid.dt;
  if (k < 0 || k > N) throw std::out_of_range("sandwich: node index");
  if (k == N) throw std::domain_error("sandwich: base node N needs undefined corner values");

  Matrix acc = M(N, k) * P.P2(k) * N_field(N, k);
  for (int i = k + 1; i <= N; ++i) {
    const Matrix Mi = M(i, k);
    const Matrix Ni = N_field(i, k);
    acc.noalias() += dt * (Mi * P.P1(i) * Ni);
    acc.noalias() += dt * (M(N, k) * P.P3(i, k) * Ni);
    acc.noalias() += dt * (Mi * P.P3(i, k).transpose() * N_field(N, k));
    Matrix inner = Matrix::Zero(P.d, N_field.cols());
    for (int j = k + 1; j <= N; ++j) inner.noalias() += P.P4.get(i, j, k) * N_field(j, k);
    acc.noalias() += dt * dt * (Mi * inner);
  }
  return acc;
}

Matrix aggregate(const RiccatiSolution& P, int k) {
  const int N = P.grid.N;
  const double dt = P.grid.dt;
  if (k < 0 || k > N) throw std::out_of_range("aggregate: node index");
  Matrix acc = P.P2(k);
  for (int i = k + 1; i <= N; ++i) {
    acc.noalias() += dt * Matrix(P.P1(i));
    acc.noalias() += dt * Matrix(P.P3(i, k));
    acc.noalias() += dt * P.P3(i, k).transpose();
    for (int j = k + 1; j <= N; ++j) acc.noalias() += dt * dt * P.P4.get(i, j, k);
  }
  return acc;
}

}  // namespace vlq
