#include "vlq/oracle.hpp"

#include <Eigen/Eigenvalues>

namespace vlq {

namespace {

// Block layout of Z_k: node blocks i = k..N at positions i-k, then the
// terminal forecast block at position N-k+1.
int lifted_dim(int N, int k, int d) { return (N - k + 2) * d; }

}  // namespace

DpSolution solve_dp(const ProblemInstance& problem, int k0, int dimension_cap) {
  const TimeGrid& g = problem.grid;
  const int N = g.N;
  const int d = problem.d;
  const int l = problem.l;
  const double dt = g.dt;
  if (k0 < 0 || k0 >= N) throw std::invalid_argument("solve_dp: start node must satisfy 0 <= k0 < N");
  if (lifted_dim(N, k0, d) > dimension_cap)
    throw std::invalid_argument("solve_dp: lifted dimension exceeds cap; coarsen the grid");

  DpSolution dp;
  dp.grid = g;
  dp.d = d;
  dp.l = l;
  dp.k0 = k0;
  dp.Pi.resize(N - k0 + 1);
  dp.K.resize(N - k0);
  dp.H.resize(N - k0);
  dp.S.resize(N - k0);

  {
    Matrix PiN = Matrix::Zero(2 * d, 2 * d);
    PiN.bottomRightCorner(d, d) = problem.G;
    dp.Pi[N - k0] = PiN;
  }

  for (int k = N - 1; k >= k0; --k) {
    const int m = lifted_dim(N, k, d);
    const int mn = lifted_dim(N, k + 1, d);
    const int term = (N - k + 1) * d;       // terminal block offset in Z_k
    const int term_n = (N - k) * d;         // terminal block offset in Z_{k+1}

    Matrix M = Matrix::Zero(mn, m);
    Matrix Nc = Matrix::Zero(mn, l);
    Matrix C = Matrix::Zero(mn, m);
    Matrix D = Matrix::Zero(mn, l);
    for (int i = k + 1; i <= N; ++i) {
      const int row = (i - k - 1) * d;
      M.block(row, (i - k) * d, d, d).setIdentity();
      M.block(row, 0, d, d) += dt * problem.A(i, k);
      Nc.block(row, 0, d, l) = dt * problem.B(i, k);
      C.block(row, 0, d, d) = problem.C(i, k);
      D.block(row, 0, d, l) = problem.D(i, k);
    }
    M.block(term_n, term, d, d).setIdentity();
    M.block(term_n, 0, d, d) += dt * problem.A(N, k);
    Nc.block(term_n, 0, d, l) = dt * problem.B(N, k);
    C.block(term_n, 0, d, d) = problem.C(N, k);
    D.block(term_n, 0, d, l) = problem.D(N, k);

    const Matrix& Pn = dp.Pi[k + 1 - k0];
    const Matrix PnM = Pn * M;
    const Matrix PnN = Pn * Nc;
    Matrix H = dt * Matrix(problem.R(k)) + Nc.transpose() * PnN + dt * (D.transpose() * Pn * D);
    H = 0.5 * (H + H.transpose());
    Matrix S = Nc.transpose() * PnM + dt * (D.transpose() * Pn * C);

    Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
    const double scale = 1.0 + H.lpNorm<Eigen::Infinity>();
    if (es.eigenvalues().minCoeff() < -1e-10 * scale)
      throw std::runtime_error("solve_dp: control Hessian lost positive semidefiniteness");

    const Matrix Hp = pinv(H);
    Matrix Pi = M.transpose() * PnM + dt * (C.transpose() * Pn * C) - S.transpose() * Hp * S;
    Pi.block(0, 0, d, d) += dt * Matrix(problem.Q(k));
    Pi = 0.5 * (Pi + Pi.transpose());

    dp.H[k - k0] = H;
    dp.S[k - k0] = S;
    dp.K[k - k0] = -Hp * S;
    dp.Pi[k - k0] = Pi;
  }
  return dp;
}

namespace {

Vector lifted_input(const DpSolution& dp, const InputCondition& input) {
  const int N = dp.grid.N;
  const int d = dp.d;
  const int k = input.k0;
  if (k != dp.k0) throw std::invalid_argument("dp oracle: input start node differs from the DP start node");
  if (input.phi1.N() != N || input.phi1.rows() != d || input.phi2.size() != d)
    throw std::invalid_argument("dp oracle: input shape mismatch");
  Vector Z = Vector::Zero(lifted_dim(N, k, d));
  for (int i = k; i <= N; ++i) Z.segment((i - k) * d, d) = Vector(input.phi1(i));
  Z.segment((N - k + 1) * d, d) = input.phi2;
  return Z;
}

}  // namespace

double dp_value(const DpSolution& dp, const InputCondition& input) {
  const Vector Z = lifted_input(dp, input);
  return Z.dot(dp.Pi[0] * Z);
}

GainComparison compare_gains(const DpSolution& dp, const Strategy& strategy) {
  const int N = dp.grid.N;
  const int d = dp.d;
  const int l = dp.l;
  const double dt = dp.grid.dt;
  if (!(strategy.grid == dp.grid) || strategy.d != d || strategy.l != l)
    throw std::invalid_argument("compare_gains: grid or shape mismatch");

  GainComparison cmp;
  for (int k = dp.k0; k < N; ++k) {
    // A causal strategy reads the lifted state through the forecast curve:
    // own block Theta1 + dt*Theta2(t_k,t_k), future blocks dt*Theta2(t_i,t_k),
    // terminal block Theta3.  Dependence on nodes before k must vanish for
    // the embedding to exist; the synthesized strategy has none.
    Matrix Ks = Matrix::Zero(l, lifted_dim(N, k, d));
    Ks.block(0, 0, l, d) = Matrix(strategy.Theta1(k)) + dt * Matrix(strategy.Theta2(k, k));
    for (int i = k + 1; i <= N; ++i) Ks.block(0, (i - k) * d, l, d) = dt * Matrix(strategy.Theta2(i, k));
    Ks.block(0, (N - k + 1) * d, l, d) = strategy.Theta3(k);
    const double dev = (Ks - dp.K[k - dp.k0]).lpNorm<Eigen::Infinity>();
    cmp.per_node.push_back(dev);
    cmp.max_dev = std::max(cmp.max_dev, dev);
  }
  return cmp;
}

QpResult qp_solve(const ProblemInstance& problem, const InputCondition& input) {
  const TimeGrid& g = problem.grid;
  const int N = g.N;
  const int d = problem.d;
  const int l = problem.l;
  const double dt = g.dt;
  const int k0 = input.k0;
  if (k0 < 0 || k0 >= N) throw std::invalid_argument("qp_solve: start node must satisfy 0 <= k0 < N");

  double noise = 0.0;
  for (int i = 1; i <= N; ++i)
    for (int j = 0; j < i; ++j)
      noise = std::max({noise, problem.C(i, j).lpNorm<Eigen::Infinity>(),
                        problem.D(i, j).lpNorm<Eigen::Infinity>()});
  if (noise > 0.0)
    throw std::invalid_argument("qp_solve: only deterministic instances (C = D = 0) are supported");

  const int n = (N - k0) * l;  // stacked controls u_{k0}..u_{N-1}

  // X_j = x0_j + Xu_j * u, built forward from the explicit step rule.
  std::vector<Vector> x0(N + 1, Vector::Zero(d));
  std::vector<Matrix> Xu(N + 1, Matrix::Zero(d, n));
  for (int j = k0; j <= N; ++j) {
    x0[j] = Vector(input.phi1(j));
    for (int k = k0; k < j; ++k) {
      x0[j] += dt * (problem.A(j, k) * x0[k]);
      Xu[j] += dt * (problem.A(j, k) * Xu[k]);
      Xu[j].block(0, (k - k0) * l, d, l) += dt * problem.B(j, k);
    }
  }
  Vector s0 = input.phi2;
  Matrix Su = Matrix::Zero(d, n);
  for (int k = k0; k < N; ++k) {
    s0 += dt * (problem.A(N, k) * x0[k]);
    Su += dt * (problem.A(N, k) * Xu[k]);
    Su.block(0, (k - k0) * l, d, l) += dt * problem.B(N, k);
  }

  Matrix Hq = Matrix::Zero(n, n);
  Vector gq = Vector::Zero(n);
  double c = 0.0;
  for (int k = k0; k < N; ++k) {
    const Matrix Qk = problem.Q(k);
    Hq += dt * (Xu[k].transpose() * Qk * Xu[k]);
    gq += dt * (Xu[k].transpose() * (Qk * x0[k]));
    c += dt * x0[k].dot(Qk * x0[k]);
    Hq.block((k - k0) * l, (k - k0) * l, l, l) += dt * Matrix(problem.R(k));
  }
  Hq += Su.transpose() * problem.G * Su;
  gq += Su.transpose() * (problem.G * s0);
  c += s0.dot(problem.G * s0);
  Hq = 0.5 * (Hq + Hq.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> es(Hq, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * (1.0 + Hq.lpNorm<Eigen::Infinity>()))
    throw std::runtime_error("qp_solve: objective is not convex on this instance");

  const Vector u = -(pinv(Hq) * gq);

  QpResult out;
  out.u_star = NodeField(N, l, 1);
  for (int k = k0; k < N; ++k) out.u_star(k) = u.segment((k - k0) * l, l);
  out.value = u.dot(Hq * u) + 2.0 * gq.dot(u) + c;
  return out;
}

}  // namespace vlq
