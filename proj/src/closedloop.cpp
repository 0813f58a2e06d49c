#include "vlq/closedloop.hpp"

#include <cmath>

#include "vlq/rng.hpp"

namespace vlq {

namespace {

Matrix sym(const Matrix& M) { return 0.5 * (M + M.transpose()); }

PathEnsemble run_paths(const ProblemInstance& pb, const Strategy* strat, const NodeField* open_u,
                       const InputCondition& input, int n_paths, std::uint64_t seed) {
  const TimeGrid& g = pb.grid;
  const int N = g.N;
  const int d = pb.d, l = pb.l;
  const double dt = g.dt;
  const int k0 = input.k0;
  if (n_paths < 1) throw std::invalid_argument("simulate: need at least one path");
  if (k0 < 0 || k0 >= N) throw std::invalid_argument("simulate: start node must satisfy 0 <= k0 < N");
  if (input.phi1.N() != N || input.phi1.rows() != d || input.phi2.size() != d)
    throw std::invalid_argument("simulate: input shape mismatch");

  PathEnsemble out;
  out.grid = g;
  out.d = d;
  out.l = l;
  out.k0 = k0;
  out.seed = seed;
  out.paths.resize(n_paths);

  for (int p = 0; p < n_paths; ++p) {
    SimPath& path = out.paths[p];
    path.X = NodeField(N, d, 1);
    path.u = NodeField(N, l, 1);
    path.sX2 = NodeField(N, d, 1);
    path.dW.assign(N, 0.0);

    NodeField forecast = input.phi1;  // spliced curve: past entries become realized states
    Vector sX2 = input.phi2;
    path.X(k0) = Vector(input.phi1(k0));
    path.sX2(k0) = sX2;

    for (int k = k0; k < N; ++k) {
      const Vector Xk = forecast(k);
      Vector uk;
      if (strat)
        uk = outcome_control(*strat, forecast, forecast, sX2, k0, k);
      else
        uk = Vector(open_u->operator()(k));
      path.u(k) = uk;

      const double dW = rng::brownian_increment(seed, std::uint64_t(p), std::uint64_t(k), dt);
      path.dW[k] = dW;
      for (int i = k + 1; i <= N; ++i) {
        const Vector drift = pb.A(i, k) * Xk + pb.B(i, k) * uk;
        const Vector diff = pb.C(i, k) * Xk + pb.D(i, k) * uk;
        forecast(i) = Vector(forecast(i)) + dt * drift + dW * diff;
      }
      sX2 += dt * (pb.A(N, k) * Xk + pb.B(N, k) * uk) + dW * (pb.C(N, k) * Xk + pb.D(N, k) * uk);

      if (!Vector(forecast(k + 1)).allFinite() || !sX2.allFinite()) {
        path.blew_up = true;
        break;
      }
      path.X(k + 1) = Vector(forecast(k + 1));
      path.sX2(k + 1) = sX2;
    }
  }
  return out;
}

}  // namespace

PathEnsemble simulate(const ProblemInstance& problem, const Strategy& strategy,
                      const InputCondition& input, int n_paths, std::uint64_t seed) {
  if (!(strategy.grid == problem.grid))
    throw std::invalid_argument("simulate: strategy grid mismatch");
  return run_paths(problem, &strategy, nullptr, input, n_paths, seed);
}

PathEnsemble simulate_open_loop(const ProblemInstance& problem, const NodeField& u,
                                const InputCondition& input, int n_paths, std::uint64_t seed) {
  if (u.N() != problem.grid.N || u.rows() != problem.l || u.cols() != 1)
    throw std::invalid_argument("simulate_open_loop: control field shape mismatch");
  return run_paths(problem, nullptr, &u, input, n_paths, seed);
}

McCost mc_cost(const PathEnsemble& ensemble, const ProblemInstance& problem) {
  const int N = ensemble.grid.N;
  const double dt = ensemble.grid.dt;
  const int k0 = ensemble.k0;
  if (ensemble.paths.empty()) throw std::invalid_argument("mc_cost: empty ensemble");
  if (!(ensemble.grid == problem.grid)) throw std::invalid_argument("mc_cost: grid mismatch");

  std::vector<double> costs;
  costs.reserve(ensemble.paths.size());
  for (const SimPath& p : ensemble.paths) {
    if (p.blew_up) throw std::runtime_error("mc_cost: ensemble contains a diverged path");
    double J = Vector(p.sX2(N)).dot(problem.G * Vector(p.sX2(N)));
    for (int k = k0; k < N; ++k) {
      const Vector X = p.X(k);
      const Vector u = p.u(k);
      J += dt * (X.dot(problem.Q(k) * X) + u.dot(problem.R(k) * u));
    }
    costs.push_back(J);
  }
  McCost out;
  const double n = double(costs.size());
  for (double c : costs) out.mean += c;
  out.mean /= n;
  if (costs.size() > 1) {
    double ss = 0.0;
    for (double c : costs) ss += (c - out.mean) * (c - out.mean);
    out.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

namespace {

// Lifted layout for exact_cost: node blocks i = k0..N at positions i-k0,
// then the terminal forecast block.  Past node blocks are frozen (identity
// rows), so the spliced curve and the realized history live in one vector.
double exact_cost_impl(const ProblemInstance& pb, const Strategy* strat, const NodeField* open_u,
                       const NodeField* offset, const InputCondition& input, int cap) {
  const TimeGrid& g = pb.grid;
  const int N = g.N;
  const int d = pb.d, l = pb.l;
  const double dt = g.dt;
  const int k0 = input.k0;
  if (k0 < 0 || k0 >= N) throw std::invalid_argument("exact_cost: start node must satisfy 0 <= k0 < N");
  const int m = (N - k0 + 2) * d;
  if (m > cap) throw std::invalid_argument("exact_cost: lifted dimension exceeds cap");
  const int term = (N - k0 + 1) * d;
  auto blk = [&](int i) { return (i - k0) * d; };

  Vector mean = Vector::Zero(m);
  for (int i = k0; i <= N; ++i) mean.segment(blk(i), d) = Vector(input.phi1(i));
  mean.segment(term, d) = input.phi2;
  Matrix S = mean * mean.transpose();

  double J = 0.0;
  for (int k = k0; k < N; ++k) {
    Matrix K = Matrix::Zero(l, m);
    Vector c = Vector::Zero(l);
    if (strat) {
      for (int r = k0; r <= N; ++r) K.block(0, blk(r), l, d) = dt * Matrix(strat->Theta2(r, k));
      K.block(0, blk(k), l, d) += Matrix(strat->Theta1(k));
      K.block(0, term, l, d) = strat->Theta3(k);
      c = Vector(strat->v(k));
    } else {
      c = Vector(open_u->operator()(k));
    }
    if (offset) c += Vector(offset->operator()(k));

    // stage cost before stepping
    J += dt * (Matrix(pb.Q(k)) * S.block(blk(k), blk(k), d, d)).trace();
    const Matrix Ru = Matrix(pb.R(k));
    const Vector Km = K * mean;
    J += dt * ((Ru * (K * S * K.transpose())).trace() + 2.0 * c.dot(Ru * Km) + c.dot(Ru * c));

    Matrix Adrift = Matrix::Identity(m, m);
    Matrix Cdiff = Matrix::Zero(m, m);
    Vector a = Vector::Zero(m), gvec = Vector::Zero(m);
    auto add_row = [&](int row, const Matrix& Ak, const Matrix& Bk, const Matrix& Ck,
                       const Matrix& Dk) {
      Adrift.block(row, blk(k), d, d) += dt * Ak;
      Adrift.block(row, 0, d, m) += dt * (Bk * K);
      a.segment(row, d) += dt * (Bk * c);
      Cdiff.block(row, blk(k), d, d) += Ck;
      Cdiff.block(row, 0, d, m) += Dk * K;
      gvec.segment(row, d) += Dk * c;
    };
    for (int i = k + 1; i <= N; ++i) add_row(blk(i), pb.A(i, k), pb.B(i, k), pb.C(i, k), pb.D(i, k));
    add_row(term, pb.A(N, k), pb.B(N, k), pb.C(N, k), pb.D(N, k));

    const Vector mean_next = Adrift * mean + a;
    Matrix S_next = Adrift * S * Adrift.transpose() + Adrift * mean * a.transpose() +
                    a * (Adrift * mean).transpose() + a * a.transpose();
    S_next += dt * (Cdiff * S * Cdiff.transpose() + Cdiff * mean * gvec.transpose() +
                    gvec * (Cdiff * mean).transpose() + gvec * gvec.transpose());
    mean = mean_next;
    S = sym(S_next);
  }
  J += (pb.G * S.block(term, term, d, d)).trace();
  return J;
}

}  // namespace

double exact_cost(const ProblemInstance& problem, const Strategy& strategy,
                  const InputCondition& input, const NodeField* offset, int dimension_cap) {
  if (!(strategy.grid == problem.grid)) throw std::invalid_argument("exact_cost: grid mismatch");
  return exact_cost_impl(problem, &strategy, nullptr, offset, input, dimension_cap);
}

double exact_cost_open_loop(const ProblemInstance& problem, const NodeField& u,
                            const InputCondition& input, int dimension_cap) {
  if (u.N() != problem.grid.N || u.rows() != problem.l)
    throw std::invalid_argument("exact_cost_open_loop: control shape mismatch");
  return exact_cost_impl(problem, nullptr, &u, nullptr, input, dimension_cap);
}

LyapunovSolution lyapunov_system(const ProblemInstance& pb, const Strategy& strat,
                                 const InputCondition& input, const NodeField* offset) {
  const TimeGrid& g = pb.grid;
  const int N = g.N;
  const int d = pb.d, l = pb.l;
  const double dt = g.dt;
  const int k0 = input.k0;
  const int n = 2 * d + l;
  if (!(strat.grid == g)) throw std::invalid_argument("lyapunov_system: grid mismatch");
  if (k0 < 0 || k0 >= N) throw std::invalid_argument("lyapunov_system: start node");

  LyapunovSolution sol;
  sol.grid = g;
  sol.n = n;
  sol.L1 = NodeField(N, n, n);
  sol.L2 = SquareField(N, n, n);
  sol.Abig = KernelField(N, n, n);
  sol.Cbig = KernelField(N, n, n);
  sol.Qbig = NodeField(N, n, n);
  sol.Phi = NodeField(N, n, 1);

  // Strategy-transformed kernel rows: f12(j,m) spliced over realized past and
  // forecast future collapses to one sum over the late index.
  auto f12 = [&](const KernelField& f, int j, int m) {
    Matrix acc = Matrix(strat.Theta1(j)) * f(j, m);
    for (int r = m + 1; r <= N; ++r) acc.noalias() += dt * Matrix(strat.Theta2(r, j)) * f(r, m);
    acc.noalias() += Matrix(strat.Theta3(j)) * f(N, m);
    return acc;
  };

  for (int m = k0; m < N; ++m)
    for (int j = m + 1; j <= N - 1; ++j) {
      MatMap A = sol.Abig(j, m);
      A.setZero();
      A.block(0, 0, d, d) = pb.A(j, m);
      A.block(0, d, d, l) = pb.B(j, m);
      A.block(d, 0, l, d) = f12(pb.A, j, m);
      A.block(d, d, l, l) = f12(pb.B, j, m);
      A.block(d + l, 0, d, d) = pb.A(N, m);
      A.block(d + l, d, d, l) = pb.B(N, m);
      MatMap C = sol.Cbig(j, m);
      C.setZero();
      C.block(0, 0, d, d) = pb.C(j, m);
      C.block(0, d, d, l) = pb.D(j, m);
      C.block(d, 0, l, d) = f12(pb.C, j, m);
      C.block(d, d, l, l) = f12(pb.D, j, m);
      C.block(d + l, 0, d, d) = pb.C(N, m);
      C.block(d + l, d, d, l) = pb.D(N, m);
    }

  for (int k = k0; k < N; ++k) {
    // stage weight: running Q/R plus the one-step expansion of the terminal
    // quadratic (including its dt^2 drift-drift term).
    Matrix arow = Matrix::Zero(d, n), crow = Matrix::Zero(d, n);
    arow.block(0, 0, d, d) = pb.A(N, k);
    arow.block(0, d, d, l) = pb.B(N, k);
    crow.block(0, 0, d, d) = pb.C(N, k);
    crow.block(0, d, d, l) = pb.D(N, k);
    Matrix Ez = Matrix::Zero(d, n);
    Ez.block(0, d + l, d, d).setIdentity();
    Matrix Qb = Matrix::Zero(n, n);
    Qb.block(0, 0, d, d) = pb.Q(k);
    Qb.block(d, d, l, l) = pb.R(k);
    Qb += Ez.transpose() * pb.G * arow + arow.transpose() * pb.G * Ez;
    Qb += dt * (arow.transpose() * pb.G * arow);
    Qb += crow.transpose() * pb.G * crow;
    sol.Qbig(k) = sym(Qb);

    Vector phi = Vector::Zero(n);
    phi.segment(0, d) = Vector(input.phi1(k));
    Vector p2 = Matrix(strat.Theta1(k)) * Vector(input.phi1(k)) + Matrix(strat.Theta3(k)) * input.phi2 +
                Vector(strat.v(k));
    for (int r = k0; r <= N; ++r) p2 += dt * Matrix(strat.Theta2(r, k)) * Vector(input.phi1(r));
    if (offset) p2 += Vector(offset->operator()(k));
    phi.segment(d, l) = p2;
    phi.segment(d + l, d) = input.phi2;
    sol.Phi(k) = phi;
  }

  auto L2or = [&](int j, int s) -> Matrix {
    if (j > s) return sol.L2(j, s);
    return Matrix(sol.L2(s, j)).transpose();
  };

  for (int k = N - 1; k >= k0; --k) {
    // two-time couplings with base k
    for (int j = k + 1; j <= N - 1; ++j) {
      Matrix acc = Matrix(sol.L1(j)) * Matrix(sol.Abig(j, k));
      for (int s = k + 1; s <= N - 1; ++s) {
        if (s == j) continue;
        acc.noalias() += dt * (L2or(j, s) * Matrix(sol.Abig(s, k)));
      }
      sol.L2(j, k) = acc;
    }
    // one-time weight at k
    Matrix acc = sol.Qbig(k);
    for (int s = k + 1; s <= N - 1; ++s) {
      const Matrix As = sol.Abig(s, k);
      const Matrix Cs = sol.Cbig(s, k);
      const Matrix L1s = sol.L1(s);
      acc.noalias() += dt * (Cs.transpose() * L1s * Cs);
      acc.noalias() += dt * dt * (As.transpose() * L1s * As);
      Matrix innerC = Matrix::Zero(n, n), innerA = Matrix::Zero(n, n);
      for (int th = k + 1; th <= N - 1; ++th) {
        if (th == s) continue;
        const Matrix L2sth = L2or(s, th);
        innerC.noalias() += L2sth * Matrix(sol.Cbig(th, k));
        innerA.noalias() += L2sth * Matrix(sol.Abig(th, k));
      }
      acc.noalias() += dt * dt * (Cs.transpose() * innerC);
      acc.noalias() += dt * dt * dt * (As.transpose() * innerA);
    }
    sol.L1(k) = sym(acc);
  }

  double J = input.phi2.dot(pb.G * input.phi2);
  for (int k = k0; k < N; ++k) {
    const Vector pk = sol.Phi(k);
    J += dt * pk.dot(Matrix(sol.L1(k)) * pk);
    for (int j = k + 1; j <= N - 1; ++j)
      J += 2.0 * dt * dt * Vector(sol.Phi(j)).dot(Matrix(sol.L2(j, k)) * pk);
  }
  sol.cost = J;
  return sol;
}

double lyapunov_cost(const ProblemInstance& problem, const Strategy& strategy,
                     const InputCondition& input, const NodeField* offset) {
  return lyapunov_system(problem, strategy, input, offset).cost;
}

}  // namespace vlq
