#include "vlq/riccati.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <limits>

namespace vlq {

namespace {

Matrix sym(const Matrix& M) { return 0.5 * (M + M.transpose()); }

// Ground diagonal products at the freshly completed base k: the s = k+1 slice
// of the P_{1,3,4} products with the self-referential diagonal cell left out.
Matrix pa134_ground(const ProblemInstance& pb, const RiccatiSolution& P, int k) {
  const int N = P.grid.N;
  const double dt = P.grid.dt;
  Matrix acc = Matrix(P.P1(k + 1)) * pb.A(k + 1, k);
  acc.noalias() += P.P3(k + 1, k).transpose() * pb.A(N, k);
  for (int r = k + 2; r <= N; ++r) acc.noalias() += dt * P.P4.get(k + 1, r, k) * pb.A(r, k);
  return acc;
}

Matrix b1_ground(const ProblemInstance& pb, const RiccatiSolution& P, int k) {
  const int N = P.grid.N;
  const double dt = P.grid.dt;
  Matrix acc = pb.B(k + 1, k).transpose() * Matrix(P.P1(k + 1));
  acc.noalias() += pb.B(N, k).transpose() * Matrix(P.P3(k + 1, k));
  for (int r = k + 2; r <= N; ++r) acc.noalias() += dt * pb.B(r, k).transpose() * P.P4.get(r, k + 1, k);
  return acc;
}

RiccatiSolution solve_direct(const ProblemInstance& pb, const RiccatiOptions& opt) {
  const TimeGrid& g = pb.grid;
  const int N = g.N;
  const int d = pb.d, l = pb.l;
  const double dt = g.dt;

  RiccatiSolution P = RiccatiSolution::zero(g, d, l);
  P.scheme = opt.alt_inner_order ? "direct-quadrature/alt-order" : "direct-quadrature";

  const KernelField Bt = pb.B.transposed();
  const KernelField Ct = pb.C.transposed();
  const KernelField Dt = pb.D.transposed();

  NodeField PA23(N, d, d);       // (P_{2,3} |> A) per base node
  KernelField PA134(N, d, d);    // (P_{1,3,4} |> A) per (late, base) pair
  NodeField diag_seed(N, d, d);  // one-sided P4 diagonal seed, valid at nodes >= 1

  // Terminal data and base-N coefficient conventions (the sums' s = N terms
  // carry Dcoef = B2coef = PA23 = 0 there; Rhat falls back to R(T)).
  P.P1(N) = pb.Q(N);
  P.P2(N) = pb.G;
  P.Rhat(N) = pb.R(N);
  P.RhatPinv(N) = pinv(P.Rhat(N));

  for (int k = N - 1; k >= 0; --k) {
    // -- P2 ---------------------------------------------------------------
    if (!opt.alt_inner_order) {
      const Matrix B2n = P.B2coef(k + 1);
      P.P2(k) = sym(Matrix(P.P2(k + 1)) - dt * (B2n.transpose() * Matrix(P.RhatPinv(k + 1)) * B2n));
    } else {
      Matrix acc = pb.G;
      for (int s = N; s >= k + 1; --s) {
        const Matrix B2s = P.B2coef(s);
        acc.noalias() -= dt * (B2s.transpose() * Matrix(P.RhatPinv(s)) * B2s);
      }
      P.P2(k) = sym(acc);
    }

    // -- P3 ---------------------------------------------------------------
    {
      const Matrix fresh = Matrix(PA23(k + 1)) -
                           P.B2coef(k + 1).transpose() * Matrix(P.RhatPinv(k + 1)) * Matrix(P.Dcoef(k + 1));
      P.P3(k + 1, k) = fresh;
    }
    for (int kp = k + 2; kp <= N; ++kp) {
      if (!opt.alt_inner_order) {
        P.P3(kp, k) = Matrix(P.P3(kp, k + 1)) -
                      dt * (P.B2coef(k + 1).transpose() * Matrix(P.RhatPinv(k + 1)) * Matrix(P.B1coef(kp, k + 1)));
      } else {
        Matrix acc = Matrix(PA23(kp)) -
                     P.B2coef(kp).transpose() * Matrix(P.RhatPinv(kp)) * Matrix(P.Dcoef(kp));
        for (int th = kp - 1; th >= k + 1; --th)
          acc.noalias() -= dt * (P.B2coef(th).transpose() * Matrix(P.RhatPinv(th)) * Matrix(P.B1coef(kp, th)));
        P.P3(kp, k) = acc;
      }
    }

    // -- P4, everything except the ground diagonal cell -------------------
    if (!opt.alt_inner_order) {
      const Matrix Rp1 = P.RhatPinv(k + 1);
      for (int j = k + 2; j <= N; ++j) {
        const Matrix RB1j = Rp1 * Matrix(P.B1coef(j, k + 1));
        // Diagonal blocks are symmetrized so the storage-level transpose
        // symmetry holds exactly on the diagonal as well.
        P.P4.stored(j, j, k) =
            sym(P.P4.stored(j, j, k + 1) - dt * (P.B1coef(j, k + 1).transpose() * RB1j));
        for (int i = j + 1; i <= N; ++i)
          P.P4.stored(i, j, k) = P.P4.stored(i, j, k + 1) -
                                 dt * (P.B1coef(i, k + 1).transpose() * RB1j);
      }
      const Matrix RD1 = Rp1 * Matrix(P.Dcoef(k + 1));
      for (int i = k + 2; i <= N; ++i)
        P.P4.stored(i, k + 1, k) = Matrix(PA134(i, k + 1)) - P.B1coef(i, k + 1).transpose() * RD1;
    } else {
      for (int j = k + 1; j <= N; ++j) {
        for (int i = std::max(j, k + 2); i <= N; ++i) {
          Matrix acc;
          if (i > j) {  // fresh form anchored at base j
            acc = Matrix(PA134(i, j)) -
                  P.B1coef(i, j).transpose() * Matrix(P.RhatPinv(j)) * Matrix(P.Dcoef(j));
          } else {  // diagonal: one-sided seed anchored at base i-1
            acc = diag_seed(i);
          }
          const int hi = (i > j) ? j - 1 : i - 1;
          for (int th = hi; th >= k + 1; --th)
            acc.noalias() -= dt * (P.B1coef(i, th).transpose() * Matrix(P.RhatPinv(th)) * Matrix(P.B1coef(j, th)));
          P.P4.stored(i, j, k) = (i == j) ? sym(acc) : acc;
        }
      }
    }

    // -- P4 ground diagonal (k+1, k+1, k) ---------------------------------
    {
      Matrix seed = pa134_ground(pb, P, k);
      seed.noalias() -= b1_ground(pb, P, k).transpose() * Matrix(P.RhatPinv(k + 1)) * Matrix(P.Dcoef(k + 1));
      diag_seed(k + 1) = sym(seed);
      P.P4.stored(k + 1, k + 1, k) = diag_seed(k + 1);
    }

    // -- derived coefficient caches at base k ------------------------------
    P.Rhat(k) = sym(Matrix(pb.R(k)) + sandwich(Dt, P, pb.D, k));
    P.RhatPinv(k) = pinv(P.Rhat(k));
    P.Dcoef(k) = sandwich(Dt, P, pb.C, k);
    P.B2coef(k) = mul_23(Bt, P, Side::Left, k);
    PA23(k) = mul_23(pb.A, P, Side::Right, k);
    for (int r = k + 1; r <= N; ++r) {
      P.B1coef(r, k) = mul_134(Bt, P, Side::Left, r, k);
      PA134(r, k) = mul_134(pb.A, P, Side::Right, r, k);
    }

    // -- P1 ----------------------------------------------------------------
    const Matrix Dk = P.Dcoef(k);
    P.P1(k) = sym(Matrix(pb.Q(k)) + sandwich(Ct, P, pb.C, k) -
                  Dk.transpose() * Matrix(P.RhatPinv(k)) * Dk);
  }

  P.P1.assert_finite("P1");
  P.P2.assert_finite("P2");
  P.P3.assert_finite("P3");
  P.P4.assert_finite("P4");
  return P;
}

RiccatiSolution solve_dp_consistent(const ProblemInstance& pb, const RiccatiOptions& opt) {
  const TimeGrid& g = pb.grid;
  const int N = g.N;
  const int d = pb.d, l = pb.l;
  const double dt = g.dt;

  const DpSolution dp = solve_dp(pb, 0, opt.dp_dimension_cap);

  RiccatiSolution P = RiccatiSolution::zero(g, d, l);
  P.scheme = "dp-consistent";

  // Cell shift: DP block j (the cell [t_j, t_{j+1}]) carries the node t_{j+1}
  // value of the right-endpoint quadrature.
  for (int i = 1; i <= N; ++i) P.P1(i) = sym(dp.Pi[i - 1].block(0, 0, d, d) / dt);
  P.P1(0) = P.P1(1);
  P.P2(N) = pb.G;
  for (int k = 0; k < N; ++k) {
    const Matrix& Pi = dp.Pi[k];
    const int term = (N - k + 1) * d;
    P.P2(k) = Pi.block(term, term, d, d);
    for (int i = k + 1; i <= N; ++i) P.P3(i, k) = Pi.block(term, (i - 1 - k) * d, d, d) / dt;
    for (int j = k + 1; j <= N; ++j) {
      const int bj = (j - 1 - k) * d;
      P.P4.stored(j, j, k) = sym((Pi.block(bj, bj, d, d) - dt * Matrix(P.P1(j))) / (dt * dt));
      for (int i = j + 1; i <= N; ++i)
        P.P4.stored(i, j, k) = Pi.block((i - 1 - k) * d, bj, d, d) / (dt * dt);
    }
  }

  // Derived coefficients straight from the DP (node-aligned), so that the
  // synthesized strategy reproduces the DP gains exactly.
  P.Rhat(N) = pb.R(N);
  P.RhatPinv(N) = pinv(P.Rhat(N));
  for (int k = 0; k < N; ++k) {
    P.Rhat(k) = sym(dp.H[k] / dt);
    P.RhatPinv(k) = dt * pinv(dp.H[k]);
    const Matrix& S = dp.S[k];
    P.Dcoef(k) = S.block(0, 0, l, d) / dt;
    P.B2coef(k) = S.block(0, (N - k + 1) * d, l, d) / dt;
    for (int i = k + 1; i <= N; ++i) P.B1coef(i, k) = S.block(0, (i - k) * d, l, d) / (dt * dt);
  }
  return P;
}

}  // namespace

RiccatiSolution solve_riccati(const ProblemInstance& problem, const RiccatiOptions& options) {
  if (problem.grid.N > options.pyramid_cap)
    throw std::invalid_argument("solve_riccati: grid exceeds the pyramid storage cap");
  if (options.scheme == RiccatiScheme::DpConsistent) return solve_dp_consistent(problem, options);
  return solve_direct(problem, options);
}

RegularityReport regularity_report(const RiccatiSolution& P, const ProblemInstance& problem,
                                   double tol) {
  const int N = P.grid.N;
  const int l = P.l;
  RegularityReport rep;
  rep.lambda_hat = std::numeric_limits<double>::infinity();
  double worst_range = 0.0, scale = 0.0;
  for (int k = 0; k <= N; ++k) {
    const Matrix Rh = P.Rhat(k);
    const Matrix Rp = P.RhatPinv(k);
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym(Rh), Eigen::EigenvaluesOnly);
    rep.rhat_min_eig.push_back(es.eigenvalues().minCoeff());
    rep.lambda_hat = std::min(rep.lambda_hat, rep.rhat_min_eig.back());
    scale = std::max(scale, Rh.lpNorm<Eigen::Infinity>());

    const Matrix proj = Matrix::Identity(l, l) - Rh * Rp;
    const Matrix DB2 = Matrix(P.Dcoef(k)) + Matrix(P.B2coef(k));
    rep.range_residual_D.push_back((proj * DB2).lpNorm<Eigen::Infinity>());
    rep.sup_rp_D = std::max(rep.sup_rp_D, (Rp * Matrix(P.Dcoef(k))).lpNorm<Eigen::Infinity>());
    rep.sup_rp_B2 = std::max(rep.sup_rp_B2, (Rp * Matrix(P.B2coef(k))).lpNorm<Eigen::Infinity>());
    double rb1 = 0.0;
    for (int r = k + 1; r <= N && k < N; ++r) {
      const Matrix B1 = P.B1coef(r, k);
      rb1 = std::max(rb1, (proj * B1).lpNorm<Eigen::Infinity>());
      rep.sup_rp_B1 = std::max(rep.sup_rp_B1, (Rp * B1).lpNorm<Eigen::Infinity>());
    }
    rep.range_residual_B1.push_back(rb1);
    worst_range = std::max({worst_range, rep.range_residual_D.back(), rb1});
  }
  (void)problem;
  const double min_eig = *std::min_element(rep.rhat_min_eig.begin(), rep.rhat_min_eig.end());
  rep.regular = min_eig >= -tol * (1.0 + scale) && worst_range <= tol * (1.0 + scale);
  rep.strongly_regular = rep.regular && rep.lambda_hat >= 1e-12;
  return rep;
}

RiccatiResidual riccati_residual(const RiccatiSolution& P, const ProblemInstance& pb) {
  const int N = P.grid.N;
  const int d = P.d, l = P.l;
  const double dt = P.grid.dt;
  if (!(pb.grid == P.grid)) throw std::invalid_argument("riccati_residual: grid mismatch");

  const KernelField Bt = pb.B.transposed();
  const KernelField Ct = pb.C.transposed();
  const KernelField Dt = pb.D.transposed();

  // Re-derive every coefficient from the solution components alone.
  NodeField Rh(N, l, l), Rp(N, l, l), Dc(N, l, d), B2(N, l, d), PA23(N, d, d);
  KernelField B1(N, l, d), PA134(N, d, d);
  Rh(N) = pb.R(N);
  Rp(N) = pinv(Rh(N));
  for (int k = 0; k < N; ++k) {
    Rh(k) = sym(Matrix(pb.R(k)) + sandwich(Dt, P, pb.D, k));
    Rp(k) = pinv(Rh(k));
    Dc(k) = sandwich(Dt, P, pb.C, k);
    B2(k) = mul_23(Bt, P, Side::Left, k);
    PA23(k) = mul_23(pb.A, P, Side::Right, k);
    for (int r = k + 1; r <= N; ++r) {
      B1(r, k) = mul_134(Bt, P, Side::Left, r, k);
      PA134(r, k) = mul_134(pb.A, P, Side::Right, r, k);
    }
  }

  RiccatiResidual res;

  // P1 equation.
  for (int k = 0; k < N; ++k) {
    const Matrix rhs = sym(Matrix(pb.Q(k)) + sandwich(Ct, P, pb.C, k) -
                           Matrix(Dc(k)).transpose() * Matrix(Rp(k)) * Matrix(Dc(k)));
    res.p1 = std::max(res.p1, (Matrix(P.P1(k)) - rhs).lpNorm<Eigen::Infinity>());
  }
  res.p1 = std::max(res.p1, (Matrix(P.P1(N)) - Matrix(pb.Q(N))).lpNorm<Eigen::Infinity>());

  // P2 equation (suffix accumulation, same order as the solver).
  {
    Matrix acc = pb.G;
    res.p2 = (Matrix(P.P2(N)) - acc).lpNorm<Eigen::Infinity>();
    for (int k = N - 1; k >= 0; --k) {
      const Matrix B2n = B2(k + 1);
      acc -= dt * (B2n.transpose() * Matrix(Rp(k + 1)) * B2n);
      res.p2 = std::max(res.p2, (Matrix(P.P2(k)) - sym(acc)).lpNorm<Eigen::Infinity>());
    }
  }

  // P3 equation.
  for (int kp = 1; kp <= N; ++kp) {
    Matrix acc = Matrix(PA23(kp));
    if (kp < N) acc.noalias() -= B2(kp).transpose() * Matrix(Rp(kp)) * Matrix(Dc(kp));
    for (int k = kp - 1; k >= 0; --k) {
      if (k + 1 < kp)
        acc.noalias() -= dt * (B2(k + 1).transpose() * Matrix(Rp(k + 1)) * Matrix(B1(kp, k + 1)));
      res.p3 = std::max(res.p3, (Matrix(P.P3(kp, k)) - acc).lpNorm<Eigen::Infinity>());
    }
  }

  // P4 equation, off-diagonal cells then the diagonal convention.
  for (int j = 1; j <= N; ++j) {
    for (int i = j; i <= N; ++i) {
      Matrix acc;
      if (i > j) {
        acc = Matrix(PA134(i, j));
        if (j < N) acc.noalias() -= B1(i, j).transpose() * Matrix(Rp(j)) * Matrix(Dc(j));
      } else {
        // Seed at base i-1 with the self cell excluded.
        Matrix pa = Matrix(PA134(i, i - 1)) - dt * P.P4.get(i, i, i - 1) * pb.A(i, i - 1);
        Matrix b1g = Matrix(B1(i, i - 1)) - dt * pb.B(i, i - 1).transpose() * P.P4.get(i, i, i - 1);
        if (i < N)
          acc = sym(pa - b1g.transpose() * Matrix(Rp(i)) * Matrix(Dc(i)));
        else
          acc = sym(pa);
      }
      for (int k = j - 1; k >= 0; --k) {
        if (k + 1 < j)
          acc.noalias() -= dt * (B1(i, k + 1).transpose() * Matrix(Rp(k + 1)) * Matrix(B1(j, k + 1)));
        res.p4 = std::max(res.p4, (P.P4.get(i, j, k) - (i == j ? sym(acc) : acc)).lpNorm<Eigen::Infinity>());
      }
    }
  }
  return res;
}

NodeField reduce_sde(const ProblemInstance& pb) {
  const int N = pb.grid.N;
  const double dt = pb.grid.dt;

  auto constant_of = [&](const KernelField& F, const char* who) {
    const Matrix first = F(1, 0);
    for (int i = 1; i <= N; ++i)
      for (int j = 0; j < i; ++j)
        if ((Matrix(F(i, j)) - first).lpNorm<Eigen::Infinity>() > 1e-12)
          throw std::invalid_argument(std::string("reduce_sde: kernel ") + who + " is not constant");
    return first;
  };
  auto constant_node = [&](const NodeField& F, const char* who) {
    const Matrix first = F(0);
    for (int k = 0; k <= N; ++k)
      if ((Matrix(F(k)) - first).lpNorm<Eigen::Infinity>() > 1e-12)
        throw std::invalid_argument(std::string("reduce_sde: weight ") + who + " is not constant");
    return first;
  };
  const Matrix A = constant_of(pb.A, "A"), B = constant_of(pb.B, "B");
  const Matrix C = constant_of(pb.C, "C"), D = constant_of(pb.D, "D");
  const Matrix Q = constant_node(pb.Q, "Q"), R = constant_node(pb.R, "R");

  auto f = [&](const Matrix& Pm) {
    const Matrix Rh = R + D.transpose() * Pm * D;
    const Matrix gain = Pm * B + C.transpose() * Pm * D;  // d x l
    return Matrix(-(A.transpose() * Pm + Pm * A + C.transpose() * Pm * C + Q) +
                  gain * pinv(Rh) * gain.transpose());
  };

  NodeField out(N, pb.d, pb.d);
  out(N) = pb.G;
  const double h = -dt;  // integrate backward
  for (int k = N - 1; k >= 0; --k) {
    const Matrix P0 = out(k + 1);
    const Matrix k1 = f(P0);
    const Matrix k2 = f(P0 + 0.5 * h * k1);
    const Matrix k3 = f(P0 + 0.5 * h * k2);
    const Matrix k4 = f(P0 + h * k3);
    out(k) = sym(P0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  }
  out.assert_finite("reduce_sde");
  return out;
}

RiccatiSolution reduce_vie(const ProblemInstance& pb) {
  const int N = pb.grid.N;
  double nz = 0.0;
  for (int i = 1; i <= N; ++i)
    for (int j = 0; j < i; ++j)
      nz = std::max({nz, pb.A(i, j).lpNorm<Eigen::Infinity>(), pb.C(i, j).lpNorm<Eigen::Infinity>(),
                     pb.D(i, j).lpNorm<Eigen::Infinity>()});
  if (nz > 0.0) throw std::invalid_argument("reduce_vie: requires A = C = D = 0");

  // With no drift/diffusion kernels the general recursion collapses term by
  // term: every A/C/D-borne product is an exact zero, so the shared solver
  // already produces P1 = Q and the simplified P2/P3/P4 recursion bit for bit.
  RiccatiOptions opt;
  RiccatiSolution P = solve_direct(pb, opt);
  P.scheme = "vie-reduction";
  for (int k = 0; k <= N; ++k) P.P1(k) = pb.Q(k);
  return P;
}

KernelField assemble_convolution_drift(const TimeGrid& grid, int d,
                                       const std::function<double(double)>& Nker) {
  KernelField A(grid.N, d, d, true);
  for (int i = 1; i <= grid.N; ++i)
    for (int j = 0; j < i; ++j) {
      double v = 0.0;
      for (int th = j + 1; th <= i; ++th) v += grid.dt * Nker(grid.dt * (th - j));
      A(i, j) = v * Matrix::Identity(d, d);
    }
  return A;
}

VideReduction reduce_vide(const RiccatiSolution& P, const ProblemInstance& pb,
                          const std::function<double(double)>& Nker) {
  const int N = pb.grid.N;
  const int d = pb.d;
  const double dt = pb.grid.dt;
  if (!(pb.grid == P.grid)) throw std::invalid_argument("reduce_vide: grid mismatch");
  if (pb.l != 1) throw std::invalid_argument("reduce_vide: scalar control required");

  double nz = 0.0;
  for (int i = 1; i <= N; ++i)
    for (int j = 0; j < i; ++j)
      nz = std::max({nz, pb.C(i, j).lpNorm<Eigen::Infinity>(), pb.D(i, j).lpNorm<Eigen::Infinity>()});
  if (nz > 0.0) throw std::invalid_argument("reduce_vide: requires C = D = 0");
  for (int k = 0; k <= N; ++k)
    if (std::abs(pb.R(k)(0, 0) - 1.0) > 1e-12 ||
        (Matrix(pb.Q(k)) - Matrix(pb.Q(0))).lpNorm<Eigen::Infinity>() > 1e-12)
      throw std::invalid_argument("reduce_vide: requires R = 1 and constant Q");
  const Matrix B0 = pb.B(1, 0);
  for (int i = 1; i <= N; ++i)
    for (int j = 0; j < i; ++j)
      if ((Matrix(pb.B(i, j)) - B0).lpNorm<Eigen::Infinity>() > 1e-12)
        throw std::invalid_argument("reduce_vide: requires constant B");
  const KernelField Aref = assemble_convolution_drift(pb.grid, d, Nker);
  for (int i = 1; i <= N; ++i)
    for (int j = 0; j < i; ++j)
      if ((Matrix(pb.A(i, j)) - Matrix(Aref(i, j))).lpNorm<Eigen::Infinity>() > 1e-8)
        throw std::invalid_argument("reduce_vide: drift kernel does not match the convolution assembly");

  const KernelField At = pb.A.transposed();
  const Matrix BBt = B0 * B0.transpose();
  const Matrix Q0 = pb.Q(0);

  VideReduction out;
  out.p0 = NodeField(N, d, d);
  out.p1 = KernelField(N, d, d);

  // Per-base aggregates: P23(k), suffix sums of P134(., k) and of the
  // A-transposed products, from which p0, p1 and the transport source follow.
  std::vector<std::vector<Matrix>> W(N), U(N);  // W[k][th-k-1], U[k][th-k-1], th = k+1..N
  for (int k = 0; k < N; ++k) {
    Matrix P23 = Matrix(P.P2(k));
    for (int s = k + 1; s <= N; ++s) P23 += dt * P.P3(s, k).transpose();
    Matrix AL23 = mul_23(At, P, Side::Left, k);

    std::vector<Matrix> P134(N - k), AL134(N - k);
    for (int s = k + 1; s <= N; ++s) {
      Matrix acc = Matrix(P.P1(s)) + Matrix(P.P3(s, k));
      for (int r = k + 1; r <= N; ++r) acc += dt * P.P4.get(r, s, k);
      P134[s - k - 1] = acc;
      AL134[s - k - 1] = mul_134(At, P, Side::Left, s, k);
    }
    // suffix sums over r > theta
    W[k].assign(N - k, Matrix());
    U[k].assign(N - k, Matrix());
    Matrix sufP = Matrix::Zero(d, d), sufA = Matrix::Zero(d, d);
    for (int th = N; th >= k + 1; --th) {
      W[k][th - k - 1] = P23 + sufP;
      U[k][th - k - 1] = AL23 + sufA;
      sufP += dt * P134[th - k - 1];
      sufA += dt * AL134[th - k - 1];
    }
    out.p0(k) = aggregate(P, k);
  }
  out.p0(N) = pb.G;

  auto p1_at = [&](int k, int m) {  // p1(t_k, t_m), m <= k <= N
    Matrix acc = Matrix::Zero(d, d);
    if (k == N) return acc;
    for (int th = k + 1; th <= N; ++th) acc += dt * W[k][th - k - 1] * Nker(dt * (th - m));
    return acc;
  };
  auto K_at = [&](int k, int m) {  // K(t_k, t_m, t_k)
    Matrix acc = Matrix::Zero(d, d);
    for (int th = k + 1; th <= N; ++th) acc += dt * U[k][th - k - 1] * Nker(dt * (th - m));
    return acc;
  };

  for (int k = 1; k <= N; ++k)
    for (int m = 0; m < k; ++m) out.p1(k, m) = p1_at(k, m);

  for (int k = 0; k < N; ++k) {
    const Matrix p0k = out.p0(k);
    const Matrix p1d = p1_at(k, k);
    const Matrix rhs = p0k * BBt * p0k - Q0 - p1d - p1d.transpose();
    const Matrix fd = (Matrix(out.p0(k + 1)) - p0k) / dt;
    out.residual_p0 = std::max(out.residual_p0, (fd - rhs).lpNorm<Eigen::Infinity>());
  }
  for (int k = 1; k < N; ++k) {
    const Matrix p0k = out.p0(k);
    for (int m = 0; m < k; ++m) {
      const Matrix p1km = out.p1(k, m);
      // Transport identity: the memory slot sheds -p0 * Nker at the moving
      // endpoint, is advected by the closed-loop drift, and sources from the
      // A-weighted aggregate K.
      const Matrix rhs = p0k * BBt * p1km - K_at(k, m) - p0k * Nker(dt * (k - m));
      const Matrix fd = (p1_at(k + 1, m) - p1km) / dt;
      out.residual_p1 = std::max(out.residual_p1, (fd - rhs).lpNorm<Eigen::Infinity>());
    }
  }
  return out;
}

}  // namespace vlq
