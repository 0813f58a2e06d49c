#include "vlq/problem.hpp"

#include <Eigen/Eigenvalues>

namespace vlq {

namespace {

NodeField materialize_weight(const WeightSpec& w, int N, int dim, const char* who) {
  NodeField out(N, dim, dim);
  if (w.table) {
    if (w.table->N() != N || w.table->rows() != dim || w.table->cols() != dim)
      throw std::invalid_argument(std::string(who) + ": per-node table has wrong shape");
    out = *w.table;
  } else {
    Matrix M = w.constant;
    if (M.size() == 0) M = Matrix::Zero(dim, dim);
    if (M.rows() != dim || M.cols() != dim)
      throw std::invalid_argument(std::string(who) + ": matrix has wrong shape");
    out = NodeField::constant(N, M);
  }
  // Symmetrize (idempotent).
  for (int k = 0; k <= N; ++k) {
    Matrix s = 0.5 * (Matrix(out(k)) + Matrix(out(k)).transpose());
    out(k) = s;
  }
  out.assert_finite(who);
  return out;
}

double min_eig(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  return es.eigenvalues().minCoeff();
}

double max_col_norm(const KernelField& F, double dt) {
  // sqrt(dt * sum_i |F(t_i,t_j)|_F^2), maximized over the base column j:
  // a square-integrability proxy for the kernel columns.
  double best = 0.0;
  for (int j = 0; j < F.N(); ++j) {
    double acc = 0.0;
    for (int i = j + 1; i <= F.N(); ++i) acc += F(i, j).squaredNorm();
    best = std::max(best, std::sqrt(dt * acc));
  }
  return best;
}

}  // namespace

ProblemInstance build_problem(const ProblemConfig& config) {
  if (config.d <= 0 || config.l <= 0) throw std::invalid_argument("build_problem: dimensions must be positive");
  if (!(config.T > 0.0)) throw std::invalid_argument("build_problem: horizon must be positive");
  TimeGrid grid(config.T, config.N);

  ProblemInstance p;
  p.d = config.d;
  p.l = config.l;
  p.grid = grid;
  p.A = sample_kernel(config.A, grid, config.d, config.d);
  p.B = sample_kernel(config.B, grid, config.d, config.l);
  p.C = sample_kernel(config.C, grid, config.d, config.d);
  p.D = sample_kernel(config.D, grid, config.d, config.l);
  p.Q = materialize_weight(config.Q, grid.N, config.d, "build_problem: Q");
  p.R = materialize_weight(config.R, grid.N, config.l, "build_problem: R");

  Matrix G = config.G;
  if (G.size() == 0) G = Matrix::Zero(config.d, config.d);
  if (G.rows() != config.d || G.cols() != config.d)
    throw std::invalid_argument("build_problem: G has wrong shape");
  if (!G.allFinite()) throw std::invalid_argument("build_problem: G has non-finite entries");
  p.G = 0.5 * (G + G.transpose());
  return p;
}

ProblemConfig ProblemInstance::to_config() const {
  ProblemConfig c;
  c.d = d;
  c.l = l;
  c.T = grid.T;
  c.N = grid.N;
  c.A = KernelSpec::explicit_table(A);
  c.B = KernelSpec::explicit_table(B);
  c.C = KernelSpec::explicit_table(C);
  c.D = KernelSpec::explicit_table(D);
  c.Q.table = Q;
  c.R.table = R;
  c.G = G;
  return c;
}

AssumptionReport validate_assumptions(const ProblemInstance& p) {
  AssumptionReport r;
  const int N = p.grid.N;
  r.kernel_col_norm_A = max_col_norm(p.A, p.grid.dt);
  r.kernel_col_norm_B = max_col_norm(p.B, p.grid.dt);
  r.kernel_col_norm_C = max_col_norm(p.C, p.grid.dt);
  r.kernel_col_norm_D = max_col_norm(p.D, p.grid.dt);

  r.lambda = std::numeric_limits<double>::infinity();
  r.min_eig_Q = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= N; ++k) {
    Matrix Qk = p.Q(k), Rk = p.R(k);
    r.sym_residual_Q = std::max(r.sym_residual_Q, (Qk - Qk.transpose()).lpNorm<Eigen::Infinity>());
    r.sym_residual_R = std::max(r.sym_residual_R, (Rk - Rk.transpose()).lpNorm<Eigen::Infinity>());
    r.lambda = std::min(r.lambda, min_eig(Rk));
    r.min_eig_Q = std::min(r.min_eig_Q, min_eig(Qk));
  }
  r.sym_residual_G = (p.G - p.G.transpose()).lpNorm<Eigen::Infinity>();
  r.min_eig_G = min_eig(p.G);
  r.h4_satisfied = r.lambda > 0.0 && r.min_eig_Q >= -1e-12 && r.min_eig_G >= -1e-12;
  return r;
}

}  // namespace vlq
