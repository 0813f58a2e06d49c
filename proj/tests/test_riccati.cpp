#include <doctest.h>

#include "helpers.hpp"
#include "vlq/riccati.hpp"

using namespace vlq;
using namespace vlq::testing;

namespace {

double solution_gap(const RiccatiSolution& a, const RiccatiSolution& b) {
  const int N = a.grid.N;
  double dev = 0.0;
  for (int k = 0; k <= N; ++k) {
    dev = std::max(dev, (Matrix(a.P1(k)) - Matrix(b.P1(k))).lpNorm<Eigen::Infinity>());
    dev = std::max(dev, (Matrix(a.P2(k)) - Matrix(b.P2(k))).lpNorm<Eigen::Infinity>());
  }
  for (int i = 1; i <= N; ++i)
    for (int j = 0; j < i; ++j)
      dev = std::max(dev, (Matrix(a.P3(i, j)) - Matrix(b.P3(i, j))).lpNorm<Eigen::Infinity>());
  for (int k = 0; k < N; ++k)
    for (int j = k + 1; j <= N; ++j)
      for (int i = j; i <= N; ++i)
        dev = std::max(dev, (a.P4.get(i, j, k) - b.P4.get(i, j, k)).lpNorm<Eigen::Infinity>());
  return dev;
}

}  // namespace

TEST_CASE("memoryless uncontrolled problem: the components are the data") {
  // A = B = C = D = 0 decouples everything: P1 = Q, P2 = G, P3 = P4 = 0.
  ProblemConfig pc;
  pc.d = 2;
  pc.l = 1;
  pc.T = 1.0;
  pc.N = 6;
  pc.Q.constant = random_psd(4, 1, 2, 1.0);
  pc.R.constant = Matrix::Identity(1, 1);
  pc.G = random_psd(4, 2, 2, 1.0);
  const ProblemInstance problem = build_problem(pc);
  const RiccatiSolution P = solve_riccati(problem);
  for (int k = 0; k <= pc.N; ++k) {
    CHECK((Matrix(P.P1(k)) - Matrix(problem.Q(k))).lpNorm<Eigen::Infinity>() < 1e-14);
    CHECK((Matrix(P.P2(k)) - problem.G).lpNorm<Eigen::Infinity>() < 1e-14);
  }
  for (int i = 1; i <= pc.N; ++i)
    for (int j = 0; j < i; ++j) CHECK(Matrix(P.P3(i, j)).lpNorm<Eigen::Infinity>() < 1e-14);
  for (int k = 0; k < pc.N; ++k)
    for (int j = k + 1; j <= pc.N; ++j)
      for (int i = j; i <= pc.N; ++i)
        CHECK(P.P4.get(i, j, k).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("terminal data and symmetry on a random stochastic instance") {
  const ProblemInstance problem = build_problem(random_config(11, 2, 2, 8));
  const RiccatiSolution P = solve_riccati(problem);
  CHECK((Matrix(P.P1(8)) - Matrix(problem.Q(8))).lpNorm<Eigen::Infinity>() < 1e-14);
  CHECK((Matrix(P.P2(8)) - problem.G).lpNorm<Eigen::Infinity>() < 1e-14);
  for (int k = 0; k <= 8; ++k) {
    CHECK((Matrix(P.P1(k)) - Matrix(P.P1(k)).transpose()).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((Matrix(P.P2(k)) - Matrix(P.P2(k)).transpose()).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((Matrix(P.Rhat(k)) - Matrix(P.Rhat(k)).transpose()).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("back-substituted residuals vanish for the direct scheme") {
  for (std::uint64_t seed : {21, 22}) {
    const ProblemInstance problem = build_problem(random_config(seed, 2, 1, 10));
    const RiccatiSolution P = solve_riccati(problem);
    const RiccatiResidual res = riccati_residual(P, problem);
    CHECK(res.max() < 1e-10);
  }
}

TEST_CASE("both inner-sum evaluation orders produce the same solution") {
  const ProblemInstance problem = build_problem(random_config(33, 2, 1, 8));
  const RiccatiSolution P = solve_riccati(problem);
  RiccatiOptions alt;
  alt.alt_inner_order = true;
  const RiccatiSolution Pa = solve_riccati(problem, alt);
  CHECK(solution_gap(P, Pa) < 1e-12);
}

TEST_CASE("regularity report on a uniformly positive instance") {
  const ProblemInstance problem = build_problem(random_config(13, 1, 2, 8));
  const RiccatiSolution P = solve_riccati(problem);
  const RegularityReport reg = regularity_report(P, problem);
  CHECK(reg.regular);
  CHECK(reg.strongly_regular);
  // Rhat = R + D' <| P |> D with P generated by nonnegative data: the control
  // weight floor carries over.
  CHECK(reg.lambda_hat >= 1.0 - 1e-10);
}

TEST_CASE("constant-coefficient reduction: linear and controlled closed forms") {
  // Uncontrolled with zero drift: P'(t) = -Q, so P(t) = G + Q*(T - t).
  ProblemConfig pc;
  pc.d = 1;
  pc.l = 1;
  pc.T = 2.0;
  pc.N = 16;
  pc.Q.constant = 3.0 * Matrix::Identity(1, 1);
  pc.R.constant = Matrix::Identity(1, 1);
  pc.G = 5.0 * Matrix::Identity(1, 1);
  {
    const ProblemInstance problem = build_problem(pc);
    const NodeField P = reduce_sde(problem);
    for (int k = 0; k <= pc.N; ++k)
      CHECK(P(k)(0, 0) ==
            doctest::Approx(5.0 + 3.0 * (2.0 - problem.grid.node(k))).epsilon(1e-12));
  }
  // Controlled: B = 1, Q = 0, R = G = 1 gives P(t) = 1 / (1 + T - t).
  pc.T = 1.0;
  pc.N = 64;
  pc.B = KernelSpec::constant(Matrix::Ones(1, 1));
  pc.Q.constant = Matrix::Zero(1, 1);
  pc.G = Matrix::Identity(1, 1);
  {
    const ProblemInstance problem = build_problem(pc);
    const NodeField P = reduce_sde(problem);
    for (int k = 0; k <= pc.N; ++k) {
      const double t = problem.grid.node(k);
      CHECK(std::abs(P(k)(0, 0) - 1.0 / (2.0 - t)) < 1e-9);
    }
  }
  // Non-constant kernels are rejected.
  pc.B = KernelSpec::convolution(Matrix::Ones(1, 1), 1.0);
  CHECK_THROWS_AS(reduce_sde(build_problem(pc)), std::invalid_argument);
}

TEST_CASE("deterministic volterra reduction equals the general solver") {
  ProblemConfig pc = random_config_deterministic(44, 1, 1, 10);
  pc.A = KernelSpec::zero();
  pc.B = KernelSpec::fractional(0.8, 0.3);
  const ProblemInstance problem = build_problem(pc);
  const RiccatiSolution Pv = reduce_vie(problem);
  const RiccatiSolution P = solve_riccati(problem);
  CHECK(solution_gap(P, Pv) < 1e-12);
  CHECK(Pv.scheme == "vie-reduction");

  // The reduction refuses instances with state feedback in the dynamics.
  ProblemConfig bad = pc;
  bad.A = KernelSpec::constant(Matrix::Ones(1, 1));
  CHECK_THROWS_AS(reduce_vie(build_problem(bad)), std::invalid_argument);
}

TEST_CASE("integro-differential aggregation has small residuals on a fine grid") {
  ProblemConfig pc;
  pc.d = pc.l = 1;
  pc.T = 1.0;
  pc.N = 48;
  const TimeGrid g(pc.T, pc.N);
  const auto Nker = [](double) { return 1.0; };
  pc.A = KernelSpec::explicit_table(assemble_convolution_drift(g, 1, Nker));
  pc.B = KernelSpec::constant(Matrix::Ones(1, 1));
  pc.Q.constant = Matrix::Identity(1, 1);
  pc.R.constant = Matrix::Identity(1, 1);
  pc.G = Matrix::Zero(1, 1);
  const ProblemInstance problem = build_problem(pc);
  const RiccatiSolution P = solve_riccati(problem);
  const VideReduction v = reduce_vide(P, problem, Nker);
  CHECK(v.residual_p0 < 0.2);
  CHECK(v.residual_p1 < 0.2);
}

TEST_CASE("dp-consistent scheme reproduces the dp value exactly") {
  const ProblemInstance problem = build_problem(random_config(55, 1, 1, 12));
  const InputCondition input = random_constant_input(55, problem.grid, 1);
  RiccatiOptions opt;
  opt.scheme = RiccatiScheme::DpConsistent;
  const RiccatiSolution P = solve_riccati(problem, opt);
  const DpSolution dp = solve_dp(problem);
  CHECK(std::abs(value(P, input) - dp_value(dp, input)) < 1e-10);
}
