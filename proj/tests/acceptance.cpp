// Acceptance gate: ten end-to-end criteria, one printed pass/fail line each.
// Exits nonzero if any criterion fails.

#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "vlq/closedloop.hpp"
#include "vlq/oracle.hpp"
#include "vlq/riccati.hpp"

using namespace vlq;
using namespace vlq::testing;

namespace {

struct Criterion {
  int id;
  std::string label;
  std::function<std::string()> run;  // empty string = pass, otherwise failure detail
};

std::string failf(const char* fmt, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), fmt, a, b);
  return buf;
}

double fitted_order(const std::vector<int>& Ns, const std::vector<double>& errs) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < errs.size(); ++i) {
    if (!(errs[i] > 0)) continue;
    const double x = std::log(double(Ns[i])), y = std::log(errs[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::infinity();
  return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ProblemConfig scalar_control_config(int N) {
  // B = 1, Q = 0, R = G = 1 on [0,1]: value function 1/(1 + T - t).
  ProblemConfig pc;
  pc.d = pc.l = 1;
  pc.T = 1.0;
  pc.N = N;
  pc.B = KernelSpec::constant(Matrix::Ones(1, 1));
  pc.Q.constant = Matrix::Zero(1, 1);
  pc.R.constant = Matrix::Identity(1, 1);
  pc.G = Matrix::Identity(1, 1);
  return pc;
}

// --- criterion bodies -------------------------------------------------------

std::string c1_hand_problem() {
  const ProblemInstance problem = build_problem(scalar_control_config(2));
  const InputCondition input =
      InputCondition::constant(problem.grid, Vector::Ones(1), Vector::Ones(1));
  const QpResult qp = qp_solve(problem, input);
  const DpSolution dp = solve_dp(problem);
  const double dpv = dp_value(dp, input);
  if (std::abs(qp.value - 0.5) > 1e-12) return failf("qp value %.3e vs 0.5", qp.value);
  if (std::abs(dpv - 0.5) > 1e-12) return failf("dp value %.3e vs 0.5", dpv);
  for (int k = 0; k < 2; ++k)
    if (std::abs(qp.u_star(k)(0, 0) + 0.5) > 1e-12)
      return failf("u*(%g) deviates from -1/2 by %.3e", k, std::abs(qp.u_star(k)(0, 0) + 0.5));
  return {};
}

std::string c2_sde_limit() {
  const std::vector<int> Ns = {32, 64, 128};
  std::vector<double> errs;
  for (int N : Ns) {
    const ProblemInstance problem = build_problem(scalar_control_config(N));
    const RiccatiSolution P = solve_riccati(problem);
    errs.push_back(std::abs(aggregate(P, 0)(0, 0) - 0.5));
  }
  if (errs.back() > 0.02 * 0.5) return failf("aggregate error %.3e exceeds 2%% of 0.5", errs.back());
  const double order = fitted_order(Ns, errs);
  if (!(order >= 0.9)) return failf("observed order %.3f < 0.9", order);

  const ProblemInstance fine = build_problem(scalar_control_config(128));
  const NodeField ode = reduce_sde(fine);
  double dev = 0.0;
  for (int k = 0; k <= 128; ++k)
    dev = std::max(dev, std::abs(ode(k)(0, 0) - 1.0 / (2.0 - fine.grid.node(k))));
  if (dev > 1e-8) return failf("one-step integrator vs closed form: %.3e > 1e-8", dev);
  return {};
}

std::string c3_dp_convergence() {
  const std::vector<int> Ns = {8, 16, 32, 64};
  for (std::uint64_t seed = 301; seed < 306; ++seed) {
    std::vector<double> errs;
    for (int N : Ns) {
      const ProblemInstance problem = build_problem(random_config(seed, 1, 1, N));
      const InputCondition input = random_constant_input(seed, problem.grid, 1);
      const DpSolution dp = solve_dp(problem);
      const double dpv = dp_value(dp, input);
      const RiccatiSolution P = solve_riccati(problem);
      errs.push_back(std::abs(value(P, input) - dpv) / std::abs(dpv));

      RiccatiOptions opt;
      opt.scheme = RiccatiScheme::DpConsistent;
      const RiccatiSolution Pdp = solve_riccati(problem, opt);
      const double gap = std::abs(value(Pdp, input) - dpv);
      if (gap > 1e-10) return failf("dp-scheme round-trip gap %.3e at N=%g", gap, N);
    }
    const double order = fitted_order(Ns, errs);
    if (!(order >= 0.9)) return failf("seed %.0f: observed order %.3f < 0.9", double(seed), order);
  }
  return {};
}

std::string c4_perturbation() {
  for (std::uint64_t seed = 401; seed < 404; ++seed) {
    const ProblemInstance problem = build_problem(random_config(seed, 1, 1, 16));
    const InputCondition input = random_constant_input(seed, problem.grid, 1);
    RiccatiOptions opt;
    opt.scheme = RiccatiScheme::DpConsistent;
    const RiccatiSolution P = solve_riccati(problem, opt);
    const Strategy strat = synthesize_strategy(P, problem);
    const double j0 = exact_cost(problem, strat, input);
    const double scale = 1.0 + std::abs(j0);
    const double eps = 0.5;
    const double dt = problem.grid.dt;

    for (int trial = 0; trial < 20; ++trial) {
      NodeField w(problem.grid.N, 1, 1), wp = w, wm = w;
      double expected = 0.0;
      for (int k = 0; k < problem.grid.N; ++k) {
        const double wk = rng::standard_normal(seed, 40 + trial, k);
        w(k)(0, 0) = wk;
        wp(k)(0, 0) = eps * wk;
        wm(k)(0, 0) = -eps * wk;
        expected += dt * wk * P.Rhat(k)(0, 0) * wk;
      }
      const double jp = exact_cost(problem, strat, input, &wp);
      const double jm = exact_cost(problem, strat, input, &wm);
      const double linear = (jp - jm) / (2.0 * eps);
      const double quad = (jp + jm - 2.0 * j0) / (2.0 * eps * eps);
      if (std::abs(linear) > 1e-8 * scale)
        return failf("linear coefficient %.3e exceeds 1e-8 * %.3e", std::abs(linear), scale);
      if (std::abs(quad - expected) > 0.02 * expected)
        return failf("quadratic coefficient %.6e vs expected %.6e", quad, expected);
    }
  }
  return {};
}

std::string c5_structural_zeros() {
  // No terminal weight: the components tied to the terminal forecast vanish.
  {
    ProblemConfig pc = random_config(501, 2, 1, 8);
    pc.G = Matrix::Zero(2, 2);
    const RiccatiSolution P = solve_riccati(build_problem(pc));
    for (int k = 0; k <= 8; ++k)
      if (Matrix(P.P2(k)).lpNorm<Eigen::Infinity>() > 1e-10)
        return failf("P2 not zero with G=0: %.3e", Matrix(P.P2(k)).lpNorm<Eigen::Infinity>());
    for (int i = 1; i <= 8; ++i)
      for (int j = 0; j < i; ++j)
        if (Matrix(P.P3(i, j)).lpNorm<Eigen::Infinity>() > 1e-10)
          return failf("P3 not zero with G=0: %.3e", Matrix(P.P3(i, j)).lpNorm<Eigen::Infinity>());
  }
  // No drift control channel: no memory or terminal gains.
  {
    ProblemConfig pc = random_config(502, 2, 1, 8);
    pc.B = KernelSpec::zero();
    const ProblemInstance problem = build_problem(pc);
    const Strategy s = synthesize_strategy(solve_riccati(problem), problem);
    for (int k = 0; k <= 8; ++k) {
      if (Matrix(s.Theta3(k)).lpNorm<Eigen::Infinity>() > 1e-10)
        return failf("Theta3 not zero with B=0: %.3e", Matrix(s.Theta3(k)).lpNorm<Eigen::Infinity>());
      if (Matrix(s.v(k)).lpNorm<Eigen::Infinity>() > 1e-10)
        return failf("v not zero with B=0: %.3e", Matrix(s.v(k)).lpNorm<Eigen::Infinity>());
      for (int r = 0; r <= 8; ++r)
        if (Matrix(s.Theta2(r, k)).lpNorm<Eigen::Infinity>() > 1e-10)
          return failf("Theta2 not zero with B=0: %.3e",
                       Matrix(s.Theta2(r, k)).lpNorm<Eigen::Infinity>());
    }
  }
  // No cost at all: identically zero solution and value.
  {
    ProblemConfig pc = random_config(503, 1, 1, 8);
    pc.Q.constant = Matrix::Zero(1, 1);
    pc.G = Matrix::Zero(1, 1);
    const ProblemInstance problem = build_problem(pc);
    const RiccatiSolution P = solve_riccati(problem);
    double dev = 0.0;
    for (int k = 0; k <= 8; ++k) {
      dev = std::max(dev, Matrix(P.P1(k)).lpNorm<Eigen::Infinity>());
      dev = std::max(dev, Matrix(P.P2(k)).lpNorm<Eigen::Infinity>());
    }
    for (int i = 1; i <= 8; ++i)
      for (int j = 0; j < i; ++j)
        dev = std::max(dev, Matrix(P.P3(i, j)).lpNorm<Eigen::Infinity>());
    for (int k = 0; k < 8; ++k)
      for (int j = k + 1; j <= 8; ++j)
        for (int i = j; i <= 8; ++i)
          dev = std::max(dev, P.P4.get(i, j, k).lpNorm<Eigen::Infinity>());
    if (dev > 1e-12) return failf("nonzero component with zero cost: %.3e", dev);
    const InputCondition input = random_constant_input(503, problem.grid, 1);
    if (std::abs(value(P, input)) > 1e-12)
      return failf("nonzero value with zero cost: %.3e", std::abs(value(P, input)));
  }
  return {};
}

std::string c6_symmetry_positivity() {
  const ProblemInstance problem = build_problem(random_config(601, 2, 2, 10));
  const RiccatiSolution P = solve_riccati(problem);
  for (int k = 0; k <= 10; ++k) {
    const double s1 = (Matrix(P.P1(k)) - Matrix(P.P1(k)).transpose()).lpNorm<Eigen::Infinity>();
    const double s2 = (Matrix(P.P2(k)) - Matrix(P.P2(k)).transpose()).lpNorm<Eigen::Infinity>();
    if (s1 > 1e-10 || s2 > 1e-10) return failf("symmetry defect %.3e / %.3e", s1, s2);
  }
  for (int k = 0; k < 10; ++k)
    for (int j = k + 1; j <= 10; ++j)
      for (int i = j; i <= 10; ++i) {
        const double m =
            (P.P4.get(i, j, k) - P.P4.get(j, i, k).transpose()).lpNorm<Eigen::Infinity>();
        if (m != 0.0) return failf("pyramid transpose mirror broken by %.3e", m);
      }

  for (int trial = 0; trial < 50; ++trial) {
    const InputCondition input = random_constant_input(610 + trial, problem.grid, 2);
    const double v = value(P, input);
    if (v < -1e-10 * (1.0 + std::abs(v))) return failf("negative value %.3e", v);
  }

  const RegularityReport reg = regularity_report(P, problem);
  const AssumptionReport asum = validate_assumptions(problem);
  if (reg.lambda_hat < asum.lambda - 1e-10)
    return failf("lambda_hat %.6f below the control weight floor %.6f", reg.lambda_hat, asum.lambda);
  return {};
}

std::string c7_cost_oracles() {
  for (std::uint64_t seed = 701; seed < 706; ++seed) {
    const ProblemInstance problem = build_problem(random_config(seed, 1, 1, 8));
    const InputCondition input = random_constant_input(seed, problem.grid, 1);
    Strategy s = Strategy::zero(problem.grid, 1, 1);
    for (int k = 0; k <= 8; ++k) {
      s.Theta1(k) = random_matrix(seed, 410 + k, 1, 1, 0.3);
      s.Theta3(k) = random_matrix(seed, 510 + k, 1, 1, 0.3);
      s.v(k) = random_matrix(seed, 610 + k, 1, 1, 0.3);
      for (int r = k + 1; r <= 8; ++r) s.Theta2(r, k) = random_matrix(seed, 7100 + 10 * r + k, 1, 1, 0.3);
    }
    const double je = exact_cost(problem, s, input);
    const double jl = lyapunov_cost(problem, s, input);
    if (std::abs(je - jl) > 1e-8 * (1.0 + std::abs(je)))
      return failf("moment vs two-time recursion gap %.3e at cost %.3e", std::abs(je - jl), je);

    if (seed < 703) {
      const PathEnsemble ens = simulate(problem, s, input, 10000, seed);
      const McCost mc = mc_cost(ens, problem);
      if (std::abs(mc.mean - je) > 3.0 * mc.stderr_)
        return failf("monte carlo gap %.3e exceeds 3 x stderr %.3e", std::abs(mc.mean - je),
                     mc.stderr_);
    }
  }
  return {};
}

std::string c8_vie_case() {
  ProblemConfig pc;
  pc.d = pc.l = 1;
  pc.T = 1.0;
  pc.B = KernelSpec::fractional(1.0, 0.3);  // singular memory in the control channel
  pc.Q.constant = Matrix::Identity(1, 1);
  pc.R.constant = Matrix::Identity(1, 1);
  pc.G = Matrix::Identity(1, 1);

  {
    pc.N = 32;
    const ProblemInstance problem = build_problem(pc);
    const InputCondition input =
        InputCondition::constant(problem.grid, Vector::Ones(1), 0.5 * Vector::Ones(1));
    const QpResult qp = qp_solve(problem, input);
    const DpSolution dp = solve_dp(problem);
    const double dpv = dp_value(dp, input);
    if (std::abs(qp.value - dpv) > 1e-10 * (1.0 + std::abs(dpv)))
      return failf("qp %.12f vs dp %.12f", qp.value, dpv);
  }

  const std::vector<int> Ns = {8, 16, 32, 64};
  std::vector<double> errs;
  for (int N : Ns) {
    pc.N = N;
    const ProblemInstance problem = build_problem(pc);
    const InputCondition input =
        InputCondition::constant(problem.grid, Vector::Ones(1), 0.5 * Vector::Ones(1));
    const DpSolution dp = solve_dp(problem);
    const double dpv = dp_value(dp, input);
    const RiccatiSolution P = reduce_vie(problem);
    errs.push_back(std::abs(value(P, input) - dpv) / std::abs(dpv));
  }
  const double order = fitted_order(Ns, errs);
  if (!(order >= 0.9)) return failf("observed order %.3f < 0.9", order);
  return {};
}

std::string c9_vide_residuals() {
  const auto Nker = [](double) { return 1.0; };
  auto residuals = [&](int N) {
    ProblemConfig pc;
    pc.d = pc.l = 1;
    pc.T = 1.0;
    pc.N = N;
    pc.A = KernelSpec::explicit_table(assemble_convolution_drift(TimeGrid(1.0, N), 1, Nker));
    pc.B = KernelSpec::constant(Matrix::Ones(1, 1));
    pc.Q.constant = Matrix::Identity(1, 1);
    pc.R.constant = Matrix::Identity(1, 1);
    pc.G = Matrix::Zero(1, 1);
    const ProblemInstance problem = build_problem(pc);
    return reduce_vide(solve_riccati(problem), problem, Nker);
  };
  const VideReduction coarse = residuals(32);
  const VideReduction fine = residuals(64);
  const double r0 = coarse.residual_p0 / fine.residual_p0;
  const double r1 = coarse.residual_p1 / fine.residual_p1;
  if (!(r0 >= 1.6 && r0 <= 2.5)) return failf("p0 residual ratio %.3f outside [1.6, 2.5]", r0);
  if (!(r1 >= 1.6 && r1 <= 2.5)) return failf("p1 residual ratio %.3f outside [1.6, 2.5]", r1);
  return {};
}

std::string c10_order_invariance() {
  const ProblemInstance problem = build_problem(random_config(1001, 2, 1, 16));
  const RiccatiSolution P = solve_riccati(problem);
  RiccatiOptions alt;
  alt.alt_inner_order = true;
  const RiccatiSolution Pa = solve_riccati(problem, alt);
  double dev = 0.0;
  for (int k = 0; k <= 16; ++k) {
    dev = std::max(dev, (Matrix(P.P1(k)) - Matrix(Pa.P1(k))).lpNorm<Eigen::Infinity>());
    dev = std::max(dev, (Matrix(P.P2(k)) - Matrix(Pa.P2(k))).lpNorm<Eigen::Infinity>());
  }
  for (int i = 1; i <= 16; ++i)
    for (int j = 0; j < i; ++j)
      dev = std::max(dev, (Matrix(P.P3(i, j)) - Matrix(Pa.P3(i, j))).lpNorm<Eigen::Infinity>());
  for (int k = 0; k < 16; ++k)
    for (int j = k + 1; j <= 16; ++j)
      for (int i = j; i <= 16; ++i)
        dev = std::max(dev, (P.P4.get(i, j, k) - Pa.P4.get(i, j, k)).lpNorm<Eigen::Infinity>());
  if (dev > 1e-12) return failf("inner-sum orders disagree by %.3e", dev);
  return {};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "hand-solved two-step problem (qp, dp, optimal control)", c1_hand_problem},
      {2, "scalar control problem: aggregate limit and one-step integrator", c2_sde_limit},
      {3, "value convergence to the discrete oracle; dp-scheme round trip", c3_dp_convergence},
      {4, "first-order stationarity and exact quadratic growth of the cost", c4_perturbation},
      {5, "structural zeros (no terminal weight / no control channel / no cost)", c5_structural_zeros},
      {6, "symmetry, nonnegativity, and the control weight floor", c6_symmetry_positivity},
      {7, "cost oracles: moment propagation, two-time recursion, monte carlo", c7_cost_oracles},
      {8, "deterministic fractional-memory case against both oracles", c8_vie_case},
      {9, "integro-differential residuals halve under grid refinement", c9_vide_residuals},
      {10, "inner quadrature summation order does not change the solution", c10_order_invariance},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    std::string detail;
    try {
      detail = c.run();
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    if (detail.empty()) {
      std::printf("criterion %2d: pass  (%s)\n", c.id, c.label.c_str());
    } else {
      std::printf("criterion %2d: FAIL  (%s): %s\n", c.id, c.label.c_str(), detail.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
