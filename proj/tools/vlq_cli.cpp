// Command-line front end: solve / verify / simulate / reduce / sweep over a
// JSON problem configuration.  Every run writes <out>/report.json with a list
// of named checks; the process exits nonzero iff any check fails.

#include <Eigen/Core>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vlq/closedloop.hpp"
#include "vlq/config.hpp"
#include "vlq/oracle.hpp"
#include "vlq/report.hpp"
#include "vlq/riccati.hpp"
#include "vlq/rng.hpp"

using nlohmann::json;
using namespace vlq;

namespace {

struct Check {
  std::string name;
  double value = 0.0, oracle = 0.0, deviation = 0.0, tolerance = 0.0;
  bool gated = true;  // informational entries never fail the run
  bool pass = true;
  std::string note;
};

struct Report {
  json doc = json::object();
  std::vector<Check> checks;

  void add(Check c) {
    if (c.gated) c.pass = c.deviation <= c.tolerance;
    checks.push_back(std::move(c));
  }
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  void finish(const std::string& out_dir) {
    json arr = json::array();
    for (const auto& c : checks) {
      json j{{"name", c.name},      {"value", c.value},         {"oracle", c.oracle},
             {"deviation", c.deviation}, {"tolerance", c.tolerance}, {"gated", c.gated},
             {"pass", c.pass}};
      if (!c.note.empty()) j["note"] = c.note;
      arr.push_back(std::move(j));
    }
    doc["checks"] = std::move(arr);
    doc["pass"] = all_pass();
    write_file(out_dir + "/report.json", doc.dump(2) + "\n");
  }
};

bool kernel_is_zero(const KernelField& f) {
  for (int i = 1; i <= f.N(); ++i)
    for (int j = 0; j < i; ++j)
      if (f(i, j).cwiseAbs().maxCoeff() != 0.0) return false;
  return true;
}

bool kernel_is_constant(const KernelField& f, double tol = 1e-12) {
  const Matrix ref = f(1, 0);
  for (int i = 1; i <= f.N(); ++i)
    for (int j = 0; j < i; ++j)
      if ((f(i, j) - ref).cwiseAbs().maxCoeff() > tol) return false;
  return true;
}

RiccatiOptions options_for(const RunConfig& cfg) {
  RiccatiOptions opt;
  opt.scheme = cfg.run.scheme == "dp" ? RiccatiScheme::DpConsistent : RiccatiScheme::DirectQuadrature;
  opt.dp_dimension_cap = cfg.run.cap;
  opt.pyramid_cap = std::max(opt.pyramid_cap, cfg.problem.N);
  return opt;
}

void embed_common(Report& rep, const RunConfig& cfg, const std::string& command) {
  rep.doc["command"] = command;
  rep.doc["seed"] = cfg.run.seed;
  rep.doc["scheme"] = cfg.run.scheme;
  rep.doc["dims"] = {{"d", cfg.problem.d}, {"l", cfg.problem.l}};
  rep.doc["grid"] = {{"T", cfg.problem.T}, {"N", cfg.problem.N}};
  rep.doc["tolerance"] = cfg.run.tolerance;
}

void embed_assumptions(Report& rep, const ProblemInstance& problem) {
  const AssumptionReport a = validate_assumptions(problem);
  rep.doc["assumptions"] = {{"lambda", a.lambda},
                            {"min_eig_Q", a.min_eig_Q},
                            {"min_eig_G", a.min_eig_G},
                            {"kernel_col_norm_A", a.kernel_col_norm_A},
                            {"kernel_col_norm_B", a.kernel_col_norm_B},
                            {"kernel_col_norm_C", a.kernel_col_norm_C},
                            {"kernel_col_norm_D", a.kernel_col_norm_D},
                            {"h4_satisfied", a.h4_satisfied}};
}

void write_solution(const std::string& dir, const RiccatiSolution& P, const Strategy& s) {
  write_node_csv(dir + "/P1.csv", P.P1, P.grid);
  write_node_csv(dir + "/P2.csv", P.P2, P.grid);
  write_kernel_csv(dir + "/P3.csv", P.P3, P.grid);
  write_pyramid_csv(dir + "/P4.csv", P.P4, P.grid);
  write_node_csv(dir + "/Rhat.csv", P.Rhat, P.grid);
  write_node_csv(dir + "/Theta1.csv", s.Theta1, s.grid);
  write_square_csv(dir + "/Theta2.csv", s.Theta2, s.grid);
  write_node_csv(dir + "/Theta3.csv", s.Theta3, s.grid);
  write_node_csv(dir + "/v.csv", s.v, s.grid);
}

int cmd_solve(const RunConfig& cfg, const std::string& out_dir) {
  Report rep;
  embed_common(rep, cfg, "solve");
  const ProblemInstance problem = build_problem(cfg.problem);
  embed_assumptions(rep, problem);
  const InputCondition input = cfg.input.materialize(problem.grid, problem.d);

  const auto t0 = std::chrono::steady_clock::now();
  const RiccatiSolution P = solve_riccati(problem, options_for(cfg));
  const Strategy strat = synthesize_strategy(P, problem);
  const double val = value(P, input);
  rep.doc["elapsed_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.doc["value"] = val;
  rep.doc["solution_scheme"] = P.scheme;

  const RegularityReport reg = regularity_report(P, problem, cfg.run.tolerance);
  rep.doc["regularity"] = {{"lambda_hat", reg.lambda_hat},
                           {"regular", reg.regular},
                           {"strongly_regular", reg.strongly_regular},
                           {"sup_rp_D", reg.sup_rp_D},
                           {"sup_rp_B1", reg.sup_rp_B1},
                           {"sup_rp_B2", reg.sup_rp_B2}};

  double sym = 0.0;
  for (int k = 0; k <= problem.grid.N; ++k) {
    sym = std::max(sym, (Matrix(P.P1(k)) - Matrix(P.P1(k)).transpose()).cwiseAbs().maxCoeff());
    sym = std::max(sym, (Matrix(P.P2(k)) - Matrix(P.P2(k)).transpose()).cwiseAbs().maxCoeff());
  }
  rep.add({"component_symmetry", sym, 0.0, sym, 1e-10, true, true, ""});

  if (cfg.run.scheme == "direct") {
    const RiccatiResidual res = riccati_residual(P, problem);
    rep.doc["residual"] = {{"p1", res.p1}, {"p2", res.p2}, {"p3", res.p3}, {"p4", res.p4}};
    rep.add({"backward_residual", res.max(), 0.0, res.max(), 1e-8, true, true, ""});
  }

  write_solution(out_dir + "/solution", P, strat);
  rep.finish(out_dir);
  std::cout << "value " << format_sig(val) << (rep.all_pass() ? "  [ok]" : "  [FAIL]") << "\n";
  return rep.all_pass() ? 0 : 1;
}

int cmd_verify(const RunConfig& cfg, const std::string& out_dir) {
  Report rep;
  embed_common(rep, cfg, "verify");
  const ProblemInstance problem = build_problem(cfg.problem);
  embed_assumptions(rep, problem);
  const InputCondition input = cfg.input.materialize(problem.grid, problem.d);
  const double tol = cfg.run.tolerance;

  const RiccatiSolution P = solve_riccati(problem, options_for(cfg));
  const Strategy strat = synthesize_strategy(P, problem);
  const double val = value(P, input);
  rep.doc["value"] = val;

  const DpSolution dp = solve_dp(problem, input.k0, cfg.run.cap);
  const double dpv = dp_value(dp, input);
  rep.doc["dp_value"] = dpv;
  const double scale = 1.0 + std::abs(dpv);

  // Quadrature value vs the discrete dynamic program.  Exact for the
  // dp-consistent scheme (constant free term), first-order otherwise.
  {
    Check c{"value_vs_dp", val, dpv, std::abs(val - dpv), tol * scale, true, true, ""};
    if (cfg.run.scheme != "dp") {
      c.gated = false;
      c.note = "informational: quadrature scheme differs from the dp oracle at O(dt)";
    }
    rep.add(std::move(c));
  }

  // Round-trip through the dp-consistent extraction (needs a constant free term).
  if (!cfg.input.phi1_is_table) {
    RiccatiOptions dpopt = options_for(cfg);
    dpopt.scheme = RiccatiScheme::DpConsistent;
    const RiccatiSolution Pdp = solve_riccati(problem, dpopt);
    const double vdp = value(Pdp, input);
    rep.add({"dp_roundtrip_value", vdp, dpv, std::abs(vdp - dpv), 1e-9 * scale, true, true, ""});
    const Strategy sdp = synthesize_strategy(Pdp, problem);
    const GainComparison gc = compare_gains(dp, sdp);
    rep.add({"dp_gain_match", gc.max_dev, 0.0, gc.max_dev, 1e-8, true, true, ""});

    // First-order stationarity of the synthesized policy under control
    // perturbations, measured through the exact discrete cost.
    const double j0 = exact_cost(problem, sdp, input, nullptr, cfg.run.cap);
    const double jscale = 1.0 + std::abs(j0);
    double worst = 0.0;
    const double eps = 1e-4;
    for (int trial = 0; trial < 5; ++trial) {
      NodeField w(problem.grid.N, problem.l, 1);
      for (int k = input.k0; k < problem.grid.N; ++k)
        for (int r = 0; r < problem.l; ++r)
          w(k)(r, 0) = eps * rng::standard_normal(cfg.run.seed, 900 + trial, k * 64 + r);
      NodeField wneg = w;
      for (int k = 0; k <= problem.grid.N; ++k) wneg(k) = -Matrix(w(k));
      const double jp = exact_cost(problem, sdp, input, &w, cfg.run.cap);
      const double jm = exact_cost(problem, sdp, input, &wneg, cfg.run.cap);
      worst = std::max(worst, std::abs(jp - jm) / (2.0 * eps));
    }
    rep.add({"perturbation_stationarity", worst, 0.0, worst, 1e-6 * jscale, true, true, ""});
  } else {
    rep.add({"dp_roundtrip_value", 0, 0, 0, 0, false, true,
             "skipped: tabulated free term (extraction is exact only for constant phi1)"});
  }

  // Expected closed-loop cost: moment propagation vs the Lyapunov recursion.
  {
    const double je = exact_cost(problem, strat, input, nullptr, cfg.run.cap);
    const double jl = lyapunov_cost(problem, strat, input);
    rep.doc["exact_cost"] = je;
    rep.doc["lyapunov_cost"] = jl;
    rep.add({"exact_vs_lyapunov", je, jl, std::abs(je - jl), 1e-8 * (1.0 + std::abs(je)), true,
             true, ""});
  }

  // Deterministic instances admit the dense open-loop oracle.
  if (kernel_is_zero(problem.C) && kernel_is_zero(problem.D)) {
    const QpResult qp = qp_solve(problem, input);
    rep.doc["qp_value"] = qp.value;
    rep.add({"qp_vs_dp", qp.value, dpv, std::abs(qp.value - dpv), 1e-8 * scale, true, true, ""});
  }

  if (cfg.run.n_paths > 0) {
    const double je = exact_cost(problem, strat, input, nullptr, cfg.run.cap);
    const PathEnsemble ens = simulate(problem, strat, input, cfg.run.n_paths, cfg.run.seed);
    const McCost mc = mc_cost(ens, problem);
    rep.doc["mc"] = {{"mean", mc.mean}, {"stderr", mc.stderr_}, {"n_paths", cfg.run.n_paths}};
    rep.add({"mc_vs_exact", mc.mean, je, std::abs(mc.mean - je),
             3.0 * mc.stderr_ + tol * (1.0 + std::abs(je)), true, true, ""});
  }

  if (cfg.run.scheme == "direct") {
    const RiccatiResidual res = riccati_residual(P, problem);
    rep.add({"backward_residual", res.max(), 0.0, res.max(), 1e-8, true, true, ""});
  }

  rep.finish(out_dir);
  for (const auto& c : rep.checks)
    std::cout << (c.pass ? "pass  " : "FAIL  ") << c.name << "  deviation=" << format_sig(c.deviation)
              << (c.gated ? "" : "  (informational)") << "\n";
  return rep.all_pass() ? 0 : 1;
}

int cmd_simulate(const RunConfig& cfg, const std::string& out_dir) {
  Report rep;
  embed_common(rep, cfg, "simulate");
  const ProblemInstance problem = build_problem(cfg.problem);
  embed_assumptions(rep, problem);
  const InputCondition input = cfg.input.materialize(problem.grid, problem.d);
  const int n_paths = cfg.run.n_paths > 0 ? cfg.run.n_paths : 1000;

  const RiccatiSolution P = solve_riccati(problem, options_for(cfg));
  const Strategy strat = synthesize_strategy(P, problem);
  const double je = exact_cost(problem, strat, input, nullptr, cfg.run.cap);

  const auto t0 = std::chrono::steady_clock::now();
  const PathEnsemble ens = simulate(problem, strat, input, n_paths, cfg.run.seed);
  rep.doc["elapsed_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  int blown = 0;
  for (const auto& p : ens.paths) blown += p.blew_up ? 1 : 0;
  rep.doc["n_paths"] = n_paths;
  rep.doc["blown_up_paths"] = blown;
  rep.doc["exact_cost"] = je;
  if (blown == 0) {
    const McCost mc = mc_cost(ens, problem);
    rep.doc["mc"] = {{"mean", mc.mean}, {"stderr", mc.stderr_}};
    rep.add({"mc_vs_exact", mc.mean, je, std::abs(mc.mean - je),
             3.0 * mc.stderr_ + cfg.run.tolerance * (1.0 + std::abs(je)), true, true, ""});
  } else {
    rep.add({"no_blowup", double(blown), 0.0, double(blown), 0.0, true, true, ""});
  }
  write_ensemble_csv(out_dir + "/ensemble.csv", ens);
  rep.finish(out_dir);
  std::cout << "simulated " << n_paths << " paths" << (rep.all_pass() ? "  [ok]" : "  [FAIL]")
            << "\n";
  return rep.all_pass() ? 0 : 1;
}

int cmd_reduce(const RunConfig& cfg, const std::string& out_dir) {
  Report rep;
  embed_common(rep, cfg, "reduce");
  const ProblemInstance problem = build_problem(cfg.problem);
  embed_assumptions(rep, problem);
  const int N = problem.grid.N;

  if (cfg.nker_constant) {
    // Integro-differential case: aggregate to (p0, p1) and report the
    // finite-difference residuals of the limiting Riccati equations.
    const double nc = *cfg.nker_constant;
    const RiccatiSolution P = solve_riccati(problem, options_for(cfg));
    const VideReduction v = reduce_vide(P, problem, [nc](double) { return nc; });
    rep.doc["reduction"] = "integro-differential";
    rep.doc["residual_p0"] = v.residual_p0;
    rep.doc["residual_p1"] = v.residual_p1;
    write_node_csv(out_dir + "/p0.csv", v.p0, problem.grid);
    write_kernel_csv(out_dir + "/p1.csv", v.p1, problem.grid);
    rep.add({"vide_residual_p0", v.residual_p0, 0.0, v.residual_p0, 0.0, false, true,
             "informational: first-order in dt"});
    rep.add({"vide_residual_p1", v.residual_p1, 0.0, v.residual_p1, 0.0, false, true,
             "informational: first-order in dt"});
  } else if (kernel_is_zero(problem.A) && kernel_is_zero(problem.C) && kernel_is_zero(problem.D)) {
    // Deterministic Volterra case: the collapsed recursion must reproduce the
    // general solver exactly.
    const RiccatiSolution Pv = reduce_vie(problem);
    // The collapse is a rearrangement of the direct backward recursion, so the
    // equality check always runs against that scheme.
    RiccatiOptions direct = options_for(cfg);
    direct.scheme = RiccatiScheme::DirectQuadrature;
    const RiccatiSolution P = solve_riccati(problem, direct);
    double dev = 0.0;
    for (int k = 0; k <= N; ++k) {
      dev = std::max(dev, (Matrix(Pv.P1(k)) - Matrix(P.P1(k))).cwiseAbs().maxCoeff());
      dev = std::max(dev, (Matrix(Pv.P2(k)) - Matrix(P.P2(k))).cwiseAbs().maxCoeff());
    }
    for (int i = 1; i <= N; ++i)
      for (int j = 0; j < i; ++j)
        dev = std::max(dev, (Matrix(Pv.P3(i, j)) - Matrix(P.P3(i, j))).cwiseAbs().maxCoeff());
    rep.doc["reduction"] = "deterministic-volterra";
    write_node_csv(out_dir + "/P2.csv", Pv.P2, problem.grid);
    write_kernel_csv(out_dir + "/P3.csv", Pv.P3, problem.grid);
    rep.add({"vie_matches_general", dev, 0.0, dev, 1e-12, true, true, ""});
  } else if (kernel_is_constant(problem.A) && kernel_is_constant(problem.B) &&
             kernel_is_constant(problem.C) && kernel_is_constant(problem.D)) {
    // Constant-coefficient case: aggregate vs the classical Riccati ODE.
    const NodeField ode = reduce_sde(problem);
    const RiccatiSolution P = solve_riccati(problem, options_for(cfg));
    double dev = 0.0;
    for (int k = 0; k < N; ++k)
      dev = std::max(dev, (aggregate(P, k) - Matrix(ode(k))).cwiseAbs().maxCoeff());
    rep.doc["reduction"] = "constant-coefficient";
    rep.doc["aggregate_vs_ode"] = dev;
    write_node_csv(out_dir + "/ode.csv", ode, problem.grid);
    rep.add({"aggregate_vs_ode", dev, 0.0, dev, 0.0, false, true,
             "informational: first-order in dt"});
  } else {
    throw std::invalid_argument(
        "reduce: no reduction applies (need zero A,C,D; or all-constant kernels; or "
        "reduce.nker_constant)");
  }
  rep.finish(out_dir);
  std::cout << "reduction " << rep.doc["reduction"].get<std::string>()
            << (rep.all_pass() ? "  [ok]" : "  [FAIL]") << "\n";
  return rep.all_pass() ? 0 : 1;
}

int cmd_sweep(const RunConfig& cfg, const std::string& out_dir, std::vector<int> Ns) {
  Report rep;
  embed_common(rep, cfg, "sweep");
  if (cfg.input.phi1_is_table)
    throw std::invalid_argument("sweep: needs a constant phi1 (tables are grid-bound)");
  if (Ns.empty()) Ns = {8, 16, 32, 64};

  json rows = json::array();
  std::vector<double> errs;
  for (int N : Ns) {
    ProblemConfig pc = cfg.problem;
    pc.N = N;
    const ProblemInstance problem = build_problem(pc);
    const InputCondition input = cfg.input.materialize(problem.grid, problem.d);
    RiccatiOptions opt = options_for(cfg);
    opt.pyramid_cap = std::max(opt.pyramid_cap, N);
    const RiccatiSolution P = solve_riccati(problem, opt);
    const double val = value(P, input);
    const DpSolution dp = solve_dp(problem, input.k0, cfg.run.cap);
    const double dpv = dp_value(dp, input);
    const double rel = std::abs(val - dpv) / (1.0 + std::abs(dpv));
    errs.push_back(rel);
    rows.push_back({{"N", N}, {"value", val}, {"dp_value", dpv}, {"rel_error", rel}});
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double order = (errs[i - 1] > 0 && errs[i] > 0)
                             ? std::log2(errs[i - 1] / errs[i]) /
                                   std::log2(double(Ns[i]) / double(Ns[i - 1]))
                             : std::numeric_limits<double>::infinity();
    rows[i]["observed_order"] = order;
  }
  rep.doc["sweep"] = rows;

  // Least-squares slope of log(error) against log(N).
  double order_fit = std::numeric_limits<double>::infinity();
  {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < errs.size(); ++i) {
      if (!(errs[i] > 0)) continue;
      const double x = std::log(double(Ns[i])), y = std::log(errs[i]);
      sx += x; sy += y; sxx += x * x; sxy += x * y;
      ++n;
    }
    if (n >= 2) order_fit = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  rep.doc["order_fit"] = order_fit;
  rep.add({"convergence_order", order_fit, 1.0, order_fit >= 0.9 ? 0.0 : 0.9 - order_fit, 0.0,
           true, true, "fitted slope of log-error vs log-N; requires >= 0.9"});
  rep.finish(out_dir);
  for (const auto& r : rows)
    std::cout << "N=" << r["N"].get<int>() << "  rel_error=" << format_sig(r["rel_error"].get<double>())
              << "\n";
  std::cout << "fitted order " << format_sig(order_fit) << (rep.all_pass() ? "  [ok]" : "  [FAIL]")
            << "\n";
  return rep.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear-quadratic control of stochastic Volterra systems"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::string scheme_override;
  std::vector<int> sweep_ns;
  int threads = 0;
  std::uint64_t seed_override = 0;
  bool seed_set = false;

  app.add_option("--threads", threads, "Eigen thread count (default: VLQ_THREADS or 1)");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON problem configuration")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (default: out)");
    sub->add_option("--scheme", scheme_override, "override run.scheme (direct|dp)");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { seed_override = s; seed_set = true; },
        "override run.seed");
  };

  CLI::App* solve = app.add_subcommand("solve", "solve the system and write the solution tables");
  CLI::App* verify = app.add_subcommand("verify", "run the cross-check battery against the oracles");
  CLI::App* simulate = app.add_subcommand("simulate", "closed-loop Monte Carlo ensemble");
  CLI::App* reduce = app.add_subcommand("reduce", "apply the matching special-case reduction");
  CLI::App* sweep = app.add_subcommand("sweep", "grid refinement study against the discrete oracle");
  for (CLI::App* sub : {solve, verify, simulate, reduce, sweep}) add_common(sub);
  sweep->add_option("--sweep", sweep_ns, "grid sizes, e.g. --sweep 8 16 32 64");

  CLI11_PARSE(app, argc, argv);

  if (threads <= 0)
    if (const char* env = std::getenv("VLQ_THREADS")) threads = std::atoi(env);
  Eigen::setNbThreads(threads > 0 ? threads : 1);

  try {
    RunConfig cfg = load_config_file(config_path);
    if (!scheme_override.empty()) {
      if (scheme_override != "direct" && scheme_override != "dp")
        throw std::invalid_argument("--scheme must be 'direct' or 'dp'");
      cfg.run.scheme = scheme_override;
    }
    if (seed_set) cfg.run.seed = seed_override;

    if (solve->parsed()) return cmd_solve(cfg, out_dir);
    if (verify->parsed()) return cmd_verify(cfg, out_dir);
    if (simulate->parsed()) return cmd_simulate(cfg, out_dir);
    if (reduce->parsed()) return cmd_reduce(cfg, out_dir);
    if (sweep->parsed()) return cmd_sweep(cfg, out_dir, sweep_ns);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
