#pragma once

#include <cstdint>

#include "vlq/feedback.hpp"

namespace vlq {

struct SimPath {
  NodeField X;     // d x 1 on nodes k0..N
  NodeField u;     // l x 1 on nodes k0..N-1
  NodeField sX2;   // d x 1 terminal forecast per node
  std::vector<double> dW;  // increments, index = step node
  bool blew_up = false;
};

struct PathEnsemble {
  TimeGrid grid;
  int d = 1, l = 1, k0 = 0;
  std::uint64_t seed = 0;
  std::vector<SimPath> paths;
};

/// Euler–Maruyama on the forecast curve: the curve (not the state alone) is
/// stepped, the realized state is read off its own-node entry, and controls
/// come from the strategy via the past/future splice.
PathEnsemble simulate(const ProblemInstance& problem, const Strategy& strategy,
                      const InputCondition& input, int n_paths, std::uint64_t seed);

/// Same integrator with an exogenous deterministic control instead of a strategy.
PathEnsemble simulate_open_loop(const ProblemInstance& problem, const NodeField& u,
                                const InputCondition& input, int n_paths, std::uint64_t seed);

struct McCost {
  double mean = 0.0;
  double stderr_ = 0.0;
};

McCost mc_cost(const PathEnsemble& ensemble, const ProblemInstance& problem);

/**
 * Exact expected cost of a linear policy: propagate mean and second moment of
 * the lifted vector (spliced curve + terminal forecast) under the closed-loop
 * maps and accumulate the stage costs in trace form.  No sampling error.
 * `offset` adds a deterministic control term on top of the strategy.
 */
double exact_cost(const ProblemInstance& problem, const Strategy& strategy,
                  const InputCondition& input, const NodeField* offset = nullptr,
                  int dimension_cap = 2000);

double exact_cost_open_loop(const ProblemInstance& problem, const NodeField& u,
                            const InputCondition& input, int dimension_cap = 2000);

struct LyapunovSolution {
  TimeGrid grid;
  int n = 0;          // lifted block size 2d + l
  NodeField L1;       // n x n, symmetric
  SquareField L2;     // n x n; only pairs (j, k) with k < j < N are filled
  KernelField Abig;   // n x n lifted drift
  KernelField Cbig;   // n x n lifted diffusion
  NodeField Qbig;     // n x n stage weight
  NodeField Phi;      // n x 1 free term
  double cost = 0.0;
};

/**
 * Deterministic two-time Lyapunov recursion whose quadratic form in the free
 * terms reproduces the expected cost of the closed loop exactly (it is the
 * discrete dual of the moment propagation in exact_cost).
 */
LyapunovSolution lyapunov_system(const ProblemInstance& problem, const Strategy& strategy,
                                 const InputCondition& input, const NodeField* offset = nullptr);

double lyapunov_cost(const ProblemInstance& problem, const Strategy& strategy,
                     const InputCondition& input, const NodeField* offset = nullptr);

}  // namespace vlq
