#pragma once

#include "vlq/feedback.hpp"

namespace vlq {

/**
 * Exact discrete dynamic program on the lifted forecast state
 *   Z_k = (F_k(t_k), ..., F_k(t_N), sX2),  m_k = (N-k+2)*d,
 * where F_k is the forecast curve and sX2 the terminal forecast.  The lifted
 * maps are assembled from exactly the kernel tables and the step convention
 * the simulator uses, so DP, simulator and moment propagation describe one
 * and the same discrete system.
 */
struct DpSolution {
  TimeGrid grid;
  int d = 1, l = 1, k0 = 0;
  std::vector<Matrix> Pi;  // Pi[k - k0], symmetric m_k x m_k
  std::vector<Matrix> K;   // K[k - k0], l x m_k, for k = k0..N-1
  std::vector<Matrix> H;   // H[k - k0], l x l
  std::vector<Matrix> S;   // S[k - k0], l x m_k

  const Matrix& pi(int k) const { return Pi.at(k - k0); }
  const Matrix& gain(int k) const { return K.at(k - k0); }
  int m(int k) const { return (grid.N - k + 2) * d; }
};

struct GainComparison {
  double max_dev = 0.0;              // max over nodes of the sup-norm gain gap
  std::vector<double> per_node;
};

DpSolution solve_dp(const ProblemInstance& problem, int k0 = 0, int dimension_cap = 2000);

double dp_value(const DpSolution& dp, const InputCondition& input);

/// Embed the strategy as a lifted gain on Z_k and compare with the DP gains.
GainComparison compare_gains(const DpSolution& dp, const Strategy& strategy);

struct QpResult {
  NodeField u_star;  // l x 1 on nodes k0..N-1 (zero elsewhere)
  double value = 0.0;
};

/// Dense open-loop oracle for deterministic instances (C = D = 0): assemble
/// the affine control-to-trajectory map and minimize the quadratic cost by
/// the normal equations (pseudoinverse fallback for the singular case).
QpResult qp_solve(const ProblemInstance& problem, const InputCondition& input);

}  // namespace vlq
