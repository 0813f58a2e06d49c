#pragma once

#include "vlq/algebra.hpp"
#include "vlq/problem.hpp"

namespace vlq {

/**
 * Causal feedback 4-tuple (Theta1, Theta2, Theta3, v).  Theta2 is kept on the
 * full square; the synthesized strategy has Theta2(r,t) = 0 for r <= t.
 */
struct Strategy {
  TimeGrid grid;
  int d = 1, l = 1;
  NodeField Theta1;   // l x d
  SquareField Theta2; // l x d
  NodeField Theta3;   // l x d
  NodeField v;        // l x 1

  static Strategy zero(const TimeGrid& g, int d, int l) {
    Strategy s;
    s.grid = g;
    s.d = d;
    s.l = l;
    s.Theta1 = NodeField(g.N, l, d);
    s.Theta2 = SquareField(g.N, l, d);
    s.Theta3 = NodeField(g.N, l, d);
    s.v = NodeField(g.N, l, 1);
    return s;
  }
};

/// Theta1 = -Rhat^+ Dcoef, Theta3 = -Rhat^+ B2coef,
/// Theta2(r,t) = -Rhat^+(t) B1coef(r,t) for r > t (zero otherwise), v = 0.
/// Throws std::runtime_error when the range conditions fail (non-regular input).
Strategy synthesize_strategy(const RiccatiSolution& P, const ProblemInstance& problem);

/// phi2' P2(tau) phi2 + int [phi1' P1 phi1 + 2 phi2' P3 phi1 + int int phi1' P4 phi1],
/// with the module-wide right-endpoint quadrature.
double value(const RiccatiSolution& P, const InputCondition& input);

/**
 * u(t_k) from realized history X (nodes k0..k), the current forecast curve
 * (nodes k..N) and the terminal forecast sX2:
 *   u = Theta1 X_k + dt * sum_{r=k0}^{k-1} Theta2(t_r,t_k) X(t_r)
 *                  + dt * sum_{r=k}^{N}  Theta2(t_r,t_k) forecast(t_r)
 *     + Theta3 sX2 + v(t_k).
 */
Vector outcome_control(const Strategy& s, const NodeField& X, const NodeField& forecast,
                       const Vector& sX2, int k0, int k);

}  // namespace vlq
