#pragma once

#include "vlq/fields.hpp"

namespace vlq {

/**
 * The four solution components plus the derived coefficients that the
 * feedback synthesis consumes.  P3(s,t) lives on the strict lower triangle
 * with the first index the late time s; P4 lives on the pyramid with exact
 * transpose symmetry by storage.
 *
 * Derived fields:
 *   Rhat  = R + D' <| P |> D        (per node, with pseudoinverse RhatPinv)
 *   Dcoef = D' <| P |> C
 *   B2coef = B' <| P_{2,3}         (per node)
 *   B1coef(r,t) = B' <| P_{1,3,4}  (two-time)
 */
struct RiccatiSolution {
  TimeGrid grid;
  int d = 1, l = 1;
  NodeField P1, P2;   // d x d, symmetric
  KernelField P3;     // d x d
  PyramidField P4;    // d x d blocks
  NodeField Rhat, RhatPinv;  // l x l
  NodeField Dcoef, B2coef;   // l x d
  KernelField B1coef;        // l x d
  std::string scheme = "direct-quadrature";

  static RiccatiSolution zero(const TimeGrid& g, int d, int l) {
    RiccatiSolution s;
    s.grid = g;
    s.d = d;
    s.l = l;
    s.P1 = NodeField(g.N, d, d);
    s.P2 = NodeField(g.N, d, d);
    s.P3 = KernelField(g.N, d, d);
    s.P4 = PyramidField(g.N, d);
    s.Rhat = NodeField(g.N, l, l);
    s.RhatPinv = NodeField(g.N, l, l);
    s.Dcoef = NodeField(g.N, l, d);
    s.B2coef = NodeField(g.N, l, d);
    s.B1coef = KernelField(g.N, l, d);
    return s;
  }
};

enum class Side { Left, Right };

// Quadrature convention for all four operations: integrals from t_k to T use
// the right-endpoint rule dt * sum over nodes i = k+1 .. N, excluding the base
// node; nested integrals apply the rule per variable.

/// (M <| P_{2,3})(t_k) for side=Left, (P_{2,3} |> M)(t_k) for side=Right.
/// Throws std::domain_error at k = N: the required corner value M(T,T) lies
/// outside the strict lower triangle.
Matrix mul_23(const KernelField& M, const RiccatiSolution& P, Side side, int k);

/// (M <| P_{1,3,4})(t_i, t_k) / (P_{1,3,4} |> M)(t_i, t_k); requires k < i <= N.
Matrix mul_134(const KernelField& M, const RiccatiSolution& P, Side side, int i, int k);

/// Five-term product (M <| P |> N)(t_k); throws std::domain_error at k = N.
Matrix sandwich(const KernelField& M, const RiccatiSolution& P, const KernelField& N, int k);

/// P2 + int (P1 + P3 + P3' + int P4): the aggregate that constant operands
/// collapse the sandwich onto.
Matrix aggregate(const RiccatiSolution& P, int k);

Matrix pinv(const Matrix& M, double rel_tol = 1e-10);

}  // namespace vlq
