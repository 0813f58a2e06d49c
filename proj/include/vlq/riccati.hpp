#pragma once

#include <functional>

#include "vlq/feedback.hpp"
#include "vlq/oracle.hpp"

namespace vlq {

enum class RiccatiScheme { DirectQuadrature, DpConsistent };

struct RiccatiOptions {
  RiccatiScheme scheme = RiccatiScheme::DirectQuadrature;
  // Re-evaluate every inner quadrature sum from scratch in the reverse theta
  // order (O(N^4)) instead of the telescoping O(N^3) updates; used as a
  // uniqueness cross-check — both orders must agree to near machine precision.
  bool alt_inner_order = false;
  int pyramid_cap = 256;       // P4 storage is O(N^3 d^2)
  int dp_dimension_cap = 2000; // lifted dimension bound for the dp-consistent scheme
};

/**
 * Backward explicit solve of the four-component system.  The right-endpoint
 * rule makes every node-k update depend only on nodes > k, so the loop is a
 * plain recursion: P2/P3/P4 at base k first, then the derived coefficient
 * caches at k, then P1(t_k).  The dp-consistent scheme instead extracts the
 * components from the lifted dynamic program (cell-shifted: the value carried
 * by DP block j belongs to the node j+1 of the right-endpoint quadrature).
 */
RiccatiSolution solve_riccati(const ProblemInstance& problem, const RiccatiOptions& options = {});

struct RegularityReport {
  std::vector<double> rhat_min_eig;       // per node
  double lambda_hat = 0.0;                // min over nodes
  std::vector<double> range_residual_D;   // per node: ||(I - Rhat Rhat^+)(Dcoef + B2coef)||
  std::vector<double> range_residual_B1;  // per base node, max over the late index
  double sup_rp_D = 0.0, sup_rp_B1 = 0.0, sup_rp_B2 = 0.0;  // ||Rhat^+ .|| sup norms
  bool regular = false;
  bool strongly_regular = false;
};

RegularityReport regularity_report(const RiccatiSolution& P, const ProblemInstance& problem,
                                   double tol = 1e-8);

struct RiccatiResidual {
  double p1 = 0.0, p2 = 0.0, p3 = 0.0, p4 = 0.0;
  double max() const { return std::max(std::max(p1, p2), std::max(p3, p4)); }
};

/// Back-substitute the solution into its own equations (shared quadrature and
/// diagonal conventions) and report the per-equation max deviation.
RiccatiResidual riccati_residual(const RiccatiSolution& P, const ProblemInstance& problem);

/// Constant-coefficient case: classic matrix Riccati ODE solved backward with
/// a fourth-order one-step method, one value per grid node.
NodeField reduce_sde(const ProblemInstance& problem);

/// Deterministic Volterra case (A = C = D = 0): the system collapses to
/// P1 = Q plus control-only recursions for P2, P3, P4.
RiccatiSolution reduce_vie(const ProblemInstance& problem);

struct VideReduction {
  NodeField p0;     // d x d per node
  KernelField p1;   // d x d, first index t, second s < t
  double residual_p0 = 0.0;
  double residual_p1 = 0.0;
};

/// Drift kernel of the integro-differential case: A(t_i, t_j) approximating
/// the running integral of the convolution kernel, assembled cell by cell.
KernelField assemble_convolution_drift(const TimeGrid& grid, int d,
                                       const std::function<double(double)>& Nker);

/**
 * Convolution integro-differential case (A assembled from Nker, B constant,
 * C = D = 0, R = 1, Q constant): aggregate the four components into the pair
 * (p0, p1) of the classical Riccati differential equation and report
 * finite-difference residuals of its two identities.
 */
VideReduction reduce_vide(const RiccatiSolution& P, const ProblemInstance& problem,
                          const std::function<double(double)>& Nker);

}  // namespace vlq
