#pragma once

#include <optional>

#include "vlq/kernels.hpp"

namespace vlq {

/** Cost-weight specification: a constant matrix or a per-node table. */
struct WeightSpec {
  Matrix constant;                  // used when table is absent
  std::optional<NodeField> table;
};

struct ProblemConfig {
  int d = 1, l = 1;
  double T = 1.0;
  int N = 2;
  KernelSpec A, B, C, D;
  WeightSpec Q, R;
  Matrix G;
};

/**
 * A fully materialized problem: state/control dimensions, grid, kernel tables
 * for the drift (A,B) and diffusion (C,D), and cost weights Q(.), R(.), G.
 * Immutable after construction; Q, R, G are symmetrized on the way in.
 */
struct ProblemInstance {
  int d = 1, l = 1;
  TimeGrid grid;
  KernelField A, B, C, D;  // A,C: d x d;  B,D: d x l
  NodeField Q, R;          // Q: d x d;    R: l x l
  Matrix G;                // d x d

  ProblemConfig to_config() const;
};

/** Input data (tau, phi1, phi2): start node, free running term, terminal seed. */
struct InputCondition {
  int k0 = 0;
  NodeField phi1;  // d x 1 per node; only nodes >= k0 are read
  Vector phi2;

  static InputCondition constant(const TimeGrid& g, const Vector& x1, const Vector& x2, int k0 = 0) {
    InputCondition in;
    in.k0 = k0;
    in.phi1 = NodeField::constant(g.N, x1);
    in.phi2 = x2;
    return in;
  }
};

struct AssumptionReport {
  double kernel_col_norm_A = 0, kernel_col_norm_B = 0;  // max over columns of
  double kernel_col_norm_C = 0, kernel_col_norm_D = 0;  // sqrt(dt*sum_i |F(t_i,t_j)|_F^2)
  double sym_residual_Q = 0, sym_residual_R = 0, sym_residual_G = 0;
  double lambda = 0;        // min over nodes of lambda_min(R(t_k))
  double min_eig_Q = 0;     // min over nodes of lambda_min(Q(t_k))
  double min_eig_G = 0;
  bool h4_satisfied = false;  // lambda > 0, Q >= 0, G >= 0
};

ProblemInstance build_problem(const ProblemConfig& config);
AssumptionReport validate_assumptions(const ProblemInstance& problem);

}  // namespace vlq
