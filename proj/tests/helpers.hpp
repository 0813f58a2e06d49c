#pragma once

// Shared builders for the test suite: small smooth random instances that
// satisfy the standing assumptions (R uniformly positive, Q and G positive
// semidefinite, bounded kernels).

#include "vlq/problem.hpp"
#include "vlq/rng.hpp"

namespace vlq::testing {

inline double unif(std::uint64_t seed, std::uint64_t a, std::uint64_t b, double lo, double hi) {
  return lo + (hi - lo) * rng::uniform01(rng::hash3(seed, a, b, 17));
}

inline Matrix random_matrix(std::uint64_t seed, std::uint64_t tag, int p, int q, double scale) {
  Matrix M(p, q);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < q; ++j)
      M(i, j) = scale * (2.0 * rng::uniform01(rng::hash3(seed, tag, i * 64 + j, 3)) - 1.0);
  return M;
}

inline Matrix random_psd(std::uint64_t seed, std::uint64_t tag, int p, double scale) {
  const Matrix M = random_matrix(seed, tag, p, p, scale);
  return M * M.transpose();
}

inline KernelSpec random_kernel(std::uint64_t seed, std::uint64_t tag, int p, int q, double scale) {
  const Matrix M = random_matrix(seed, tag, p, q, scale);
  switch (rng::hash3(seed, tag, 99, 5) % 3) {
    case 0: return KernelSpec::constant(M);
    case 1:
      return KernelSpec::separable(M, unif(seed, tag, 1, -0.5, 0.5), unif(seed, tag, 2, -0.5, 0.5));
    default: return KernelSpec::convolution(M, unif(seed, tag, 3, 0.0, 1.0));
  }
}

/// Random instance satisfying the standing positivity assumptions; kernels are
/// kept small so the closed loop is well behaved on coarse grids.
inline ProblemConfig random_config(std::uint64_t seed, int d, int l, int N, double T = 1.0,
                                   double kernel_scale = 0.5) {
  ProblemConfig pc;
  pc.d = d;
  pc.l = l;
  pc.T = T;
  pc.N = N;
  pc.A = random_kernel(seed, 11, d, d, kernel_scale);
  pc.B = random_kernel(seed, 12, d, l, kernel_scale);
  pc.C = random_kernel(seed, 13, d, d, kernel_scale);
  pc.D = random_kernel(seed, 14, d, l, kernel_scale);
  pc.Q.constant = random_psd(seed, 21, d, 0.7);
  pc.R.constant = random_psd(seed, 22, l, 0.5) + Matrix::Identity(l, l);
  pc.G = random_psd(seed, 23, d, 0.7);
  return pc;
}

/// Deterministic variant: no diffusion.
inline ProblemConfig random_config_deterministic(std::uint64_t seed, int d, int l, int N,
                                                 double T = 1.0) {
  ProblemConfig pc = random_config(seed, d, l, N, T);
  pc.C = KernelSpec::zero();
  pc.D = KernelSpec::zero();
  return pc;
}

inline InputCondition random_constant_input(std::uint64_t seed, const TimeGrid& g, int d,
                                            int k0 = 0) {
  Vector x1(d), x2(d);
  for (int i = 0; i < d; ++i) {
    x1(i) = 2.0 * rng::uniform01(rng::hash3(seed, 31, i, 1)) - 1.0;
    x2(i) = 2.0 * rng::uniform01(rng::hash3(seed, 32, i, 1)) - 1.0;
  }
  return InputCondition::constant(g, x1, x2, k0);
}

}  // namespace vlq::testing
