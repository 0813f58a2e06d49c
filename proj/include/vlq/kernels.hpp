#pragma once

#include <optional>
#include <string>

#include "vlq/fields.hpp"

namespace vlq {

/**
 * Parametric two-time kernel families on the strict lower triangle t > s.
 *
 *   zero           F(t,s) = 0
 *   constant       F(t,s) = value
 *   separable      F(t,s) = value * exp(a*t) * exp(b*s)
 *   convolution    F(t,s) = value * exp(-rate*(t-s))
 *   fractional     F(t,s) = value * c*(t-s)^(H-1/2), H > 0
 *   table          explicit per-entry values
 *
 * The fractional family is materialized as exact cell averages
 * (1/dt) * integral over s in [t_j, t_{j+1}] of c*(t_i-s)^(H-1/2) ds,
 * computed from the closed-form antiderivative; the point value at
 * j = i-1 would overweight the singularity when H < 1/2.  All other
 * families are point-sampled at (t_i, t_j).
 */
struct KernelSpec {
  enum class Family { Zero, Constant, Separable, Convolution, Fractional, Table };
  Family family = Family::Zero;
  Matrix value;           // shape mask / constant value (defaults: see sample_kernel)
  double a = 0.0, b = 0.0;  // separable exponents
  double rate = 0.0;        // convolution decay
  double c = 1.0, H = 0.5;  // fractional strength / regularity
  std::optional<KernelField> table;

  static KernelSpec zero() { return {}; }
  static KernelSpec constant(Matrix M) {
    KernelSpec s; s.family = Family::Constant; s.value = std::move(M); return s;
  }
  static KernelSpec separable(Matrix M, double a, double b) {
    KernelSpec s; s.family = Family::Separable; s.value = std::move(M); s.a = a; s.b = b; return s;
  }
  static KernelSpec convolution(Matrix M, double rate) {
    KernelSpec s; s.family = Family::Convolution; s.value = std::move(M); s.rate = rate; return s;
  }
  static KernelSpec fractional(double c, double H, Matrix mask = {}) {
    KernelSpec s; s.family = Family::Fractional; s.c = c; s.H = H; s.value = std::move(mask); return s;
  }
  static KernelSpec explicit_table(KernelField f) {
    KernelSpec s; s.family = Family::Table; s.table = std::move(f); return s;
  }
};

KernelField sample_kernel(const KernelSpec& spec, const TimeGrid& grid, int p, int q);

std::string family_name(KernelSpec::Family f);

}  // namespace vlq
