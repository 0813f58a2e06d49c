#include "vlq/kernels.hpp"

#include <cmath>

namespace vlq {

std::string family_name(KernelSpec::Family f) {
  switch (f) {
    case KernelSpec::Family::Zero: return "zero";
    case KernelSpec::Family::Constant: return "constant";
    case KernelSpec::Family::Separable: return "separable";
    case KernelSpec::Family::Convolution: return "convolution";
    case KernelSpec::Family::Fractional: return "fractional";
    case KernelSpec::Family::Table: return "table";
  }
  return "?";
}

namespace {

Matrix shaped_value(const Matrix& v, int p, int q, double fallback) {
  if (v.size() == 0) return Matrix::Constant(p, q, fallback);
  if (v.rows() != p || v.cols() != q)
    throw std::invalid_argument("sample_kernel: value matrix has wrong shape");
  return v;
}

}  // namespace

KernelField sample_kernel(const KernelSpec& spec, const TimeGrid& grid, int p, int q) {
  const int N = grid.N;
  const double dt = grid.dt;
  using F = KernelSpec::Family;

  switch (spec.family) {
    case F::Zero:
      return KernelField(N, p, q);

    case F::Constant: {
      const Matrix M = shaped_value(spec.value, p, q, 1.0);
      KernelField out(N, p, q);
      for (int i = 1; i <= N; ++i)
        for (int j = 0; j < i; ++j) out(i, j) = M;
      out.assert_finite("sample_kernel(constant)");
      return out;
    }

    case F::Separable: {
      const Matrix M = shaped_value(spec.value, p, q, 1.0);
      KernelField out(N, p, q);
      for (int i = 1; i <= N; ++i)
        for (int j = 0; j < i; ++j)
          out(i, j) = M * (std::exp(spec.a * grid.node(i)) * std::exp(spec.b * grid.node(j)));
      out.assert_finite("sample_kernel(separable)");
      return out;
    }

    case F::Convolution: {
      const Matrix M = shaped_value(spec.value, p, q, 1.0);
      KernelField out(N, p, q);
      for (int i = 1; i <= N; ++i)
        for (int j = 0; j < i; ++j) out(i, j) = M * std::exp(-spec.rate * (grid.node(i) - grid.node(j)));
      out.assert_finite("sample_kernel(convolution)");
      return out;
    }

    case F::Fractional: {
      if (!(spec.H > 0.0)) throw std::invalid_argument("sample_kernel: fractional family needs H > 0");
      const Matrix M = shaped_value(spec.value, p, q, 1.0);
      KernelField out(N, p, q, /*cell_averaged=*/true);
      // Cell average of c*(t_i - s)^(H-1/2) over s in [t_j, t_{j+1}]; the power
      // antiderivative gives ((t_i-t_j)^(H+1/2) - (t_i-t_{j+1})^(H+1/2)) / ((H+1/2)*dt).
      const double e = spec.H + 0.5;
      for (int i = 1; i <= N; ++i)
        for (int j = 0; j < i; ++j) {
          const double hi = grid.node(i) - grid.node(j);
          const double lo = grid.node(i) - grid.node(j + 1);
          const double avg = spec.c * (std::pow(hi, e) - std::pow(lo, e)) / (e * dt);
          out(i, j) = M * avg;
        }
      out.assert_finite("sample_kernel(fractional)");
      return out;
    }

    case F::Table: {
      if (!spec.table) throw std::invalid_argument("sample_kernel: table family without table");
      const KernelField& t = *spec.table;
      if (t.N() != N || t.rows() != p || t.cols() != q)
        throw std::invalid_argument("sample_kernel: explicit table has wrong shape");
      t.assert_finite("sample_kernel(table)");
      return t;
    }
  }
  throw std::logic_error("sample_kernel: unknown family");
}

}  // namespace vlq
