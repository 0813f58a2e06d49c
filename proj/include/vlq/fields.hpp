#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace vlq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MatMap = Eigen::Map<Eigen::MatrixXd>;
using CMatMap = Eigen::Map<const Eigen::MatrixXd>;

/** Uniform grid t_k = k*T/N on [0,T]. */
struct TimeGrid {
  double T = 1.0;
  int N = 2;
  double dt = 0.5;

  TimeGrid() = default;
  TimeGrid(double horizon, int steps) : T(horizon), N(steps), dt(horizon / steps) {
    if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be > 0");
    if (steps < 2) throw std::invalid_argument("TimeGrid: need at least 2 steps");
  }
  double node(int k) const { return dt * k; }
  bool operator==(const TimeGrid& o) const { return T == o.T && N == o.N; }
};

namespace detail {
inline void check_finite(const double* d, std::size_t n, const char* who) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(d[i])) throw std::invalid_argument(std::string(who) + ": non-finite entry");
}
}  // namespace detail

/** One p-by-q matrix per grid node t_k, k = 0..N. */
class NodeField {
 public:
  NodeField() = default;
  NodeField(int N, int p, int q) : N_(N), p_(p), q_(q), data_((N + 1) * p * q, 0.0) {
    if (N < 0 || p <= 0 || q <= 0) throw std::invalid_argument("NodeField: bad shape");
  }
  static NodeField constant(int N, const Matrix& M) {
    NodeField f(N, int(M.rows()), int(M.cols()));
    for (int k = 0; k <= N; ++k) f(k) = M;
    return f;
  }
  int N() const { return N_; }
  int rows() const { return p_; }
  int cols() const { return q_; }
  MatMap operator()(int k) { return {at(k), p_, q_}; }
  CMatMap operator()(int k) const { return {at(k), p_, q_}; }
  void assert_finite(const char* who = "NodeField") const {
    detail::check_finite(data_.data(), data_.size(), who);
  }

 private:
  double* at(int k) {
    if (k < 0 || k > N_) throw std::out_of_range("NodeField: node index");
    return data_.data() + std::size_t(k) * p_ * q_;
  }
  const double* at(int k) const { return const_cast<NodeField*>(this)->at(k); }
  int N_ = 0, p_ = 1, q_ = 1;
  std::vector<double> data_;
};

/**
 * Strictly lower-triangular two-time table F(t_i, t_j), 0 <= j < i <= N.
 * Any access with j >= i throws: the diagonal is outside the domain.
 */
class KernelField {
 public:
  KernelField() = default;
  KernelField(int N, int p, int q, bool cell_averaged = false)
      : N_(N), p_(p), q_(q), cell_averaged_(cell_averaged),
        data_(std::size_t(N) * (N + 1) / 2 * p * q, 0.0) {
    if (N < 1 || p <= 0 || q <= 0) throw std::invalid_argument("KernelField: bad shape");
  }
  int N() const { return N_; }
  int rows() const { return p_; }
  int cols() const { return q_; }
  bool cell_averaged() const { return cell_averaged_; }
  MatMap operator()(int i, int j) { return {at(i, j), p_, q_}; }
  CMatMap operator()(int i, int j) const { return {at(i, j), p_, q_}; }
  KernelField transposed() const {
    KernelField t(N_, q_, p_, cell_averaged_);
    for (int i = 1; i <= N_; ++i)
      for (int j = 0; j < i; ++j) t(i, j) = (*this)(i, j).transpose();
    return t;
  }
  void assert_finite(const char* who = "KernelField") const {
    detail::check_finite(data_.data(), data_.size(), who);
  }

 private:
  double* at(int i, int j) {
    if (j < 0 || i > N_ || j >= i)
      throw std::out_of_range("KernelField: access outside strict lower triangle");
    return data_.data() + (std::size_t(i) * (i - 1) / 2 + j) * p_ * q_;
  }
  const double* at(int i, int j) const { return const_cast<KernelField*>(this)->at(i, j); }
  int N_ = 0, p_ = 1, q_ = 1;
  bool cell_averaged_ = false;
  std::vector<double> data_;
};

/** Full two-time table on [0,T]^2 (used for the Theta2 component of a strategy). */
class SquareField {
 public:
  SquareField() = default;
  SquareField(int N, int p, int q)
      : N_(N), p_(p), q_(q), data_(std::size_t(N + 1) * (N + 1) * p * q, 0.0) {
    if (N < 0 || p <= 0 || q <= 0) throw std::invalid_argument("SquareField: bad shape");
  }
  int N() const { return N_; }
  int rows() const { return p_; }
  int cols() const { return q_; }
  MatMap operator()(int i, int j) { return {at(i, j), p_, q_}; }
  CMatMap operator()(int i, int j) const { return {at(i, j), p_, q_}; }
  void assert_finite(const char* who = "SquareField") const {
    detail::check_finite(data_.data(), data_.size(), who);
  }

 private:
  double* at(int i, int j) {
    if (i < 0 || j < 0 || i > N_ || j > N_) throw std::out_of_range("SquareField: index");
    return data_.data() + (std::size_t(i) * (N_ + 1) + j) * p_ * q_;
  }
  const double* at(int i, int j) const { return const_cast<SquareField*>(this)->at(i, j); }
  int N_ = 0, p_ = 1, q_ = 1;
  std::vector<double> data_;
};

/**
 * Three-time table F(t_i, t_j, t_k) on the pyramid k < min(i,j), blocks d-by-d.
 * Only i >= j is stored; (i < j) reads return the transpose of the mirrored
 * entry, so F(s1,s2,t) = F(s2,s1,t)^T holds exactly by construction.
 */
class PyramidField {
 public:
  PyramidField() = default;
  PyramidField(int N, int d) : N_(N), d_(d) {
    if (N < 1 || d <= 0) throw std::invalid_argument("PyramidField: bad shape");
    offsets_.resize(N);
    std::size_t total = 0;
    for (int k = 0; k < N; ++k) {
      offsets_[k] = total;
      std::size_t m = std::size_t(N - k);
      total += m * (m + 1) / 2;
    }
    data_.assign(total * d * d, 0.0);
  }
  int N() const { return N_; }
  int dim() const { return d_; }
  /// Mutable access: requires i >= j (the stored half).
  MatMap stored(int i, int j, int k) { return {at(i, j, k), d_, d_}; }
  /// Read with transpose reconstruction for i < j.
  Matrix get(int i, int j, int k) const {
    if (i >= j) return CMatMap{const_cast<PyramidField*>(this)->at(i, j, k), d_, d_};
    return CMatMap{const_cast<PyramidField*>(this)->at(j, i, k), d_, d_}.transpose();
  }
  void assert_finite(const char* who = "PyramidField") const {
    detail::check_finite(data_.data(), data_.size(), who);
  }

 private:
  double* at(int i, int j, int k) {
    if (k < 0 || k >= j || j > i || i > N_)
      throw std::out_of_range("PyramidField: index outside pyramid");
    std::size_t a = std::size_t(i - k - 1), b = std::size_t(j - k - 1);
    return data_.data() + (offsets_[k] + a * (a + 1) / 2 + b) * d_ * d_;
  }
  int N_ = 0, d_ = 1;
  std::vector<std::size_t> offsets_;
  std::vector<double> data_;
};

}  // namespace vlq
