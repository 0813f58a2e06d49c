#include "vlq/feedback.hpp"

namespace vlq {

Strategy synthesize_strategy(const RiccatiSolution& P, const ProblemInstance& problem) {
  const int N = P.grid.N;
  if (!(problem.grid == P.grid)) throw std::invalid_argument("synthesize_strategy: grid mismatch");
  Strategy s = Strategy::zero(P.grid, P.d, P.l);

  double worst_range = 0.0;
  for (int k = 0; k <= N; ++k) {
    const Matrix Rh = P.Rhat(k);
    const Matrix Rp = P.RhatPinv(k);
    const Matrix proj = Matrix::Identity(P.l, P.l) - Rh * Rp;  // projector onto range complement

    const Matrix Dk = P.Dcoef(k);
    const Matrix B2k = P.B2coef(k);
    worst_range = std::max(worst_range, (proj * (Dk + B2k)).lpNorm<Eigen::Infinity>());
    s.Theta1(k) = -Rp * Dk;
    s.Theta3(k) = -Rp * B2k;
    for (int r = k + 1; r <= N; ++r) {
      const Matrix B1 = P.B1coef(r, k);
      worst_range = std::max(worst_range, (proj * B1).lpNorm<Eigen::Infinity>());
      s.Theta2(r, k) = -Rp * B1;
    }
    // v stays 0: the minimal-norm element of the kernel of Rhat.
  }
  const double scale = 1.0 + std::abs(P.P2(0).lpNorm<Eigen::Infinity>());
  if (worst_range > 1e-8 * scale)
    throw std::runtime_error("synthesize_strategy: range condition violated (non-regular solution)");
  s.Theta1.assert_finite("Theta1");
  s.Theta3.assert_finite("Theta3");
  s.Theta2.assert_finite("Theta2");
  return s;
}

double value(const RiccatiSolution& P, const InputCondition& input) {
  const int N = P.grid.N;
  const double dt = P.grid.dt;
  const int k0 = input.k0;
  if (k0 < 0 || k0 > N) throw std::out_of_range("value: start index");

  const Vector& p2 = input.phi2;
  double acc = p2.dot(P.P2(k0) * p2);
  for (int i = k0 + 1; i <= N; ++i) {
    const Vector p1 = input.phi1(i);
    acc += dt * p1.dot(P.P1(i) * p1);
    acc += dt * 2.0 * p2.dot(P.P3(i, k0) * p1);
    for (int j = k0 + 1; j <= N; ++j)
      acc += dt * dt * p1.dot(P.P4.get(i, j, k0) * Vector(input.phi1(j)));
  }
  return acc;
}

Vector outcome_control(const Strategy& s, const NodeField& X, const NodeField& forecast,
                       const Vector& sX2, int k0, int k) {
  const int N = s.grid.N;
  const double dt = s.grid.dt;
  if (k < k0 || k > N) throw std::out_of_range("outcome_control: node index");
  if (X.N() != N || forecast.N() != N) throw std::invalid_argument("outcome_control: field grid mismatch");

  Vector u = s.Theta1(k) * Vector(X(k)) + s.Theta3(k) * sX2 + Vector(s.v(k));
  for (int r = k0; r < k; ++r) u.noalias() += dt * s.Theta2(r, k) * Vector(X(r));
  for (int r = k; r <= N; ++r) u.noalias() += dt * s.Theta2(r, k) * Vector(forecast(r));
  return u;
}

}  // namespace vlq
