#include "cmcwb/interp.hpp"

#include <cmath>

#include "cmcwb/errors.hpp"

namespace cmcwb {

Eigen::VectorXd solve_tridiagonal(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                  const Eigen::VectorXd& c, const Eigen::VectorXd& d) {
  const int n = static_cast<int>(b.size());
  Eigen::VectorXd cp(n), dp(n), x(n);
  double beta = b[0];
  require(std::abs(beta) > 0.0, ErrorCode::SingularMatrix, "tridiagonal pivot is zero");
  cp[0] = c[0] / beta;
  dp[0] = d[0] / beta;
  for (int i = 1; i < n; ++i) {
    beta = b[i] - a[i] * cp[i - 1];
    require(std::abs(beta) > 0.0, ErrorCode::SingularMatrix, "tridiagonal pivot is zero");
    cp[i] = c[i] / beta;
    dp[i] = (d[i] - a[i] * dp[i - 1]) / beta;
  }
  x[n - 1] = dp[n - 1];
  for (int i = n - 2; i >= 0; --i) x[i] = dp[i] - cp[i] * x[i + 1];
  return x;
}

Eigen::VectorXd solve_cyclic_tridiagonal(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                         const Eigen::VectorXd& c, const Eigen::VectorXd& d) {
  const int n = static_cast<int>(b.size());
  require(n >= 3, ErrorCode::InvalidParameter, "cyclic tridiagonal needs n >= 3");
  // Rank-one correction: A = T + u v^T with u = (gamma, 0, .., alpha?) standard form.
  const double alpha = a[0];     // corner (0, n-1)
  const double beta = c[n - 1];  // corner (n-1, 0)
  const double gamma = -b[0];
  Eigen::VectorXd bb = b;
  bb[0] -= gamma;
  bb[n - 1] -= alpha * beta / gamma;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  u[0] = gamma;
  u[n - 1] = beta;
  Eigen::VectorXd x = solve_tridiagonal(a, bb, c, d);
  Eigen::VectorXd z = solve_tridiagonal(a, bb, c, u);
  const double fact = (x[0] + alpha * x[n - 1] / gamma) / (1.0 + z[0] + alpha * z[n - 1] / gamma);
  return x - fact * z;
}

CubicSpline CubicSpline::create(double x0, double x1, const Eigen::VectorXd& y,
                                Boundary boundary, double slope_begin, double slope_end) {
  require(x1 > x0, ErrorCode::InvalidParameter, "spline interval is empty");
  const int n = static_cast<int>(y.size()) - 1;
  require(n >= 2, ErrorCode::InvalidParameter, "spline needs at least 3 knots");

  CubicSpline s;
  s.x0_ = x0;
  s.x1_ = x1;
  s.n_ = n;
  s.h_ = (x1 - x0) / n;
  s.y_ = y;
  s.periodic_ = (boundary == Boundary::Periodic);
  const double h = s.h_;

  if (boundary == Boundary::Periodic) {
    require(std::abs(y[0] - y[n]) <= 1e-12 * (1.0 + std::abs(y[0])),
            ErrorCode::InvalidParameter, "periodic spline endpoint values differ");
    // Unknowns m_0..m_{n-1}; m_n = m_0.
    Eigen::VectorXd a = Eigen::VectorXd::Constant(n, h / 6.0);
    Eigen::VectorXd b = Eigen::VectorXd::Constant(n, 2.0 * h / 3.0);
    Eigen::VectorXd c = Eigen::VectorXd::Constant(n, h / 6.0);
    Eigen::VectorXd d(n);
    auto yv = [&](int i) { return y[((i % n) + n) % n]; };
    for (int i = 0; i < n; ++i)
      d[i] = (yv(i + 1) - 2.0 * yv(i) + yv(i - 1)) / h;
    Eigen::VectorXd m = solve_cyclic_tridiagonal(a, b, c, d);
    s.m_.resize(n + 1);
    s.m_.head(n) = m;
    s.m_[n] = m[0];
    return s;
  }

  Eigen::VectorXd a = Eigen::VectorXd::Constant(n + 1, h / 6.0);
  Eigen::VectorXd b = Eigen::VectorXd::Constant(n + 1, 2.0 * h / 3.0);
  Eigen::VectorXd c = Eigen::VectorXd::Constant(n + 1, h / 6.0);
  Eigen::VectorXd d(n + 1);
  for (int i = 1; i < n; ++i) d[i] = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / h;

  if (boundary == Boundary::Natural) {
    b[0] = 1.0; c[0] = 0.0; d[0] = 0.0;
    b[n] = 1.0; a[n] = 0.0; d[n] = 0.0;
  } else {  // Clamped
    b[0] = h / 3.0; c[0] = h / 6.0;
    d[0] = (y[1] - y[0]) / h - slope_begin;
    a[n] = h / 6.0; b[n] = h / 3.0;
    d[n] = slope_end - (y[n] - y[n - 1]) / h;
  }
  s.m_ = solve_tridiagonal(a, b, c, d);
  return s;
}

void CubicSpline::locate(double x, int& i, double& u) const {
  double xi = x;
  if (periodic_) {
    const double L = x1_ - x0_;
    xi = std::fmod(x - x0_, L);
    if (xi < 0.0) xi += L;
    xi += x0_;
  } else {
    if (xi < x0_) xi = x0_;
    if (xi > x1_) xi = x1_;
  }
  i = static_cast<int>((xi - x0_) / h_);
  if (i >= n_) i = n_ - 1;
  if (i < 0) i = 0;
  u = xi - (x0_ + i * h_);
}

double CubicSpline::eval(double x) const {
  int i; double u;
  locate(x, i, u);
  const double h = h_, v = h - u;
  return (m_[i] * v * v * v + m_[i + 1] * u * u * u) / (6.0 * h)
       + (y_[i] / h - m_[i] * h / 6.0) * v
       + (y_[i + 1] / h - m_[i + 1] * h / 6.0) * u;
}

double CubicSpline::deriv(double x) const {
  int i; double u;
  locate(x, i, u);
  const double h = h_, v = h - u;
  return (-m_[i] * v * v + m_[i + 1] * u * u) / (2.0 * h)
       + (y_[i + 1] - y_[i]) / h - (m_[i + 1] - m_[i]) * h / 6.0;
}

double CubicSpline::deriv2(double x) const {
  int i; double u;
  locate(x, i, u);
  const double h = h_, v = h - u;
  return (m_[i] * v + m_[i + 1] * u) / h;
}

double CubicSpline::integral() const {
  double total = 0.0;
  const double h = h_;
  for (int i = 0; i < n_; ++i)
    total += 0.5 * h * (y_[i] + y_[i + 1]) - h * h * h * (m_[i] + m_[i + 1]) / 24.0;
  return total;
}

}  // namespace cmcwb
