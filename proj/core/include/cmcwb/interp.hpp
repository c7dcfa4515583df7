#pragma once

#include <Eigen/Dense>

namespace cmcwb {

// C2 cubic spline on a uniform knot grid. Three closures:
//   Natural   second derivative zero at both ends
//   Clamped   first derivative prescribed at both ends
//   Periodic  values, slopes and curvatures wrap; y.front() must equal y.back()
//
// Periodic splines evaluate for any real argument by wrapping into the base
// interval; the others clamp to the ends (callers needing hard domain checks
// do them at the call site).
class CubicSpline {
 public:
  enum class Boundary { Natural, Clamped, Periodic };

  CubicSpline() = default;

  static CubicSpline create(double x0, double x1, const Eigen::VectorXd& y,
                            Boundary boundary = Boundary::Natural,
                            double slope_begin = 0.0, double slope_end = 0.0);

  double operator()(double x) const { return eval(x); }
  double eval(double x) const;
  double deriv(double x) const;
  double deriv2(double x) const;

  // Exact integral of the interpolant over the full base interval.
  double integral() const;

  bool empty() const { return n_ == 0; }
  double x0() const { return x0_; }
  double x1() const { return x1_; }
  double step() const { return h_; }
  int intervals() const { return n_; }
  const Eigen::VectorXd& values() const { return y_; }

 private:
  void locate(double x, int& i, double& u) const;

  double x0_ = 0.0, x1_ = 0.0, h_ = 0.0;
  int n_ = 0;  // interval count; n_+1 knots
  bool periodic_ = false;
  Eigen::VectorXd y_;   // knot values
  Eigen::VectorXd m_;   // knot second derivatives
};

// Thomas solve of a tridiagonal system; diagonals (lower a, main b, upper c).
// a[0] and c[n-1] are ignored. Overwrites nothing; returns the solution.
Eigen::VectorXd solve_tridiagonal(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                  const Eigen::VectorXd& c, const Eigen::VectorXd& d);

// Cyclic variant (wrap-around corners a[0], c[n-1] active), Sherman-Morrison.
Eigen::VectorXd solve_cyclic_tridiagonal(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                         const Eigen::VectorXd& c, const Eigen::VectorXd& d);

}  // namespace cmcwb
