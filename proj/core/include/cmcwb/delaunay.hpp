#pragma once

#include <functional>

#include <Eigen/Dense>

#include "cmcwb/interp.hpp"

namespace cmcwb {

// Meridian of the unit-mean-curvature surface of revolution with family
// parameter tau in (0, 1]. In arclength a the profile radius satisfies
//
//   rho'' = (1 + rho'^2) / rho - (1 + rho'^2)^{3/2},
//   rho / sqrt(1 + rho'^2) = (rho^2 + tau^2) / 2   (first integral),
//
// with neck radius eps_neck = 1 - sqrt(1 - tau^2) and bulge radius
// 2 - eps_neck. `period` is the first return of (rho, rho') to its initial
// state, located by an event function on rho' with bisection. tau = 1
// degenerates to the cylinder rho = 1 (flagged, period set to 2 pi which is
// the tau -> 1 limit of the family).
struct MeridianSolution {
  double tau = 0.0;
  double eps_neck = 0.0;
  double period = 0.0;  // T_tau
  double grid_step = 0.0;
  bool degenerate = false;
  CubicSpline rho;  // periodic over [0, period]; argument wraps

  double rho_at(double a) const { return rho.eval(a); }
  double drho_at(double a) const { return rho.deriv(a); }
};

// Raises InvalidParameter (tau outside (0, 1], bad grid_step) and
// NonConvergence (integrator stall or period event not found).
MeridianSolution solve_meridian(double tau, double grid_step);

// Isothermal coordinates (s, theta) for the same surface: the embedding is
//
//   X(s, theta) = (w cos theta, w sin theta, k(s)),   w = tau e^{sigma(s)},
//
// where sigma solves the pendulum system
//
//   sigma'' = -(tau^2 / 2) sinh(2 sigma),  sigma(0) = log(eps_neck / tau),
//   sigma'(0) = 0,      k' = (tau^2 / 2)(1 + e^{2 sigma}),  k(0) = 0,
//
// with first integral sigma'^2 + tau^2 cosh^2 sigma = 1. The minimal period
// of sigma is period_s = P; the fundamental cell is s_tau = 2P, which is the
// parameter length fixed by k(s_tau) = 2 T_tau. sigma is even and P-periodic,
// so sigma(s) = sigma(s_tau - s).
//
// Curvatures below are with respect to the inward unit normal
// nu = (-k' cos theta, -k' sin theta, w') / w; in this convention the
// mean curvature is the SUM kappa1 + kappa2 and equals 1 identically.
struct IsothermalProfile {
  double tau = 0.0;
  double eps_neck = 0.0;
  double grid_step = 0.0;
  double period_s = 0.0;    // P, minimal sigma period
  double s_tau = 0.0;       // 2 P
  double period_arc = 0.0;  // T_tau = k(s_tau) / 2
  bool degenerate = false;
  CubicSpline sigma;     // periodic over [0, s_tau]
  CubicSpline dsigma;    // spline of the exact sigma' samples
  CubicSpline k_wobble;  // k(s) - k_slope s, periodic over [0, s_tau]
  double k_slope = 0.0;  // 2 T_tau / s_tau

  double sigma_at(double s) const { return sigma.eval(s); }
  double dsigma_at(double s) const { return dsigma.eval(s); }
  // Discretization-order (spline) second derivative, O(grid_step^2).
  double d2sigma_spline(double s) const { return sigma.deriv2(s); }
  // Pendulum right-hand side evaluated on the spline, O(grid_step^4).
  double d2sigma_exact(double s) const;

  double k_at(double s) const { return k_slope * s + k_wobble.eval(s); }
  double dk_at(double s) const { return k_slope + k_wobble.deriv(s); }
  double w_at(double s) const;  // tau e^sigma

  double kappa1_at(double s) const;  // meridian direction: (1 - e^{-2 sigma}) / 2
  double kappa2_at(double s) const;  // hoop direction:     (1 + e^{-2 sigma}) / 2
  double normA2_at(double s) const;  // kappa1^2 + kappa2^2
  double trA3_at(double s) const;    // kappa1^3 + kappa2^3

  Eigen::Vector3d position(double s, double theta) const;
  Eigen::Vector3d normal(double s, double theta) const;  // unit, toward the axis
};

IsothermalProfile build_isothermal(const MeridianSolution& meridian, double grid_step);

struct SurfaceFrame {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();
  Eigen::Matrix2d metric = Eigen::Matrix2d::Zero();              // (s, theta) order
  Eigen::Matrix2d second_fundamental = Eigen::Matrix2d::Zero();  // inward normal
  double mean_curvature = 0.0;                                   // kappa1 + kappa2
  double normA2 = 0.0;
  double trA3 = 0.0;
};

// Frame with curvatures from spline second derivatives: the mean curvature
// carries the table's O(grid_step^2) discretization error, which is what the
// convergence checks measure.
SurfaceFrame frame_at(const IsothermalProfile& profile, double s, double theta);

// Same frame after the rigid motion x -> R x + b of the embedding.
SurfaceFrame frame_at(const IsothermalProfile& profile, const Eigen::Matrix3d& rotation,
                      const Eigen::Vector3d& translation, double s, double theta);

// Point-cloud style chart probe on a rectangular parameter box.
struct ParametricChart {
  std::function<Eigen::Vector3d(double, double)> position;
  double u0 = 0.0, u1 = 1.0, v0 = 0.0, v1 = 1.0;
};

// Mean curvature (sum convention, normal X_u x X_v / |.|) from classic
// five-point second-order stencils with spacing h. Raises StencilOutOfDomain
// when (u +- h, v +- h) leaves the box.
double mean_curvature_numeric(const ParametricChart& chart, double u, double v, double h);

}  // namespace cmcwb
