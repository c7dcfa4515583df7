#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "cmcwb/interp.hpp"

namespace cmcwb {

// Double well derivative f(u) = u - u^3 (so the well is W' = -f).
inline double double_well(double u) { return u - u * u * u; }
inline double double_well_prime(double u) { return 1.0 - 3.0 * u * u; }

// Heteroclinic connection v(t) = tanh(t / sqrt(2)) with -v'' = f(v).
inline double heteroclinic(double t) { return std::tanh(t / std::sqrt(2.0)); }
inline double heteroclinic_prime(double t) {
  const double c = std::cosh(t / std::sqrt(2.0));
  return 1.0 / (2.0 * c * c) * std::sqrt(2.0);
}
inline double heteroclinic_second(double t) {
  const double v = heteroclinic(t);
  return v * v * v - v;
}

// integral of (v')^2 over the line, 2 sqrt(2) / 3.
inline constexpr double kSurfaceTension = 0.9428090415820634;

// Fold of the double well: |f| at the inner critical points.
inline constexpr double kDoubleWellFold = 0.3849001794597505;  // 2 / (3 sqrt 3)

struct EquilibriumShifts {
  double sigma_plus = 0.0;   // root of f(1 + sigma) = c nearest zero
  double sigma_minus = 0.0;  // root of f(-1 + sigma) = c nearest zero
};

// Raises NoRoot when |eps * ell| reaches the fold of f.
EquilibriumShifts equilibria(double eps, double ell);

struct ProfileOptions {
  double t_box = 14.0;
  int n = 2801;  // odd, so t = 0 is a node carrying the phase condition
  // Residual evaluation carries ~1/h^2 stencil weights, so its roundoff
  // floor sits near 1e-11; the tolerance must stay above that.
  double newton_tol = 1e-10;
  int max_newton = 50;
  double boundary_slope_tol = 1e-6;
};

// Curved-interface profile U with multiplier ell and its linear correction
// psi0 with multiplier lambda, both on [-t_box, t_box]. Evaluation clamps
// outside the box (the profiles are constant there to double precision).
struct ProfileSolution {
  double eps = 0.0;
  double mean_curvature = 0.0;
  double t_box = 0.0;
  int n = 0;

  double ell = 0.0;
  double lambda = 0.0;             // bordered-system value
  double lambda_quadrature = 0.0;  // solvability quotient, cross-check
  double sigma_plus = 0.0;
  double sigma_minus = 0.0;
  double u_plus = 0.0;
  double u_minus = 0.0;
  double c_star = kSurfaceTension;
  double u_residual = 0.0;
  double psi0_residual = 0.0;

  Eigen::VectorXd t;
  Eigen::VectorXd U;
  Eigen::VectorXd dU;
  Eigen::VectorXd psi0;
  Eigen::VectorXd dpsi0;

  CubicSpline U_spline;
  CubicSpline dU_spline;
  CubicSpline psi0_spline;
  CubicSpline dpsi0_spline;

  double U_at(double s) const { return U_spline.eval(s); }
  double dU_at(double s) const { return dU_spline.eval(s); }
  // Second derivatives through the solved ODEs, exact given the tables.
  double d2U_at(double s) const {
    return eps * mean_curvature * dU_at(s) - double_well(U_at(s)) + eps * ell;
  }
  double psi0_at(double s) const { return psi0_spline.eval(s); }
  double dpsi0_at(double s) const { return dpsi0_spline.eval(s); }
  double d2psi0_at(double s) const {
    return eps * mean_curvature * dpsi0_at(s) - double_well_prime(U_at(s)) * psi0_at(s) +
           (s + eps * lambda) * dU_at(s);
  }
};

// Newton BVP for U (Dirichlet values at the shifted equilibria, phase
// condition U(0) = 0, the multiplier as extra unknown), then the bordered
// linear solve for psi0 with the normalization <psi0, U' e^{-eps H t}> = 0.
// Raises InvalidParameter, NewtonDiverged, BoxTooSmall, SingularSystem.
ProfileSolution solve_profiles(double eps, double mean_curvature,
                               const ProfileOptions& options = {});

}  // namespace cmcwb
