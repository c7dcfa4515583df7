#include "cmcwb/profiles.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <cmath>
#include <vector>

#include "cmcwb/errors.hpp"
#include "cmcwb/io.hpp"

namespace cmcwb {

namespace {

double equilibrium_root(double c, double center) {
  double u = center;
  for (int i = 0; i < 60; ++i) {
    const double g = double_well(u) - c;
    if (std::abs(g) < 1e-14) return u;
    u -= g / double_well_prime(u);
  }
  fail(ErrorCode::NoRoot, "equilibrium Newton stalled");
}

struct Stencil {
  int offset[5];
  double d1[5];
  double d2[5];
  int width;
};

// Centered second-order fallback rows sit next to the Dirichlet rows where
// the profiles are exponentially flat, so they do not degrade the interior
// fourth-order accuracy.
Stencil stencil_for(int i, int n, double h) {
  Stencil st{};
  if (i >= 2 && i <= n - 3) {
    st.width = 5;
    const int off[5] = {-2, -1, 0, 1, 2};
    const double c1[5] = {1.0, -8.0, 0.0, 8.0, -1.0};
    const double c2[5] = {-1.0, 16.0, -30.0, 16.0, -1.0};
    for (int k = 0; k < 5; ++k) {
      st.offset[k] = off[k];
      st.d1[k] = c1[k] / (12.0 * h);
      st.d2[k] = c2[k] / (12.0 * h * h);
    }
  } else {
    st.width = 3;
    const int off[3] = {-1, 0, 1};
    const double c1[3] = {-1.0, 0.0, 1.0};
    const double c2[3] = {1.0, -2.0, 1.0};
    for (int k = 0; k < 3; ++k) {
      st.offset[k] = off[k];
      st.d1[k] = c1[k] / (2.0 * h);
      st.d2[k] = c2[k] / (h * h);
    }
  }
  return st;
}

Eigen::VectorXd table_derivative(const Eigen::VectorXd& y, double h) {
  const int n = static_cast<int>(y.size());
  Eigen::VectorXd d(n);
  for (int i = 2; i <= n - 3; ++i)
    d(i) = (y(i - 2) - 8.0 * y(i - 1) + 8.0 * y(i + 1) - y(i + 2)) / (12.0 * h);
  d(1) = (y(2) - y(0)) / (2.0 * h);
  d(n - 2) = (y(n - 1) - y(n - 3)) / (2.0 * h);
  d(0) = (-3.0 * y(0) + 4.0 * y(1) - y(2)) / (2.0 * h);
  d(n - 1) = (3.0 * y(n - 1) - 4.0 * y(n - 2) + y(n - 3)) / (2.0 * h);
  return d;
}

}  // namespace

EquilibriumShifts equilibria(double eps, double ell) {
  const double c = eps * ell;
  require(std::abs(c) < kDoubleWellFold, ErrorCode::NoRoot,
          "eps * ell reaches the fold of the double well");
  EquilibriumShifts out;
  out.sigma_plus = equilibrium_root(c, 1.0) - 1.0;
  out.sigma_minus = equilibrium_root(c, -1.0) + 1.0;
  return out;
}

ProfileSolution solve_profiles(double eps, double mean_curvature, const ProfileOptions& options) {
  require(eps > 0.0 && eps <= 0.2, ErrorCode::InvalidParameter, "eps outside (0, 0.2]");
  require(options.t_box >= 12.0, ErrorCode::InvalidParameter, "t_box below 12");
  require(options.n >= 1001 && options.n % 2 == 1, ErrorCode::InvalidParameter,
          "grid size must be odd and at least 1001");

  const int n = options.n;
  const int mid = (n - 1) / 2;
  const double T = options.t_box;
  const double h = 2.0 * T / (n - 1);
  const double H = mean_curvature;

  Eigen::VectorXd t(n);
  for (int i = 0; i < n; ++i) t(i) = -T + i * h;

  // Unknowns [U_0 .. U_{n-1}, ell]; rows 0 and n-1 tie the boundary values to
  // the shifted equilibria, row n is the phase condition U(0) = 0.
  Eigen::VectorXd U(n);
  for (int i = 0; i < n; ++i) U(i) = heteroclinic(t(i));
  double ell = -0.5 * H * kSurfaceTension;

  using Triplet = Eigen::Triplet<double>;
  Eigen::SparseMatrix<double> jac(n + 1, n + 1);
  Eigen::VectorXd F(n + 1);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;

  bool converged = false;
  double norm = 0.0;
  for (int iter = 0; iter < options.max_newton; ++iter) {
    const EquilibriumShifts shifts = equilibria(eps, ell);
    const double u_plus = 1.0 + shifts.sigma_plus;
    const double u_minus = -1.0 + shifts.sigma_minus;

    std::vector<Triplet> trip;
    trip.reserve(static_cast<size_t>(6 * n));
    F(0) = U(0) - u_minus;
    trip.emplace_back(0, 0, 1.0);
    trip.emplace_back(0, n, -eps / double_well_prime(u_minus));
    F(n - 1) = U(n - 1) - u_plus;
    trip.emplace_back(n - 1, n - 1, 1.0);
    trip.emplace_back(n - 1, n, -eps / double_well_prime(u_plus));
    for (int i = 1; i < n - 1; ++i) {
      const Stencil st = stencil_for(i, n, h);
      double d1 = 0.0, d2 = 0.0;
      for (int k = 0; k < st.width; ++k) {
        d1 += st.d1[k] * U(i + st.offset[k]);
        d2 += st.d2[k] * U(i + st.offset[k]);
      }
      F(i) = d2 - eps * H * d1 + double_well(U(i)) - eps * ell;
      for (int k = 0; k < st.width; ++k)
        trip.emplace_back(i, i + st.offset[k], st.d2[k] - eps * H * st.d1[k]);
      trip.emplace_back(i, i, double_well_prime(U(i)));
      trip.emplace_back(i, n, -eps);
    }
    F(n) = U(mid);
    trip.emplace_back(n, mid, 1.0);

    norm = F.cwiseAbs().maxCoeff();
    if (!std::isfinite(norm)) fail(ErrorCode::NewtonDiverged, "non-finite residual");
    if (norm <= options.newton_tol) {
      converged = true;
      break;
    }

    jac.setFromTriplets(trip.begin(), trip.end());
    lu.compute(jac);
    require(lu.info() == Eigen::Success, ErrorCode::SingularSystem,
            "profile Jacobian factorization failed");
    const Eigen::VectorXd delta = lu.solve(F);
    U -= delta.head(n);
    ell -= delta(n);
  }
  if (!converged)
    fail(ErrorCode::NewtonDiverged, "last residual " + format_g17(norm));

  const EquilibriumShifts shifts = equilibria(eps, ell);

  ProfileSolution out;
  out.eps = eps;
  out.mean_curvature = H;
  out.t_box = T;
  out.n = n;
  out.ell = ell;
  out.sigma_plus = shifts.sigma_plus;
  out.sigma_minus = shifts.sigma_minus;
  out.u_plus = 1.0 + shifts.sigma_plus;
  out.u_minus = -1.0 + shifts.sigma_minus;
  out.u_residual = norm;
  out.t = t;
  out.U = U;
  out.dU = table_derivative(U, h);

  const double slope = std::max(std::abs(out.dU(0)), std::abs(out.dU(n - 1)));
  require(slope <= options.boundary_slope_tol, ErrorCode::BoxTooSmall,
          "profile has not settled at the box boundary");

  // psi0: bordered linear system with lambda as trailing unknown and the
  // trapezoid normalization row <psi0, U' e^{-eps H t}> = 0. Robin rows with
  // the linearized decay rates avoid the artificial boundary layer a
  // Dirichlet-zero truncation would imprint on the tail.
  const double disc_minus = std::sqrt(eps * eps * H * H - 4.0 * double_well_prime(out.u_minus));
  const double disc_plus = std::sqrt(eps * eps * H * H - 4.0 * double_well_prime(out.u_plus));
  const double rate_in = 0.5 * (eps * H + disc_minus);   // decay toward -T
  const double rate_out = 0.5 * (eps * H - disc_plus);   // decay toward +T
  std::vector<Triplet> trip;
  trip.reserve(static_cast<size_t>(7 * n));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  trip.emplace_back(0, 0, -3.0 / (2.0 * h) - rate_in);
  trip.emplace_back(0, 1, 4.0 / (2.0 * h));
  trip.emplace_back(0, 2, -1.0 / (2.0 * h));
  trip.emplace_back(n - 1, n - 1, 3.0 / (2.0 * h) - rate_out);
  trip.emplace_back(n - 1, n - 2, -4.0 / (2.0 * h));
  trip.emplace_back(n - 1, n - 3, 1.0 / (2.0 * h));
  for (int i = 1; i < n - 1; ++i) {
    const Stencil st = stencil_for(i, n, h);
    for (int k = 0; k < st.width; ++k)
      trip.emplace_back(i, i + st.offset[k], st.d2[k] - eps * H * st.d1[k]);
    trip.emplace_back(i, i, double_well_prime(U(i)));
    trip.emplace_back(i, n, -eps * out.dU(i));
    rhs(i) = t(i) * out.dU(i);
  }
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 * h : h;
    trip.emplace_back(n, i, w * out.dU(i) * std::exp(-eps * H * t(i)));
  }
  jac.setFromTriplets(trip.begin(), trip.end());
  lu.compute(jac);
  require(lu.info() == Eigen::Success, ErrorCode::SingularSystem,
          "psi0 bordered system is singular");
  const Eigen::VectorXd sol = lu.solve(rhs);
  out.psi0 = sol.head(n);
  out.lambda = sol(n);
  out.dpsi0 = table_derivative(out.psi0, h);

  // Substituted discrete residual, solver-exact up to conditioning.
  double res = 0.0;
  for (int i = 1; i < n - 1; ++i) {
    const Stencil st = stencil_for(i, n, h);
    double d1 = 0.0, d2 = 0.0;
    for (int k = 0; k < st.width; ++k) {
      d1 += st.d1[k] * out.psi0(i + st.offset[k]);
      d2 += st.d2[k] * out.psi0(i + st.offset[k]);
    }
    const double value = d2 - eps * H * d1 + double_well_prime(U(i)) * out.psi0(i) -
                         (t(i) + eps * out.lambda) * out.dU(i);
    res = std::max(res, std::abs(value));
  }
  out.psi0_residual = res;

  // Solvability quotient for lambda as an independent cross-check.
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 * h : h;
    const double g = out.dU(i) * out.dU(i) * std::exp(-eps * H * t(i));
    num += w * t(i) * g;
    den += w * g;
  }
  out.lambda_quadrature = -num / (den * eps);

  out.U_spline = CubicSpline::create(-T, T, U, CubicSpline::Boundary::Clamped, out.dU(0),
                                     out.dU(n - 1));
  out.dU_spline = CubicSpline::create(-T, T, out.dU, CubicSpline::Boundary::Natural);
  out.psi0_spline = CubicSpline::create(-T, T, out.psi0, CubicSpline::Boundary::Clamped,
                                        out.dpsi0(0), out.dpsi0(n - 1));
  out.dpsi0_spline = CubicSpline::create(-T, T, out.dpsi0, CubicSpline::Boundary::Natural);
  return out;
}

}  // namespace cmcwb
