#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <functional>
#include <memory>

#include "cmcwb/delaunay.hpp"
#include "cmcwb/interp.hpp"

namespace cmcwb {

// h(s) on the closed cell [0, s_tau], node i at i * s_tau / (n - 1), even
// about the half period: h(s) = h(s_tau - s). Evenness plus periodicity force
// h'(0) = h'(s_tau) = 0, so the periodic extension is C^1.
struct SymmetricPeriodicFunction {
  double s_tau = 0.0;
  Eigen::VectorXd values;

  int nodes() const { return static_cast<int>(values.size()); }
  double step() const { return s_tau / double(nodes() - 1); }
  double s(int i) const { return step() * i; }
};

// Samples fn on n nodes; n must be odd so the half period lands on a node.
SymmetricPeriodicFunction sample_symmetric(double s_tau, int n,
                                           const std::function<double(double)>& fn);

// sup_i |h(s_i) - h(s_tau - s_i)|.
double symmetry_defect(const SymmetricPeriodicFunction& h);

// Periodic interpolant of the node table (h(0) = h(s_tau) by symmetry).
CubicSpline to_spline(const SymmetricPeriodicFunction& h);

struct PeriodicSolveReport {
  SymmetricPeriodicFunction h;
  double residual = 0.0;       // sup of the discrete equation defect
  double inverse_ratio = 0.0;  // sup|h| / sup|g|, the a priori constant
};

// Discrete L_{0,tau} h = h'' + tau^2 cosh(2 sigma_tau) h with the solver's
// stencil (second-order central, even mirror at 0 and s_tau).
SymmetricPeriodicFunction apply_periodic(const IsothermalProfile& profile,
                                         const SymmetricPeriodicFunction& h);

// Solves L_{0,tau} h = g in the symmetric periodic class, realized on the
// half period [0, s_tau/2] with Neumann ends (the two homogeneous solutions
// both violate one of the end conditions, so the reduction is injective).
// Raises InvalidParameter on grid or symmetry violations.
PeriodicSolveReport solve_periodic(const IsothermalProfile& profile,
                                   const SymmetricPeriodicFunction& g);

// Lower-level form: h'' + potential h = g on [0, length] with Neumann ends,
// nodes uniform over the closed interval. Raises SingularMatrix when the
// Neumann matrix is singular (e.g. zero potential, where constants are in
// the kernel).
PeriodicSolveReport solve_periodic(const Eigen::VectorXd& potential, double length,
                                   const Eigen::VectorXd& g);

// phi(s, t) on the tensor grid [0, s_tau] x [-t_box, t_box]; row i is the
// s node i * s_tau / (ns - 1), column j the t node -t_box + j * 2 t_box / (nt - 1).
// Even in s about the half period; gamma is the cosh decay weight.
struct StripFunction {
  double s_tau = 0.0;
  double t_box = 0.0;
  double eps = 0.0;
  double gamma = 0.0;
  Eigen::MatrixXd values;

  int ns() const { return static_cast<int>(values.rows()); }
  int nt() const { return static_cast<int>(values.cols()); }
  double hs() const { return s_tau / double(ns() - 1); }
  double ht() const { return 2.0 * t_box / double(nt() - 1); }
  double s(int i) const { return hs() * i; }
  double t(int j) const { return -t_box + ht() * j; }
};

// sup over the grid of |phi| cosh^gamma(t); the second form reads the weight
// stored on the function.
double weighted_sup(const StripFunction& phi, double gamma);
double weighted_sup(const StripFunction& phi);

// sup_{i,j} |phi(s_i, t_j) - phi(s_tau - s_i, t_j)|.
double strip_symmetry_defect(const StripFunction& phi);

// Trapezoid of phi(s_i, .) v_star' over the t grid, one value per s node.
Eigen::VectorXd kernel_inner_products(const StripFunction& phi);

// Column-wise projection onto the complement of v_star':
// (Pi g)(s, .) = g(s, .) - (<g(s, .), v'> / <v', v'>) v', inner products by
// the trapezoid rule on the grid, so the projection is idempotent and the
// projected inner products vanish to rounding.
StripFunction project_Z(const StripFunction& g);

struct StripOptions {
  int ns = 128;
  int nt = 160;
  double t_box = 12.0;
  double gamma = 1.2;    // decay weight, must lie in (0, sqrt 2)
  double alpha = 0.25;   // exponent of the reported bound constant
  double ortho_tol = 1e-8;
};

struct StripSolveReport {
  StripFunction phi;
  double residual = 0.0;         // sup defect of the augmented system
  double orthogonality = 0.0;    // max_i |<phi(s_i, .), v'>|
  double weighted_input = 0.0;   // ||g||_gamma
  double weighted_output = 0.0;  // ||phi||_gamma
  double bound_constant = 0.0;   // ||phi||_gamma / (eps^{1-alpha} ||g||_gamma)
  double multiplier_sup = 0.0;
};

// Strip operator S = eps (tau e^sigma)^{-2} d_ss + eps^{-1} (d_tt + f'(v_star))
// on [0, s_tau] x [-t_box, t_box], Neumann walls in s (the even periodic
// extension), homogeneous Dirichlet at t = +-t_box. Orthogonality to v_star'
// is enforced per s column by Lagrange multipliers, so solutions carry zero
// discrete kernel component. The factorization is built once and reused.
class StripSolver {
 public:
  // Raises InvalidParameter (grid too small, gamma outside (0, sqrt 2)),
  // SingularMatrix (factorization failure).
  StripSolver(const IsothermalProfile& profile, double eps, const StripOptions& options = {});
  ~StripSolver();
  StripSolver(StripSolver&&) noexcept;
  StripSolver& operator=(StripSolver&&) noexcept;

  double eps() const { return eps_; }
  double s_tau() const { return s_tau_; }
  const StripOptions& options() const { return options_; }

  // StripFunction on the solver grid carrying this eps and gamma.
  StripFunction sample(const std::function<double(double, double)>& fn) const;

  // Matrix-free S phi (no multiplier terms); boundary columns of the result
  // are zero. Grid of phi must match the solver's.
  StripFunction apply(const StripFunction& phi) const;

  // Solves S phi = g with <phi(s_i, .), v'> = 0 for every column. g must be
  // orthogonal within ortho_tol (project_Z first); raises NotOrthogonal
  // otherwise, IllConditioned when the factored solve loses the residual.
  StripSolveReport solve(const StripFunction& g) const;

  // Smallest eigenvalue of -S restricted to the discrete orthogonal
  // complement, by inverse power iteration on the cached factorization.
  // Positive: the restriction is coercive.
  double coercivity(int iterations = 30) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  StripOptions options_;
  double eps_ = 0.0;
  double s_tau_ = 0.0;
};

// One-shot form of the solver; grid and t_box are taken from g itself.
StripSolveReport solve_strip(const IsothermalProfile& profile, double eps, double gamma,
                             const StripFunction& g, const StripOptions& hints = {});

}  // namespace cmcwb
