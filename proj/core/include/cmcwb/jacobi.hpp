#pragma once

#include <Eigen/Dense>

#include "cmcwb/delaunay.hpp"

namespace cmcwb {

// Geometric Jacobi fields of the unduloid family: normal components of the
// rigid motions (T translations, R rotations transverse to the axis), the
// family (neck size) derivative D, and the two theta-independent basis
// solutions P0plus / P0minus of the reduced operator. All of them satisfy
// (d^2/ds^2 + d^2/dtheta^2 + tau^2 cosh(2 sigma)) Phi = 0.
enum class FieldKind { T1, T2, T3, R1, R2, D, P0plus, P0minus };

// Central tau-differences of sigma and k at fixed s. The differentiated
// functions are only quasi-periodic (the cell length moves with tau), so the
// tables live on the finite window [-window, window].
struct TauDerivatives {
  double tau = 0.0;
  double delta_tau = 0.0;
  double window = 0.0;
  CubicSpline dsigma_dtau;
  CubicSpline dk_dtau;

  double dsigma_at(double s) const;
  double dk_at(double s) const;
};

TauDerivatives make_tau_derivatives(const IsothermalProfile& profile, double delta_tau = 1e-4,
                                    double window_periods = 3.5);

// derivatives may be null for kinds that do not need them; D and P0minus
// raise MissingTauDerivatives otherwise.
double eval_jacobi(const IsothermalProfile& profile, const TauDerivatives* derivatives,
                   FieldKind kind, double s, double theta);

// Sup-norm residual of the field equation over [s_begin, s_end]: second-order
// central differences in s, exact angular mode (the fields separate as
// f(s) cos/sin(theta), so the theta derivative is analytic).
double jacobi_residual(const IsothermalProfile& profile, const TauDerivatives* derivatives,
                       FieldKind kind, double s_begin, double s_end, double h,
                       int n_samples = 400);

struct PerturbationVector {
  Eigen::Vector3d aT = Eigen::Vector3d::Zero();
  Eigen::Vector2d aR = Eigen::Vector2d::Zero();
  double aD = 0.0;

  double norm() const { return std::sqrt(aT.squaredNorm() + aR.squaredNorm() + aD * aD); }
  bool is_zero() const { return norm() == 0.0; }
};

// Phi(a): the linear combination of fields matching PerturbationVector.
double linear_combination(const IsothermalProfile& profile, const TauDerivatives* derivatives,
                          const PerturbationVector& a, double s, double theta);

// The perturbed embedded surface: neck-size shift tau -> tau(eps_neck + aD)
// followed by the rigid motion exp(aR1 G1 + aR2 G2), + aT.
struct PerturbedDelaunay {
  IsothermalProfile shifted;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  PerturbationVector a;
};

// Raises PerturbationTooLarge when |a| >= eta, InvalidParameter when the
// shifted neck parameter leaves (0, 1].
PerturbedDelaunay make_perturbed(const IsothermalProfile& base, const PerturbationVector& a,
                                 double eta = 0.05);

Eigen::Vector3d perturbed_position(const PerturbedDelaunay& surface, double s, double theta);

// Writes the perturbed surface as a normal graph over the base:
//   position_perturbed = X(s, theta) + w(s, theta) nu(s, theta)
// via a two-dimensional Newton projection, and splits w into the linear
// model phi_lin = Phi(a) and the remainder psi_rem = w - phi_lin
// (quadratically small in |a|).
struct GraphDecomposition {
  double s0 = 0.0, s1 = 0.0;
  int ns = 0, ntheta = 0;
  Eigen::MatrixXd w;         // (ns+1) x ntheta, theta row j at 2 pi j / ntheta
  Eigen::MatrixXd phi_lin;
  Eigen::MatrixXd psi_rem;
  double sup_w = 0.0;
  double sup_rem = 0.0;
};

// Raises ProjectionNotUnique when the Newton projection leaves its trust
// region or stalls.
GraphDecomposition normal_graph_decompose(const IsothermalProfile& base,
                                          const TauDerivatives& derivatives,
                                          const PerturbationVector& a, double s0, double s1,
                                          int ns, int ntheta);

}  // namespace cmcwb
