#pragma once

#include <Eigen/Dense>
#include <functional>

#include "cmcwb/delaunay.hpp"
#include "cmcwb/interp.hpp"

namespace cmcwb {

// Abstract surface chart. Charts are parametrized so that t_s x t_theta
// points along the inward normal (toward the rotation axis for unduloids);
// the tube coordinate z runs along that normal.
class SurfaceChart {
 public:
  virtual ~SurfaceChart() = default;
  virtual Eigen::Vector3d position(double s, double theta) const = 0;
  // Default: fourth-order finite differences of position (step 2e-3, a
  // balance of truncation against cancellation for O(1) geometry).
  virtual SurfaceFrame frame(double s, double theta) const;
  virtual double max_principal_curvature() const = 0;
};

// Principal curvatures (eigenvalues of g^{-1} A) of a frame.
Eigen::Vector2d principal_curvatures(const SurfaceFrame& frame);

// Closed-form chart of an unduloid in isothermal coordinates.
class DelaunayChart : public SurfaceChart {
 public:
  explicit DelaunayChart(IsothermalProfile profile) : profile_(std::move(profile)) {}
  Eigen::Vector3d position(double s, double theta) const override;
  SurfaceFrame frame(double s, double theta) const override;
  double max_principal_curvature() const override;
  const IsothermalProfile& profile() const { return profile_; }

 private:
  IsothermalProfile profile_;
};

// Tubular-neighborhood metric of the offset y + z nu, tangential block
// g - 2 z A + z^2 A g^{-1} A, normal block 1, off-diagonal zero. Pure
// formula, no tube-width enforcement (rows ordered s, theta, z).
Eigen::Matrix3d fermi_metric(const SurfaceChart& chart, double s, double theta, double z);

// Difference-quotient coefficient fields of the parallel-surface Laplacian:
// z a^{lm} = G^{lm}(y,z) - g^{lm}(y), z b^l = (g^{km} Gamma^l_km)(y,0)
//          - (G^{km} Gamma^l_km)(y,z) with the Christoffel symbols of the
// slice at height z, oriented so Lap_{Sigma_z} = Lap_Sigma + z(a dd + b d)
// holds exactly. H_z = H + z |A|^2 + z^2 Q and Q = trA^3 + z Qtilde. At
// z = 0 the quotients are replaced by their closed-form or difference
// limits.
struct LaplacianCoefficients {
  Eigen::Matrix3d G = Eigen::Matrix3d::Identity();
  Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  double Hz = 0.0;
  double Q = 0.0;
  double trA3 = 0.0;
  double Qtilde = 0.0;
};

// Chart of the tubular neighborhood with an optional normal shift
// z = eps t + eps^2 h(s). The half width must stay below the focal radius
// 1 / max|kappa|; zero picks min(0.3, 0.5 / max|kappa|).
class FermiChart {
 public:
  FermiChart(const SurfaceChart& chart, double eps, double half_width = 0.0,
             CubicSpline shift = {});

  const SurfaceChart& chart() const { return *chart_; }
  double eps() const { return eps_; }
  double half_width() const { return half_width_; }
  bool has_shift() const { return !shift_.empty(); }
  double shift_at(double s) const { return shift_.empty() ? 0.0 : shift_.eval(s); }
  double dshift_at(double s) const { return shift_.empty() ? 0.0 : shift_.deriv(s); }
  double d2shift_at(double s) const { return shift_.empty() ? 0.0 : shift_.deriv2(s); }
  double shift_c2_bound() const { return shift_c2_bound_; }
  double z_of(double s, double t) const { return eps_ * t + eps_ * eps_ * shift_at(s); }

  // Raise OutsideTube beyond the half width.
  Eigen::Matrix3d metric(double s, double theta, double z) const;
  LaplacianCoefficients coefficients(double s, double theta, double z) const;
  double offset_mean_curvature(double s, double theta, double z) const;

 private:
  const SurfaceChart* chart_;
  double eps_;
  double half_width_;
  CubicSpline shift_;
  double shift_c2_bound_ = 0.0;
};

// Scalar field u(s, t) with the partial derivatives the operator needs.
struct AnalyticField {
  std::function<double(double, double)> value;
  std::function<double(double, double)> ds;
  std::function<double(double, double)> dss;
  std::function<double(double, double)> dt;
  std::function<double(double, double)> dtt;
  std::function<double(double, double)> dst;
};

struct LaplacianValue {
  double exact = 0.0;     // full divergence form, coefficients at z(s, t)
  double expanded = 0.0;  // coefficients z-Taylored where the expansion truncates
};

// Laplacian in shifted Fermi coordinates for the angular mode
// u(s, t) cos(m theta). The exact branch carries the full coefficients;
// the expanded branch truncates the tangential symbols after the linear
// z-term and the normal drift after z^2 trA^3.
LaplacianValue apply_laplacian_fermi(const FermiChart& fermi, const AnalyticField& u, double s,
                                     double t, int m = 0);

// Value and partial derivatives of a field at one point.
struct FieldJet {
  double v = 0.0, ds = 0.0, dss = 0.0, dt = 0.0, dtt = 0.0, dst = 0.0;
};

// Expanded branch alone, with no tube restriction: the truncated symbols are
// polynomials in z, defined on the whole strip. The exact branch stays
// confined to |z| < half_width. symbol_cap > 0 saturates the eps t part of
// the symbol height smoothly at symbol_cap / max|kappa(s)| per column, so
// the polynomials stay inside their trust region at heights the focal
// geometry no longer covers; the eps^2 h part always enters linearly. Zero
// keeps the raw height everywhere.
double apply_laplacian_expanded(const FermiChart& fermi, const AnalyticField& u, double s,
                                double t, int m = 0, double symbol_cap = 0.0);

// Column-cached strip sweep of the expanded branch; rows follow s_nodes,
// columns t_nodes. jet(s, t) must be safe to call concurrently when
// threads > 1.
Eigen::MatrixXd apply_laplacian_expanded(const FermiChart& fermi,
                                         const std::function<FieldJet(double, double)>& jet,
                                         const Eigen::VectorXd& s_nodes,
                                         const Eigen::VectorXd& t_nodes, int m = 0,
                                         int threads = 1, double symbol_cap = 0.0);

// Grid field with ghost rows/columns on each side (two layers for the
// fourth-order interior stencils).
struct FermiGridField {
  Eigen::MatrixXd values;  // (ns + 2*ghost) x (nt + 2*ghost)
  double s0 = 0.0, s1 = 0.0;
  double t0 = 0.0, t1 = 0.0;
  int ghost = 2;
};

struct LaplacianGridResult {
  Eigen::MatrixXd exact;
  Eigen::MatrixXd expanded;
};

// Raises GhostLayerMissing when fewer than two ghost layers are present.
LaplacianGridResult apply_laplacian_fermi(const FermiChart& fermi, const FermiGridField& u,
                                          int m = 0);

// Sampled sup norms of the coefficient fields over the chart window and the
// tube, for reporting.
struct CoefficientBounds {
  double sup_a = 0.0;
  double sup_b = 0.0;
  double sup_Q = 0.0;
};

CoefficientBounds coefficient_bounds(const FermiChart& fermi, double s0, double s1, int ns,
                                     int nz);

}  // namespace cmcwb
