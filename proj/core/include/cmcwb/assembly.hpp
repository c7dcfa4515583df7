#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <vector>

#include "cmcwb/delaunay.hpp"
#include "cmcwb/fermi.hpp"
#include "cmcwb/interp.hpp"
#include "cmcwb/jacobi.hpp"
#include "cmcwb/profiles.hpp"
#include "cmcwb/solvers.hpp"

namespace cmcwb {

// Quintic smoothstep: 0 for x <= lo, 1 for x >= hi, C2 across both joins.
double smoothstep_quintic(double lo, double hi, double x);

// One end of a multi-ended configuration. The chart coordinate s runs from 0
// at the attachment circle outward; orientation maps it to the base parameter
// s_attach + orientation * s. xi blends base into perturbed graph on
// [s0, s0+1]; zeta gates the end corrections on [s0+2, s0+3].
struct EndConfiguration {
  double tau = 0.6;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();  // unit; positive sense
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  PerturbationVector pert;
  double s0 = 4.0;
  double s_attach = 0.0;
  double orientation = 1.0;  // +1 or -1
  CubicSpline decay;         // optional graph v(s) over the end; empty = 0

  double xi(double s) const { return smoothstep_quintic(s0, s0 + 1.0, s); }
  double zeta(double s) const { return smoothstep_quintic(s0 + 2.0, s0 + 3.0, s); }
};

// Force balance sum tau_j^2 c_j of the configuration; zero for closable ends.
Eigen::Vector3d check_balancing(const std::vector<EndConfiguration>& ends);

// Third end closing the balance of two given ends. Raises NoRoot when the
// residual direction degenerates or the necksize leaves (0, 1].
struct BalancedEnd {
  double tau = 0.0;
  Eigen::Vector3d axis = Eigen::Vector3d::Zero();
};
BalancedEnd balance_third_end(double tau1, const Eigen::Vector3d& c1, double tau2,
                              const Eigen::Vector3d& c2);

struct TriangleMesh {
  Eigen::MatrixX3d vertices;
  Eigen::MatrixX3i faces;
};

// Structured mesh of the rotational core [s_begin, s_end] x S^1, closed in
// theta.
TriangleMesh delaunay_core_mesh(const IsothermalProfile& profile, double s_begin, double s_end,
                                int ns, int ntheta);

// Mesh of any chart window; closed in theta.
TriangleMesh chart_mesh(const SurfaceChart& chart, double s_begin, double s_end, int ns,
                        int ntheta);

// Wavefront OBJ, vertices at full precision.
void write_obj(std::ostream& out, const TriangleMesh& mesh);

// End chart interpolating between the base surface and the perturbed graph:
//   Y(s,th) = X(sb,th) + v(s) N(sb,th),   sb = s_attach + orientation * s
//   Z(s,th) = X_d(sb,th) + v(s) N_d(sb,th)
//   position = Y + xi(s) (Z - Y), returned exactly as Y (Z) where xi = 0 (1).
// The decay table, when present, must cover [0, s_reach].
class BlendedEndChart final : public SurfaceChart {
 public:
  BlendedEndChart(const IsothermalProfile& base, const EndConfiguration& end, double s_reach,
                  double eta = 0.05);
  // Reuses an already built perturbation of the same base.
  BlendedEndChart(const IsothermalProfile& base, const EndConfiguration& end,
                  PerturbedDelaunay perturbed, double s_reach);

  Eigen::Vector3d position(double s, double theta) const override;
  double max_principal_curvature() const override { return max_kappa_; }

  Eigen::Vector3d base_position(double s, double theta) const;
  Eigen::Vector3d graph_position(double s, double theta) const;
  const EndConfiguration& end() const { return end_; }
  const PerturbedDelaunay& perturbed() const { return perturbed_; }
  double s_reach() const { return s_reach_; }

 private:
  IsothermalProfile base_;
  EndConfiguration end_;
  PerturbedDelaunay perturbed_;
  double s_reach_;
  double max_kappa_ = 0.0;
};

struct EndCurvatureReport {
  double annulus = 0.0;  // sup |H - 1| over the blend annulus [s0, s0+1]
  double outside = 0.0;  // sup |H - 1| off the annulus, within the survey reach
};

struct GluedSurfaceOptions {
  double eta = 0.05;           // trust radius forwarded to the perturbation
  double parallel_tol = 1e-9;  // margin on pairwise axis dot products
  double s_reach = 10.0;
  int survey_ns = 201;
  int survey_ntheta = 6;
};

struct GluedSurface {
  IsothermalProfile base;
  TriangleMesh core;
  std::vector<EndConfiguration> ends;
  std::vector<BlendedEndChart> charts;
  std::vector<EndCurvatureReport> curvature;
};

// Raises ParallelEnds when two axes coincide in positive sense within
// parallel_tol, PerturbationTooLarge through the underlying perturbation.
GluedSurface build_glued_surface(const IsothermalProfile& base,
                                 std::vector<EndConfiguration> ends, TriangleMesh core,
                                 const GluedSurfaceOptions& options = {});

// Odd-in-d part of the blended mean curvature against the linear Jacobi
// response J[xi Phi_d], sampled on (s0, s0 + window]. Even orders in d cancel
// in the difference; what remains is the model defect of the gluing.
struct CurvatureDeviation {
  double sup_odd = 0.0;     // sup |[H(d) - H(-d)]/2 - J[xi Phi_d]|
  double sup_raw = 0.0;     // sup |H(d) - 1|
  double sup_linear = 0.0;  // sup |J[xi Phi_d]|
};
CurvatureDeviation curvature_deviation(const IsothermalProfile& base,
                                       const EndConfiguration& end, double window = 4.0,
                                       int ns = 161, int ntheta = 5, double eta = 0.05);

// C2 interpolant of a strip sample: periodic in s, natural in t. Evaluation
// clamps t to the box.
class StripInterpolant {
 public:
  StripInterpolant() = default;
  explicit StripInterpolant(const StripFunction& phi);

  bool empty() const { return rows_.empty(); }
  double s_tau() const { return s_tau_; }
  double t_box() const { return t_box_; }
  FieldJet jet(double s, double t) const;

 private:
  double s_tau_ = 0.0, t_box_ = 0.0;
  std::vector<CubicSpline> rows_;  // per t node: s -> phi(s, t_j), periodic
};

// Approximate solution u0 = U(t) + eps^2 |A|^2(s) psi0(t) plus optional end
// corrections u = u0 + zeta phi, on the shifted tube z = eps t + eps^2 h(s).
// Surface data enters through the jets below: closed forms on the exact end
// model, frame-sampled splines on a glued chart. chart is non-owning and may
// be null, in which case the model chart is meant.
struct ApproximateSolution {
  double eps = 0.0;
  ProfileSolution profile;
  IsothermalProfile model;
  const SurfaceChart* chart = nullptr;
  double s_begin = 0.0, s_end = 0.0;

  std::function<double(double)> A2, dA2, d2A2;  // |A|^2 along the window
  std::function<double(double)> trA3, meanH;
  std::function<double(double)> w2;  // metric coefficient g_ss = g_theta_theta

  CubicSpline h0;                   // decaying shift component (reserved)
  SymmetricPeriodicFunction h_end;  // periodic shift from the end correction
  CubicSpline h_end_spline;         // cached interpolant of h_end
  StripFunction phi_end;
  StripInterpolant phi_jet;
  bool gated = false;  // corrections enter through zeta when set
  double s0_gate = 0.0;

  double zeta(double s) const;
  double shift(double s) const;
  double u0(double s, double t) const;
  double value(double s, double t) const;
  // Root of value(s, .) near t = 0 by bisection on [-1, 1].
  double nodal_t(double s) const;
};

// Uncorrected approximation on the exact end model; jets in closed form.
ApproximateSolution build_u0(const IsothermalProfile& model, double eps,
                             const ProfileSolution& profile);

// Uncorrected approximation on a chart window; surface jets sampled from
// frames at `samples` nodes across [s_begin - margin, s_end + margin].
ApproximateSolution build_u0(const SurfaceChart& chart, const IsothermalProfile& model,
                             double eps, const ProfileSolution& profile, double s_begin,
                             double s_end, int samples = 513);

struct SweepTrace {
  double increment_h = 0.0;    // sup |delta h|
  double increment_phi = 0.0;  // gamma-weighted sup |delta phi|
  double blended = 0.0;        // increment_h + eps^(alpha-3) increment_phi
  double contraction = 0.0;    // blended / previous blended; 0 on first sweep
  double kernel_residual = 0.0;  // max_s |<E, v'>|_t before the h update
};

struct EndCorrectionOptions {
  int strip_ns = 129;  // odd so the s grid doubles as the periodic solve grid
  int strip_nt = 161;
  double t_box = 12.0;
  double gamma = 1.2;
  double alpha = 0.25;
  double tol = 1e-10;  // stop when the blended increment falls below
  int max_sweeps = 40;
  int grace_sweeps = 3;  // non-contracting sweeps tolerated before the raise
  double eta = 0.05;
  double symbol_cap = 0.5;  // focal fraction for the saturated symbol height
  int threads = 1;
};

struct EndCorrectionResult {
  IsothermalProfile model;  // end model at the perturbed necksize
  ProfileSolution profile;
  SymmetricPeriodicFunction h;
  StripFunction phi;
  std::vector<SweepTrace> trace;
  int sweeps = 0;
  double final_increment = 0.0;
  double contraction_max = 0.0;  // max factor once past the opening transient
  double h_sup = 0.0;
  double phi_weighted = 0.0;
  double orthogonality = 0.0;       // max_s |<phi(s,.), v'>| at exit
  double residual_on_grid = 0.0;    // sup |E| on the solve grid at exit
  double residual_staggered = 0.0;  // gamma-weighted sup on a shifted grid
};

// Alternating correction for one end: the strip solve removes the projected
// residual, the periodic solve removes its kernel trace, iterated on the
// honestly re-evaluated equation until the blended increment drops below tol.
// Raises NoContraction when grace_sweeps consecutive factors stay >= 1.
EndCorrectionResult end_corrections(const IsothermalProfile& base, double eps,
                                    const PerturbationVector& d,
                                    const EndCorrectionOptions& options = {});

// Attach a computed correction pair to an approximation, globally or gated by
// zeta past end.s0 + 2.
void attach_corrections(ApproximateSolution& u, const EndCorrectionResult& corrections);
void attach_corrections(ApproximateSolution& u, const EndCorrectionResult& corrections,
                        const EndConfiguration& end);

// Grid sample of a field over the window with sup norms weighted by
// cosh^gamma(t) and optionally by the surface growth weight e^(a s).
struct WeightedGridFunction {
  double s_begin = 0.0, s_end = 0.0, t_box = 0.0, gamma = 0.0;
  Eigen::MatrixXd values;  // ns x nt
  double s(int i) const;
  double t(int j) const;
  double sup() const;
  double weighted_sup() const;
  double weighted_sup(double a) const;
  double weighted_sup(double a, double s_from, double s_to) const;
};

struct ResidualOptions {
  int ns = 257;
  int nt = 161;
  double t_box = 8.0;
  double gamma = 1.2;
  int m = 0;
  bool exact_branch = true;     // cross-check on the fold-safe sub-window
  double symbol_cap = 0.5;      // focal fraction for the saturated symbol height
  int threads = 1;
};

// Full Cahn-Hilliard residual eps lap(u) + f(u)/eps - ell on the Fermi strip,
// with the structural split of its second-order part. The split terms carry
// U' only; everything else, the psi0 transports included, lands in remainder.
struct ResidualReport {
  WeightedGridFunction total;       // expanded symbols, whole box
  WeightedGridFunction jacobi_term; // -eps^2 (lap_model h + |A|^2 h) U'
  WeightedGridFunction trA3_term;   // -eps^2 tr A^3 t^2 U'
  WeightedGridFunction lambda_term; // +eps^2 lambda |A|^2 U'
  WeightedGridFunction curvature_term;  // -(H - 1) U'
  WeightedGridFunction remainder;
  double sup_total = 0.0;
  double weighted_total = 0.0;
  double exact_t_box = 0.0;  // extent of the divergence-form cross-check
  double exact_gap = 0.0;    // sup |exact - expanded| over that sub-window
};

ResidualReport residual(const ApproximateSolution& approx, const ResidualOptions& options = {});

// s_tau-periodic content of r over [s_from, s_from + periods * s_tau] against
// the leftover, both gamma-weighted sups. Needs the window inside the sample.
struct PeriodicSplit {
  double periodic = 0.0;
  double leftover = 0.0;
};
PeriodicSplit periodic_content(const WeightedGridFunction& r, double s_tau, double s_from,
                               int periods);

// Surface swept by the nodal set of the approximation inside the tube.
TriangleMesh nodal_mesh(const ApproximateSolution& approx, int ns, int ntheta);

}  // namespace cmcwb
