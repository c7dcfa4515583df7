#include "cmcwb/jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cmcwb/errors.hpp"

namespace cmcwb {

namespace {

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& omega) {
  const double angle = omega.norm();
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
  if (angle == 0.0) return r;
  const Eigen::Vector3d n = omega / angle;
  Eigen::Matrix3d k;
  k << 0, -n.z(), n.y(), n.z(), 0, -n.x(), -n.y(), n.x(), 0;
  r += std::sin(angle) * k + (1.0 - std::cos(angle)) * (k * k);
  return r;
}

bool needs_tau_derivatives(FieldKind kind) {
  return kind == FieldKind::D || kind == FieldKind::P0minus;
}

int angular_mode(FieldKind kind) {
  switch (kind) {
    case FieldKind::T1:
    case FieldKind::T2:
    case FieldKind::R1:
    case FieldKind::R2:
      return 1;
    default:
      return 0;
  }
}

// s-dependent factor f with Phi = f(s) mode(theta), |mode| <= 1.
double field_s_part(const IsothermalProfile& profile, const TauDerivatives* derivatives,
                    FieldKind kind, double s) {
  const double tau = profile.tau;
  const double sg = profile.sigma_at(s);
  const double dsg = profile.dsigma_at(s);
  switch (kind) {
    case FieldKind::T1:
    case FieldKind::T2:
      return -tau * std::cosh(sg);
    case FieldKind::T3:
    case FieldKind::P0plus:
      return dsg;
    case FieldKind::R1:
    case FieldKind::R2:
      return tau * (profile.k_at(s) * std::cosh(sg) + dsg * std::exp(sg));
    case FieldKind::D:
    case FieldKind::P0minus: {
      require(derivatives != nullptr, ErrorCode::MissingTauDerivatives,
              "field needs tau-derivative tables");
      const double dk = derivatives->dk_at(s);
      const double dsigma = derivatives->dsigma_at(s);
      return std::sqrt(1.0 - tau * tau) *
             (dsg * dk / tau - std::exp(sg) * std::cosh(sg) * (1.0 + tau * dsigma));
    }
  }
  fail(ErrorCode::InvalidParameter, "unknown field kind");
}

double angular_factor(FieldKind kind, double theta) {
  switch (kind) {
    case FieldKind::T1:
    case FieldKind::R2:
      return std::cos(theta);
    case FieldKind::T2:
    case FieldKind::R1:
      return std::sin(theta);
    default:
      return 1.0;
  }
}

// R2 carries the minus sign relative to the shared radial factor.
double orientation(FieldKind kind) { return kind == FieldKind::R2 ? -1.0 : 1.0; }

}  // namespace

double TauDerivatives::dsigma_at(double s) const {
  require(std::abs(s) <= window, ErrorCode::InvalidParameter,
          "s outside the tau-derivative window");
  return dsigma_dtau.eval(s);
}

double TauDerivatives::dk_at(double s) const {
  require(std::abs(s) <= window, ErrorCode::InvalidParameter,
          "s outside the tau-derivative window");
  return dk_dtau.eval(s);
}

TauDerivatives make_tau_derivatives(const IsothermalProfile& profile, double delta_tau,
                                    double window_periods) {
  require(delta_tau > 0.0 && delta_tau <= 1e-2, ErrorCode::InvalidParameter,
          "delta_tau outside (0, 1e-2]");
  require(window_periods >= 1.0, ErrorCode::InvalidParameter, "window must span >= 1 period");
  const double tau = profile.tau;
  require(tau - delta_tau > 0.0 && tau + delta_tau <= 1.0, ErrorCode::InvalidParameter,
          "tau +/- delta_tau leaves (0, 1]");

  const double h = profile.grid_step;
  const IsothermalProfile lo = build_isothermal(solve_meridian(tau - delta_tau, h), h);
  const IsothermalProfile hi = build_isothermal(solve_meridian(tau + delta_tau, h), h);

  TauDerivatives out;
  out.tau = tau;
  out.delta_tau = delta_tau;
  out.window = window_periods * profile.s_tau;

  const int n = static_cast<int>(std::ceil(2.0 * out.window / h));
  Eigen::VectorXd dsig(n + 1), dk(n + 1);
  const double step = 2.0 * out.window / n;
  const double inv = 1.0 / (2.0 * delta_tau);
  for (int i = 0; i <= n; ++i) {
    const double s = -out.window + i * step;
    dsig(i) = (hi.sigma_at(s) - lo.sigma_at(s)) * inv;
    dk(i) = (hi.k_at(s) - lo.k_at(s)) * inv;
  }
  // End slopes from the per-profile analytic s-derivatives keep the spline
  // clamped instead of leaning on natural boundary conditions.
  const double sb = (hi.dsigma_at(-out.window) - lo.dsigma_at(-out.window)) * inv;
  const double se = (hi.dsigma_at(out.window) - lo.dsigma_at(out.window)) * inv;
  const double kb = (hi.dk_at(-out.window) - lo.dk_at(-out.window)) * inv;
  const double ke = (hi.dk_at(out.window) - lo.dk_at(out.window)) * inv;
  out.dsigma_dtau = CubicSpline::create(-out.window, out.window, dsig,
                                        CubicSpline::Boundary::Clamped, sb, se);
  out.dk_dtau = CubicSpline::create(-out.window, out.window, dk,
                                    CubicSpline::Boundary::Clamped, kb, ke);
  return out;
}

double eval_jacobi(const IsothermalProfile& profile, const TauDerivatives* derivatives,
                   FieldKind kind, double s, double theta) {
  if (needs_tau_derivatives(kind)) {
    require(derivatives != nullptr, ErrorCode::MissingTauDerivatives,
            "field needs tau-derivative tables");
  }
  return orientation(kind) * field_s_part(profile, derivatives, kind, s) *
         angular_factor(kind, theta);
}

double jacobi_residual(const IsothermalProfile& profile, const TauDerivatives* derivatives,
                       FieldKind kind, double s_begin, double s_end, double h, int n_samples) {
  require(h > 0.0 && s_end > s_begin, ErrorCode::InvalidParameter, "bad residual window");
  require(n_samples >= 2, ErrorCode::InvalidParameter, "need at least two samples");
  const double tau = profile.tau;
  const int m = angular_mode(kind);
  double sup = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double s = s_begin + (s_end - s_begin) * i / (n_samples - 1);
    const double fm = field_s_part(profile, derivatives, kind, s - h);
    const double f0 = field_s_part(profile, derivatives, kind, s);
    const double fp = field_s_part(profile, derivatives, kind, s + h);
    const double d2 = (fm - 2.0 * f0 + fp) / (h * h);
    const double value =
        d2 - m * m * f0 + tau * tau * std::cosh(2.0 * profile.sigma_at(s)) * f0;
    sup = std::max(sup, std::abs(value));
  }
  return sup;
}

double linear_combination(const IsothermalProfile& profile, const TauDerivatives* derivatives,
                          const PerturbationVector& a, double s, double theta) {
  double value = 0.0;
  if (a.aT.x() != 0.0) value += a.aT.x() * eval_jacobi(profile, derivatives, FieldKind::T1, s, theta);
  if (a.aT.y() != 0.0) value += a.aT.y() * eval_jacobi(profile, derivatives, FieldKind::T2, s, theta);
  if (a.aT.z() != 0.0) value += a.aT.z() * eval_jacobi(profile, derivatives, FieldKind::T3, s, theta);
  if (a.aR.x() != 0.0) value += a.aR.x() * eval_jacobi(profile, derivatives, FieldKind::R1, s, theta);
  if (a.aR.y() != 0.0) value += a.aR.y() * eval_jacobi(profile, derivatives, FieldKind::R2, s, theta);
  if (a.aD != 0.0) value += a.aD * eval_jacobi(profile, derivatives, FieldKind::D, s, theta);
  return value;
}

PerturbedDelaunay make_perturbed(const IsothermalProfile& base, const PerturbationVector& a,
                                 double eta) {
  require(eta > 0.0, ErrorCode::InvalidParameter, "eta must be positive");
  require(a.norm() < eta, ErrorCode::PerturbationTooLarge,
          "perturbation norm exceeds the trust radius");
  PerturbedDelaunay out;
  out.a = a;
  if (a.aD != 0.0) {
    const double eps = base.eps_neck + a.aD;
    require(eps > 0.0 && eps <= 1.0, ErrorCode::InvalidParameter,
            "shifted neck parameter leaves (0, 1]");
    const double tau = std::sqrt(eps * (2.0 - eps));
    out.shifted = build_isothermal(solve_meridian(tau, base.grid_step), base.grid_step);
  } else {
    out.shifted = base;
  }
  out.rotation = rodrigues(Eigen::Vector3d(a.aR.x(), a.aR.y(), 0.0));
  out.translation = a.aT;
  return out;
}

Eigen::Vector3d perturbed_position(const PerturbedDelaunay& surface, double s, double theta) {
  return surface.rotation * surface.shifted.position(s, theta) + surface.translation;
}

namespace {

struct TangentBasis {
  Eigen::Vector3d point;
  Eigen::Vector3d normal;
  Eigen::Vector3d t_s;
  Eigen::Vector3d t_theta;
};

TangentBasis base_frame(const IsothermalProfile& p, double s, double theta) {
  const double w = p.w_at(s);
  const double dw = w * p.dsigma_at(s);
  const double dk = p.dk_at(s);
  const double c = std::cos(theta), sn = std::sin(theta);
  TangentBasis out;
  out.point = p.position(s, theta);
  out.normal = p.normal(s, theta);
  out.t_s = Eigen::Vector3d(dw * c, dw * sn, dk);
  out.t_theta = Eigen::Vector3d(-w * sn, w * c, 0.0);
  return out;
}

}  // namespace

GraphDecomposition normal_graph_decompose(const IsothermalProfile& base,
                                          const TauDerivatives& derivatives,
                                          const PerturbationVector& a, double s0, double s1,
                                          int ns, int ntheta) {
  require(s1 > s0 && ns >= 2 && ntheta >= 4, ErrorCode::InvalidParameter,
          "bad decomposition grid");
  const PerturbedDelaunay pert = make_perturbed(base, a);
  const IsothermalProfile& q = pert.shifted;

  GraphDecomposition out;
  out.s0 = s0;
  out.s1 = s1;
  out.ns = ns;
  out.ntheta = ntheta;
  out.w.resize(ns + 1, ntheta);
  out.phi_lin.resize(ns + 1, ntheta);
  out.psi_rem.resize(ns + 1, ntheta);

  // Family shifts drag the foot point tangentially (the cell length moves
  // with tau), so the radii must exceed that drift at |a| ~ eta while still
  // rejecting wrap-around correspondences at deep necks.
  constexpr double kTrustRadius = 1.25;
  constexpr double kSearchRadius = 1.8;
  constexpr double kMaxStep = 0.5;
  constexpr int kMaxIter = 60;

  for (int i = 0; i <= ns; ++i) {
    const double s = s0 + (s1 - s0) * i / ns;
    for (int j = 0; j < ntheta; ++j) {
      const double theta = 2.0 * M_PI * j / ntheta;
      const TangentBasis frame = base_frame(base, s, theta);

      double sp = s, tp = theta;
      bool converged = false;
      for (int iter = 0; iter < kMaxIter; ++iter) {
        const Eigen::Vector3d pos =
            pert.rotation * q.position(sp, tp) + pert.translation;
        const Eigen::Vector3d diff = pos - frame.point;
        const Eigen::Vector2d f(diff.dot(frame.t_s), diff.dot(frame.t_theta));
        if (f.cwiseAbs().maxCoeff() < 1e-13) {
          converged = true;
          break;
        }
        const double wq = q.w_at(sp);
        const double dwq = wq * q.dsigma_at(sp);
        const double dkq = q.dk_at(sp);
        const double cq = std::cos(tp), sq = std::sin(tp);
        const Eigen::Vector3d qs = pert.rotation * Eigen::Vector3d(dwq * cq, dwq * sq, dkq);
        const Eigen::Vector3d qt = pert.rotation * Eigen::Vector3d(-wq * sq, wq * cq, 0.0);
        Eigen::Matrix2d jac;
        jac << frame.t_s.dot(qs), frame.t_s.dot(qt), frame.t_theta.dot(qs),
            frame.t_theta.dot(qt);
        const double det = jac.determinant();
        require(std::abs(det) > 1e-10, ErrorCode::ProjectionNotUnique,
                "projection Jacobian is singular");
        Eigen::Vector2d step = jac.inverse() * f;
        const double len = step.norm();
        if (len > kMaxStep) step *= kMaxStep / len;
        sp -= step(0);
        tp -= step(1);
        require(std::abs(sp - s) < kSearchRadius && std::abs(tp - theta) < kSearchRadius,
                ErrorCode::ProjectionNotUnique, "projection left its search region");
      }
      require(converged, ErrorCode::ProjectionNotUnique, "projection did not converge");
      // A converged foot point far from the start means the correspondence
      // is no longer the nearby-graph one.
      require(std::abs(sp - s) < kTrustRadius && std::abs(tp - theta) < kTrustRadius,
              ErrorCode::ProjectionNotUnique, "graph correspondence is not local");

      const Eigen::Vector3d pos = pert.rotation * q.position(sp, tp) + pert.translation;
      const double w_val = (pos - frame.point).dot(frame.normal);
      const double lin = linear_combination(base, &derivatives, a, s, theta);
      out.w(i, j) = w_val;
      out.phi_lin(i, j) = lin;
      out.psi_rem(i, j) = w_val - lin;
      out.sup_w = std::max(out.sup_w, std::abs(w_val));
      out.sup_rem = std::max(out.sup_rem, std::abs(w_val - lin));
    }
  }
  return out;
}

}  // namespace cmcwb
