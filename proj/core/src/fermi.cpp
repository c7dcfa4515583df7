#include "cmcwb/fermi.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "cmcwb/errors.hpp"
#include "cmcwb/parallel.hpp"

namespace cmcwb {

namespace {

constexpr double kFrameStep = 2e-3;   // chart FD step; fourth order leaves ~1e-11
constexpr double kMetricStep = 2e-3;  // s-step for slice metric derivatives
constexpr double kZeroZ = 1e-9;       // below this the quotients switch to limits

// First-derivative weights at offsets {-2,-1,+1,+2}, to be divided by 12 h.
constexpr std::array<double, 4> kD1 = {1.0, -8.0, 8.0, -1.0};
constexpr std::array<int, 4> kOff = {-2, -1, 1, 2};

Eigen::Matrix2d tangential_metric(const Eigen::Matrix2d& g, const Eigen::Matrix2d& A,
                                  const Eigen::Matrix2d& AM, double z) {
  return g - 2.0 * z * A + z * z * AM;
}

double offset_H(const Eigen::Vector2d& kappa, double z) {
  return kappa(0) / (1.0 - z * kappa(0)) + kappa(1) / (1.0 - z * kappa(1));
}

// Frame samples along a fixed-theta segment plus every z-independent scalar
// the operator needs; one cache serves a whole grid column.
struct ColumnData {
  double s = 0.0;
  double theta = 0.0;
  double hs = kMetricStep;
  std::array<Eigen::Matrix2d, 5> g, A, AM;  // nodes s + k hs, k = -2..2
  Eigen::Matrix2d g_inv = Eigen::Matrix2d::Identity();
  Eigen::Vector2d kappa = Eigen::Vector2d::Zero();
  double H = 0.0, normA2 = 0.0, trA3 = 0.0, trA4 = 0.0;
  // z-Taylor data for the expanded operator (a to first order is closed:
  // G = g (I - z g^{-1}A)^2 gives a = 2 g^{-1}A g^{-1} + 3 z (g^{-1}A)^2 g^{-1}).
  Eigen::Matrix2d a0 = Eigen::Matrix2d::Zero(), a1 = Eigen::Matrix2d::Zero();
  Eigen::Vector2d b0 = Eigen::Vector2d::Zero(), b1 = Eigen::Vector2d::Zero();
  double B0 = 0.0;   // G^{km} Gamma^s_{km} at z = 0
  double C10 = 0.0;  // -B0
};

// Contraction B^l = G^{km} Gamma^l_{km} of the slice at height z, from the
// cached column; the chart is theta-independent so only s-derivatives enter.
Eigen::Vector2d contraction_B(const ColumnData& col, double z) {
  std::array<Eigen::Matrix2d, 5> Gt;
  for (int i = 0; i < 5; ++i) Gt[i] = tangential_metric(col.g[i], col.A[i], col.AM[i], z);
  const Eigen::Matrix2d D = (Gt[0] - 8.0 * Gt[1] + 8.0 * Gt[3] - Gt[4]) / (12.0 * col.hs);
  const Eigen::Matrix2d P = Gt[2].inverse();
  const Eigen::Matrix2d PDP = P * D * P;
  const double half_trace = 0.5 * (P * D).trace();
  return {PDP(0, 0) - P(0, 0) * half_trace, PDP(1, 0) - P(1, 0) * half_trace};
}

ColumnData make_column(const SurfaceChart& chart, double s, double theta, double half_width,
                       bool orthogonal_required) {
  ColumnData col;
  col.s = s;
  col.theta = theta;
  for (int k = -2; k <= 2; ++k) {
    const SurfaceFrame fr = chart.frame(s + k * col.hs, theta);
    const Eigen::Matrix2d M = fr.metric.inverse() * fr.second_fundamental;
    col.g[k + 2] = fr.metric;
    col.A[k + 2] = fr.second_fundamental;
    col.AM[k + 2] = fr.second_fundamental * M;
    if (k == 0) {
      col.g_inv = fr.metric.inverse();
      const double tr = M.trace();
      const double disc = std::max(0.0, tr * tr - 4.0 * M.determinant());
      const double root = std::sqrt(disc);
      col.kappa << 0.5 * (tr - root), 0.5 * (tr + root);
      col.H = tr;
      col.normA2 = col.kappa(0) * col.kappa(0) + col.kappa(1) * col.kappa(1);
      col.trA3 = std::pow(col.kappa(0), 3) + std::pow(col.kappa(1), 3);
      col.trA4 = std::pow(col.kappa(0), 4) + std::pow(col.kappa(1), 4);
      col.a0 = 2.0 * M * col.g_inv;
      col.a1 = 3.0 * M * M * col.g_inv;
      if (orthogonal_required) {
        const double scale = fr.metric.cwiseAbs().maxCoeff() + fr.second_fundamental.cwiseAbs().maxCoeff();
        require(std::abs(fr.metric(0, 1)) + std::abs(fr.second_fundamental(0, 1)) <= 1e-8 * scale,
                ErrorCode::InvalidParameter,
                "fermi: mode application requires an orthogonal rotational chart");
      }
    }
  }
  col.B0 = contraction_B(col, 0.0)(0);
  col.C10 = -col.B0;
  // b-Taylor by z-differences of the contraction (analytic inside the tube).
  const double dz = std::min(1e-3, 0.2 * half_width);
  const Eigen::Vector2d Bm2 = contraction_B(col, -2.0 * dz);
  const Eigen::Vector2d Bm1 = contraction_B(col, -dz);
  const Eigen::Vector2d B00 = contraction_B(col, 0.0);
  const Eigen::Vector2d Bp1 = contraction_B(col, dz);
  const Eigen::Vector2d Bp2 = contraction_B(col, 2.0 * dz);
  const Eigen::Vector2d Bprime = (Bm2 - 8.0 * Bm1 + 8.0 * Bp1 - Bp2) / (12.0 * dz);
  const Eigen::Vector2d Bsecond =
      (-Bp2 + 16.0 * Bp1 - 30.0 * B00 + 16.0 * Bm1 - Bm2) / (12.0 * dz * dz);
  col.b0 = -Bprime;
  col.b1 = -0.5 * Bsecond;
  return col;
}

using DerivSet = FieldJet;

LaplacianValue combine(const FermiChart& fermi, const ColumnData& col, const DerivSet& d, double s,
                       double t, int m, bool want_exact, double symbol_cap) {
  const double eps = fermi.eps();
  const double h = fermi.shift_at(s);
  const double hp = fermi.dshift_at(s);
  const double hpp = fermi.d2shift_at(s);
  const double z = eps * t + eps * eps * h;
  const double m2 = static_cast<double>(m) * m;

  // Saturated symbol height: the eps t part flattens smoothly at
  // symbol_cap / max|kappa|, the eps^2 h part stays linear so the normal
  // response of the symbols keeps full strength. x^8 keeps the distortion
  // below 0.2% for |eps t| under six tenths of the cap.
  double zs = z;
  if (symbol_cap > 0.0) {
    const double kmax = col.kappa.cwiseAbs().maxCoeff();
    const double x = eps * t * kmax / symbol_cap;
    const double x2 = x * x, x4 = x2 * x2;
    zs = eps * t / std::pow(1.0 + x4 * x4, 0.125) + eps * eps * h;
  }

  // Exact branch: divergence form of the full metric, pushed through the
  // shift chain rule. The brackets cancel algebraically for u = z, which
  // pins the sign of the drift. Only this branch needs the tube constraint;
  // the truncated symbols below are polynomials in z.
  double exact = std::numeric_limits<double>::quiet_NaN();
  if (want_exact) {
    require(std::abs(z) < fermi.half_width(), ErrorCode::OutsideTube,
            "fermi: shifted height leaves the tube");
    const Eigen::Matrix2d Gt = tangential_metric(col.g[2], col.A[2], col.AM[2], z);
    const Eigen::Matrix2d P = Gt.inverse();
    const double C2 = P(0, 0);
    const double C1 = -contraction_B(col, z)(0);
    const double Hz = offset_H(col.kappa, z);
    exact = C2 * (d.dss - 2.0 * eps * hp * d.dst + eps * eps * hp * hp * d.dtt -
                  eps * hpp * d.dt) +
            C1 * (d.ds - eps * hp * d.dt) - m2 * P(1, 1) * d.v + d.dtt / (eps * eps) -
            Hz * d.dt / eps;
  }

  // Expanded branch: same term layout with the quotient fields truncated at
  // first z-order (drift through z^3 trA^4); the difference of the two
  // branches is third order in eps.
  const double gss = col.g_inv(0, 0);
  const double gtt = col.g_inv(1, 1);
  const double a_ss = col.a0(0, 0) + zs * col.a1(0, 0);
  const double a_tt = col.a0(1, 1) + zs * col.a1(1, 1);
  const double b_s = col.b0(0) + zs * col.b1(0);
  const double C0e = col.H + zs * (col.normA2 + zs * (col.trA3 + zs * col.trA4));
  const double lap_u = gss * d.dss + col.C10 * d.ds - m2 * gtt * d.v;
  const double lap_h = gss * hpp + col.C10 * hp;
  const double A_u = a_ss * d.dss - m2 * a_tt * d.v + b_s * d.ds;
  const double A_h = col.a0(0, 0) * hpp + col.b0(0) * hp;
  double expanded = lap_u - eps * lap_h * d.dt - 2.0 * eps * gss * hp * d.dst +
                    eps * eps * gss * hp * hp * d.dtt + d.dtt / (eps * eps) - C0e * d.dt / eps +
                    zs * A_u - eps * zs * A_h * d.dt - 2.0 * eps * zs * col.a0(0, 0) * hp * d.dst +
                    eps * eps * zs * col.a0(0, 0) * hp * hp * d.dtt;
  return {exact, expanded};
}

}  // namespace

SurfaceFrame SurfaceChart::frame(double s, double theta) const {
  const double h = kFrameStep;
  auto at = [&](int i, int j) { return position(s + i * h, theta + j * h); };
  Eigen::Vector3d Xs = Eigen::Vector3d::Zero(), Xt = Eigen::Vector3d::Zero();
  Eigen::Vector3d Xst = Eigen::Vector3d::Zero();
  for (int a = 0; a < 4; ++a) {
    Xs += kD1[a] * at(kOff[a], 0);
    Xt += kD1[a] * at(0, kOff[a]);
    for (int b = 0; b < 4; ++b) Xst += kD1[a] * kD1[b] * at(kOff[a], kOff[b]);
  }
  Xs /= 12.0 * h;
  Xt /= 12.0 * h;
  Xst /= 144.0 * h * h;
  const Eigen::Vector3d center = at(0, 0);
  const Eigen::Vector3d Xss =
      (-at(2, 0) + 16.0 * at(1, 0) - 30.0 * center + 16.0 * at(-1, 0) - at(-2, 0)) /
      (12.0 * h * h);
  const Eigen::Vector3d Xtt =
      (-at(0, 2) + 16.0 * at(0, 1) - 30.0 * center + 16.0 * at(0, -1) - at(0, -2)) /
      (12.0 * h * h);

  SurfaceFrame fr;
  fr.point = center;
  fr.normal = Xs.cross(Xt).normalized();
  fr.metric << Xs.dot(Xs), Xs.dot(Xt), Xs.dot(Xt), Xt.dot(Xt);
  fr.second_fundamental << Xss.dot(fr.normal), Xst.dot(fr.normal), Xst.dot(fr.normal),
      Xtt.dot(fr.normal);
  const Eigen::Matrix2d M = fr.metric.inverse() * fr.second_fundamental;
  fr.mean_curvature = M.trace();
  fr.normA2 = (M * M).trace();
  fr.trA3 = (M * M * M).trace();
  return fr;
}

Eigen::Vector2d principal_curvatures(const SurfaceFrame& frame) {
  const Eigen::Matrix2d M = frame.metric.inverse() * frame.second_fundamental;
  const double tr = M.trace();
  const double disc = std::max(0.0, tr * tr - 4.0 * M.determinant());
  const double root = std::sqrt(disc);
  return {0.5 * (tr - root), 0.5 * (tr + root)};
}

Eigen::Vector3d DelaunayChart::position(double s, double theta) const {
  return profile_.position(s, theta);
}

SurfaceFrame DelaunayChart::frame(double s, double theta) const {
  return frame_at(profile_, s, theta);
}

double DelaunayChart::max_principal_curvature() const {
  return profile_.kappa2_at(0.0);  // hoop curvature peaks at the neck
}

Eigen::Matrix3d fermi_metric(const SurfaceChart& chart, double s, double theta, double z) {
  const SurfaceFrame fr = chart.frame(s, theta);
  const Eigen::Matrix2d M = fr.metric.inverse() * fr.second_fundamental;
  const Eigen::Matrix2d tang = tangential_metric(fr.metric, fr.second_fundamental,
                                                 fr.second_fundamental * M, z);
  Eigen::Matrix3d G = Eigen::Matrix3d::Zero();
  G.topLeftCorner<2, 2>() = tang;
  G(2, 2) = 1.0;
  return G;
}

FermiChart::FermiChart(const SurfaceChart& chart, double eps, double half_width, CubicSpline shift)
    : chart_(&chart), eps_(eps), half_width_(half_width), shift_(std::move(shift)) {
  require(eps_ > 0.0 && eps_ < 1.0, ErrorCode::InvalidParameter,
          "fermi: eps must lie in (0, 1)");
  const double kmax = chart.max_principal_curvature();
  require(kmax > 0.0, ErrorCode::InvalidParameter,
          "fermi: chart must report a positive curvature bound");
  const double focal = 1.0 / kmax;
  if (half_width_ == 0.0) half_width_ = std::min(0.3, 0.5 * focal);
  require(half_width_ > 0.0 && half_width_ < focal, ErrorCode::InvalidParameter,
          "fermi: half width must stay below the focal radius");
  if (!shift_.empty()) {
    const int n = 800;
    double bound = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double x = shift_.x0() + (shift_.x1() - shift_.x0()) * i / n;
      bound = std::max(bound, std::abs(shift_.eval(x)) + std::abs(shift_.deriv(x)) +
                                  std::abs(shift_.deriv2(x)));
    }
    shift_c2_bound_ = bound;
  }
}

Eigen::Matrix3d FermiChart::metric(double s, double theta, double z) const {
  require(std::abs(z) < half_width_, ErrorCode::OutsideTube,
          "fermi: |z| reaches the tube half width");
  return fermi_metric(*chart_, s, theta, z);
}

LaplacianCoefficients FermiChart::coefficients(double s, double theta, double z) const {
  require(std::abs(z) < half_width_, ErrorCode::OutsideTube,
          "fermi: |z| reaches the tube half width");
  const ColumnData col = make_column(*chart_, s, theta, half_width_, false);

  LaplacianCoefficients out;
  const Eigen::Matrix2d Gt = tangential_metric(col.g[2], col.A[2], col.AM[2], z);
  out.G.setZero();
  out.G.topLeftCorner<2, 2>() = Gt;
  out.G(2, 2) = 1.0;
  out.Hz = offset_H(col.kappa, z);
  out.trA3 = col.trA3;
  if (std::abs(z) < kZeroZ) {
    out.a = col.a0;
    out.b = col.b0;
    out.Q = col.trA3;
    out.Qtilde = col.trA4;
  } else {
    out.a = (Gt.inverse() - col.g_inv) / z;
    out.b = -(contraction_B(col, z) - contraction_B(col, 0.0)) / z;
    out.Q = (out.Hz - col.H - z * col.normA2) / (z * z);
    out.Qtilde = (out.Q - col.trA3) / z;
  }
  return out;
}

double FermiChart::offset_mean_curvature(double s, double theta, double z) const {
  require(std::abs(z) < half_width_, ErrorCode::OutsideTube,
          "fermi: |z| reaches the tube half width");
  const Eigen::Vector2d kappa = principal_curvatures(chart_->frame(s, theta));
  return offset_H(kappa, z);
}

LaplacianValue apply_laplacian_fermi(const FermiChart& fermi, const AnalyticField& u, double s,
                                     double t, int m) {
  require(u.value && u.ds && u.dss && u.dt && u.dtt && u.dst, ErrorCode::InvalidParameter,
          "fermi: analytic field must supply all six callables");
  const ColumnData col = make_column(fermi.chart(), s, 0.0, fermi.half_width(), true);
  DerivSet d;
  d.v = u.value(s, t);
  d.ds = u.ds(s, t);
  d.dss = u.dss(s, t);
  d.dt = u.dt(s, t);
  d.dtt = u.dtt(s, t);
  d.dst = u.dst(s, t);
  return combine(fermi, col, d, s, t, m, true, 0.0);
}

double apply_laplacian_expanded(const FermiChart& fermi, const AnalyticField& u, double s,
                                double t, int m, double symbol_cap) {
  require(u.value && u.ds && u.dss && u.dt && u.dtt && u.dst, ErrorCode::InvalidParameter,
          "fermi: analytic field must supply all six callables");
  const ColumnData col = make_column(fermi.chart(), s, 0.0, fermi.half_width(), true);
  DerivSet d;
  d.v = u.value(s, t);
  d.ds = u.ds(s, t);
  d.dss = u.dss(s, t);
  d.dt = u.dt(s, t);
  d.dtt = u.dtt(s, t);
  d.dst = u.dst(s, t);
  return combine(fermi, col, d, s, t, m, false, symbol_cap).expanded;
}

Eigen::MatrixXd apply_laplacian_expanded(const FermiChart& fermi,
                                         const std::function<FieldJet(double, double)>& jet,
                                         const Eigen::VectorXd& s_nodes,
                                         const Eigen::VectorXd& t_nodes, int m, int threads,
                                         double symbol_cap) {
  require(static_cast<bool>(jet), ErrorCode::InvalidParameter,
          "fermi: jet callable must be set");
  require(s_nodes.size() > 0 && t_nodes.size() > 0, ErrorCode::InvalidParameter,
          "fermi: node lists must be nonempty");
  Eigen::MatrixXd out(s_nodes.size(), t_nodes.size());
  parallel_for(
      s_nodes.size(),
      [&](long i) {
        const double s = s_nodes[i];
        const ColumnData col = make_column(fermi.chart(), s, 0.0, fermi.half_width(), true);
        for (long j = 0; j < t_nodes.size(); ++j) {
          const FieldJet d = jet(s, t_nodes[j]);
          out(i, j) = combine(fermi, col, d, s, t_nodes[j], m, false, symbol_cap).expanded;
        }
      },
      threads);
  return out;
}

LaplacianGridResult apply_laplacian_fermi(const FermiChart& fermi, const FermiGridField& u,
                                          int m) {
  require(u.ghost >= 2, ErrorCode::GhostLayerMissing,
          "fermi: grid field needs two ghost layers per side");
  const int gl = u.ghost;
  const long ns = u.values.rows() - 2L * gl;
  const long nt = u.values.cols() - 2L * gl;
  require(ns >= 2 && nt >= 2, ErrorCode::InvalidParameter,
          "fermi: grid needs at least two interior nodes per direction");
  require(u.s1 > u.s0 && u.t1 > u.t0, ErrorCode::InvalidParameter,
          "fermi: grid box must have positive extent");
  const double ds = (u.s1 - u.s0) / static_cast<double>(ns - 1);
  const double dt = (u.t1 - u.t0) / static_cast<double>(nt - 1);

  LaplacianGridResult out;
  out.exact.resize(ns, nt);
  out.expanded.resize(ns, nt);
  const Eigen::MatrixXd& V = u.values;
  parallel_for(
      ns,
      [&](long i) {
        const double s = u.s0 + i * ds;
        const ColumnData col = make_column(fermi.chart(), s, 0.0, fermi.half_width(), true);
        const long I = i + gl;
        for (long j = 0; j < nt; ++j) {
          const long J = j + gl;
          DerivSet d;
          d.v = V(I, J);
          d.ds = (V(I - 2, J) - 8.0 * V(I - 1, J) + 8.0 * V(I + 1, J) - V(I + 2, J)) / (12.0 * ds);
          d.dt = (V(I, J - 2) - 8.0 * V(I, J - 1) + 8.0 * V(I, J + 1) - V(I, J + 2)) / (12.0 * dt);
          d.dss = (-V(I + 2, J) + 16.0 * V(I + 1, J) - 30.0 * V(I, J) + 16.0 * V(I - 1, J) -
                   V(I - 2, J)) /
                  (12.0 * ds * ds);
          d.dtt = (-V(I, J + 2) + 16.0 * V(I, J + 1) - 30.0 * V(I, J) + 16.0 * V(I, J - 1) -
                   V(I, J - 2)) /
                  (12.0 * dt * dt);
          double mixed = 0.0;
          for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) mixed += kD1[a] * kD1[b] * V(I + kOff[a], J + kOff[b]);
          d.dst = mixed / (144.0 * ds * dt);
          const LaplacianValue value = combine(fermi, col, d, s, u.t0 + j * dt, m, true, 0.0);
          out.exact(i, j) = value.exact;
          out.expanded(i, j) = value.expanded;
        }
      },
      default_thread_count());
  return out;
}

CoefficientBounds coefficient_bounds(const FermiChart& fermi, double s0, double s1, int ns,
                                     int nz) {
  require(ns >= 2 && nz >= 2 && s1 > s0, ErrorCode::InvalidParameter,
          "fermi: bounds need a grid of at least 2 x 2 samples");
  CoefficientBounds bounds;
  for (int i = 0; i < ns; ++i) {
    const double s = s0 + (s1 - s0) * i / (ns - 1);
    for (int j = 0; j < nz; ++j) {
      const double z = 0.95 * fermi.half_width() * (-1.0 + 2.0 * j / (nz - 1));
      const LaplacianCoefficients c = fermi.coefficients(s, 0.0, z);
      bounds.sup_a = std::max(bounds.sup_a, c.a.cwiseAbs().maxCoeff());
      bounds.sup_b = std::max(bounds.sup_b, c.b.cwiseAbs().maxCoeff());
      bounds.sup_Q = std::max(bounds.sup_Q, std::abs(c.Q));
    }
  }
  return bounds;
}

}  // namespace cmcwb
