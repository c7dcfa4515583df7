#include "cmcwb/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>

#include "cmcwb/errors.hpp"
#include "cmcwb/parallel.hpp"

namespace cmcwb {

namespace {

double clamp01(double u) { return std::clamp(u, 0.0, 1.0); }

double smoothstep_d1(double lo, double hi, double x) {
  const double w = hi - lo;
  const double u = (x - lo) / w;
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return 30.0 * u * u * (u - 1.0) * (u - 1.0) / w;
}

double smoothstep_d2(double lo, double hi, double x) {
  const double w = hi - lo;
  const double u = (x - lo) / w;
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return 60.0 * u * (u - 1.0) * (2.0 * u - 1.0) / (w * w);
}

PerturbationVector negated(const PerturbationVector& a) {
  PerturbationVector b;
  b.aT = -a.aT;
  b.aR = -a.aR;
  b.aD = -a.aD;
  return b;
}

// Triangulation of a structured (ns x ntheta) tube grid, closed in theta.
TriangleMesh tube_mesh(int ns, int ntheta,
                       const std::function<Eigen::Vector3d(int, int)>& vertex) {
  require(ns >= 2 && ntheta >= 3, ErrorCode::InvalidParameter,
          "assembly: mesh needs ns >= 2 and ntheta >= 3");
  TriangleMesh mesh;
  mesh.vertices.resize(static_cast<long>(ns) * ntheta, 3);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < ntheta; ++j)
      mesh.vertices.row(static_cast<long>(i) * ntheta + j) = vertex(i, j).transpose();
  mesh.faces.resize(2L * (ns - 1) * ntheta, 3);
  long f = 0;
  for (int i = 0; i + 1 < ns; ++i) {
    for (int j = 0; j < ntheta; ++j) {
      const int jn = (j + 1) % ntheta;
      const int a = i * ntheta + j;
      const int b = (i + 1) * ntheta + j;
      const int c = (i + 1) * ntheta + jn;
      const int d = i * ntheta + jn;
      mesh.faces.row(f++) << a, b, c;
      mesh.faces.row(f++) << a, c, d;
    }
  }
  return mesh;
}

double trapezoid_weight(int j, int n) { return (j == 0 || j == n - 1) ? 0.5 : 1.0; }

}  // namespace

double smoothstep_quintic(double lo, double hi, double x) {
  require(hi > lo, ErrorCode::InvalidParameter, "assembly: smoothstep needs hi > lo");
  const double u = clamp01((x - lo) / (hi - lo));
  return u * u * u * (u * (6.0 * u - 15.0) + 10.0);
}

Eigen::Vector3d check_balancing(const std::vector<EndConfiguration>& ends) {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& end : ends) sum += end.tau * end.tau * end.axis;
  return sum;
}

BalancedEnd balance_third_end(double tau1, const Eigen::Vector3d& c1, double tau2,
                              const Eigen::Vector3d& c2) {
  require(tau1 > 0.0 && tau1 <= 1.0 && tau2 > 0.0 && tau2 <= 1.0, ErrorCode::InvalidParameter,
          "assembly: neck parameters must lie in (0, 1]");
  const Eigen::Vector3d v = tau1 * tau1 * c1 + tau2 * tau2 * c2;
  const double n = v.norm();
  require(n > 1e-14, ErrorCode::NoRoot,
          "assembly: the two ends already balance; no third end closes them");
  require(n <= 1.0, ErrorCode::NoRoot,
          "assembly: closing the balance needs a neck parameter above 1");
  BalancedEnd out;
  out.tau = std::sqrt(n);
  out.axis = -v / n;
  return out;
}

TriangleMesh delaunay_core_mesh(const IsothermalProfile& profile, double s_begin, double s_end,
                                int ns, int ntheta) {
  require(s_end > s_begin, ErrorCode::InvalidParameter, "assembly: core window must be ordered");
  const double ds = (s_end - s_begin) / (ns - 1);
  const double dth = 2.0 * M_PI / ntheta;
  return tube_mesh(ns, ntheta, [&](int i, int j) {
    return profile.position(s_begin + i * ds, j * dth);
  });
}

TriangleMesh chart_mesh(const SurfaceChart& chart, double s_begin, double s_end, int ns,
                        int ntheta) {
  require(s_end > s_begin, ErrorCode::InvalidParameter, "assembly: mesh window must be ordered");
  const double ds = (s_end - s_begin) / (ns - 1);
  const double dth = 2.0 * M_PI / ntheta;
  return tube_mesh(ns, ntheta,
                   [&](int i, int j) { return chart.position(s_begin + i * ds, j * dth); });
}

void write_obj(std::ostream& out, const TriangleMesh& mesh) {
  char line[128];
  for (long i = 0; i < mesh.vertices.rows(); ++i) {
    std::snprintf(line, sizeof(line), "v %.17g %.17g %.17g\n", mesh.vertices(i, 0),
                  mesh.vertices(i, 1), mesh.vertices(i, 2));
    out << line;
  }
  for (long f = 0; f < mesh.faces.rows(); ++f) {
    std::snprintf(line, sizeof(line), "f %d %d %d\n", mesh.faces(f, 0) + 1, mesh.faces(f, 1) + 1,
                  mesh.faces(f, 2) + 1);
    out << line;
  }
}

BlendedEndChart::BlendedEndChart(const IsothermalProfile& base, const EndConfiguration& end,
                                 double s_reach, double eta)
    : BlendedEndChart(base, end, make_perturbed(base, end.pert, eta), s_reach) {}

BlendedEndChart::BlendedEndChart(const IsothermalProfile& base, const EndConfiguration& end,
                                 PerturbedDelaunay perturbed, double s_reach)
    : base_(base), end_(end), perturbed_(std::move(perturbed)), s_reach_(s_reach) {
  require(std::abs(end_.orientation) == 1.0, ErrorCode::InvalidParameter,
          "assembly: end orientation must be +1 or -1");
  require(s_reach_ > end_.s0 + 1.0, ErrorCode::InvalidParameter,
          "assembly: reach must extend past the blend annulus");
  if (!end_.decay.empty())
    require(end_.decay.x0() <= 0.0 && end_.decay.x1() >= s_reach_ + 0.02,
            ErrorCode::InvalidParameter,
            "assembly: decay table must cover the end window");
  double kmax = 0.0;
  const int nk = 129;
  for (int i = 0; i < nk; ++i) {
    const double s = s_reach_ * i / (nk - 1);
    for (int j = 0; j < 4; ++j) {
      const Eigen::Vector2d k = principal_curvatures(frame(s, j * M_PI / 2.0));
      kmax = std::max(kmax, k.cwiseAbs().maxCoeff());
    }
  }
  max_kappa_ = kmax;
}

Eigen::Vector3d BlendedEndChart::base_position(double s, double theta) const {
  const double sb = end_.s_attach + end_.orientation * s;
  Eigen::Vector3d y = base_.position(sb, theta);
  if (!end_.decay.empty()) y += end_.decay.eval(s) * base_.normal(sb, theta);
  return y;
}

Eigen::Vector3d BlendedEndChart::graph_position(double s, double theta) const {
  const double sb = end_.s_attach + end_.orientation * s;
  Eigen::Vector3d z = perturbed_position(perturbed_, sb, theta);
  if (!end_.decay.empty())
    z += end_.decay.eval(s) * (perturbed_.rotation * perturbed_.shifted.normal(sb, theta));
  return z;
}

Eigen::Vector3d BlendedEndChart::position(double s, double theta) const {
  const double xi = end_.xi(s);
  if (xi <= 0.0) return base_position(s, theta);
  const Eigen::Vector3d z = graph_position(s, theta);
  if (xi >= 1.0) return z;
  const Eigen::Vector3d y = base_position(s, theta);
  return y + xi * (z - y);
}

GluedSurface build_glued_surface(const IsothermalProfile& base,
                                 std::vector<EndConfiguration> ends, TriangleMesh core,
                                 const GluedSurfaceOptions& options) {
  require(!ends.empty(), ErrorCode::InvalidParameter, "assembly: configuration needs ends");
  for (const auto& end : ends)
    require(std::abs(end.axis.norm() - 1.0) <= 1e-9, ErrorCode::InvalidParameter,
            "assembly: end axes must be unit vectors");
  for (size_t i = 0; i < ends.size(); ++i)
    for (size_t j = i + 1; j < ends.size(); ++j)
      require(ends[i].axis.dot(ends[j].axis) < 1.0 - options.parallel_tol,
              ErrorCode::ParallelEnds,
              "assembly: two ends share an axis in positive sense");

  GluedSurface glued;
  glued.base = base;
  glued.core = std::move(core);
  glued.ends = std::move(ends);
  glued.charts.reserve(glued.ends.size());
  for (const auto& end : glued.ends)
    glued.charts.emplace_back(base, end, options.s_reach, options.eta);

  for (const auto& chart : glued.charts) {
    const auto& end = chart.end();
    EndCurvatureReport report;
    const int ns = options.survey_ns;
    const int nth = options.survey_ntheta;
    for (int i = 0; i < ns; ++i) {
      const double u = static_cast<double>(i) / (ns - 1);
      const double sa = end.s0 + u;                                   // annulus node
      const double so = end.s0 + 1.0 + u * (options.s_reach - end.s0 - 1.0);  // outside node
      for (int j = 0; j < nth; ++j) {
        const double th = 2.0 * M_PI * j / nth;
        report.annulus = std::max(report.annulus,
                                  std::abs(chart.frame(sa, th).mean_curvature - 1.0));
        report.outside = std::max(report.outside,
                                  std::abs(chart.frame(so, th).mean_curvature - 1.0));
      }
    }
    glued.curvature.push_back(report);
  }
  return glued;
}

CurvatureDeviation curvature_deviation(const IsothermalProfile& base,
                                       const EndConfiguration& end, double window, int ns,
                                       int ntheta, double eta) {
  require(window > 0.0 && ns >= 2 && ntheta >= 1, ErrorCode::InvalidParameter,
          "assembly: deviation survey needs a window and a grid");
  EndConfiguration plus = end;
  EndConfiguration minus = end;
  minus.pert = negated(end.pert);
  const double reach = end.s0 + window + 0.5;
  const BlendedEndChart cp(base, plus, reach, eta);
  const BlendedEndChart cm(base, minus, reach, eta);

  std::unique_ptr<TauDerivatives> derivs;
  if (end.pert.aD != 0.0) {
    const double periods = (std::abs(end.s_attach) + reach) / base.s_tau + 1.5;
    derivs = std::make_unique<TauDerivatives>(make_tau_derivatives(base, 1e-4, periods));
  }

  // J[xi Phi_d] by fourth-order differences of F(s, th) = xi(s) Phi_d(sb, th)
  // in both arguments; w and |A|^2 taken on the base at the foot parameter.
  const double fd = 1e-3;
  auto F = [&](double s, double th) {
    const double sb = end.s_attach + end.orientation * s;
    return end.xi(s) * linear_combination(base, derivs.get(), end.pert, sb, th);
  };
  auto model = [&](double s, double th) {
    const double sb = end.s_attach + end.orientation * s;
    const double w = base.w_at(sb);
    const double f0 = F(s, th);
    const double fss = (-F(s + 2 * fd, th) + 16.0 * F(s + fd, th) - 30.0 * f0 +
                        16.0 * F(s - fd, th) - F(s - 2 * fd, th)) /
                       (12.0 * fd * fd);
    const double ftt = (-F(s, th + 2 * fd) + 16.0 * F(s, th + fd) - 30.0 * f0 +
                        16.0 * F(s, th - fd) - F(s, th - 2 * fd)) /
                       (12.0 * fd * fd);
    return (fss + ftt) / (w * w) + base.normA2_at(sb) * f0;
  };

  CurvatureDeviation out;
  for (int i = 0; i < ns; ++i) {
    const double s = end.s0 + window * (i + 1) / static_cast<double>(ns);
    for (int j = 0; j < ntheta; ++j) {
      const double th = 2.0 * M_PI * j / ntheta;
      const double hp = cp.frame(s, th).mean_curvature;
      const double hm = cm.frame(s, th).mean_curvature;
      const double lin = model(s, th);
      out.sup_odd = std::max(out.sup_odd, std::abs(0.5 * (hp - hm) - lin));
      out.sup_raw = std::max(out.sup_raw, std::abs(hp - 1.0));
      out.sup_linear = std::max(out.sup_linear, std::abs(lin));
    }
  }
  return out;
}

StripInterpolant::StripInterpolant(const StripFunction& phi) {
  require(phi.ns() >= 4 && phi.nt() >= 4, ErrorCode::InvalidParameter,
          "assembly: strip interpolant needs a 4 x 4 grid at least");
  s_tau_ = phi.s_tau;
  t_box_ = phi.t_box;
  rows_.reserve(phi.nt());
  for (int j = 0; j < phi.nt(); ++j) {
    Eigen::VectorXd col = phi.values.col(j);
    const double wrap = 0.5 * (col(0) + col(col.size() - 1));
    col(0) = wrap;
    col(col.size() - 1) = wrap;
    rows_.push_back(CubicSpline::create(0.0, s_tau_, col, CubicSpline::Boundary::Periodic));
  }
}

FieldJet StripInterpolant::jet(double s, double t) const {
  require(!empty(), ErrorCode::InvalidParameter, "assembly: empty strip interpolant");
  const int nt = static_cast<int>(rows_.size());
  Eigen::VectorXd v(nt), d1(nt), d2(nt);
  for (int j = 0; j < nt; ++j) {
    v(j) = rows_[j].eval(s);
    d1(j) = rows_[j].deriv(s);
    d2(j) = rows_[j].deriv2(s);
  }
  const CubicSpline V = CubicSpline::create(-t_box_, t_box_, v);
  const CubicSpline D1 = CubicSpline::create(-t_box_, t_box_, d1);
  const CubicSpline D2 = CubicSpline::create(-t_box_, t_box_, d2);
  const double tc = std::clamp(t, -t_box_, t_box_);
  FieldJet out;
  out.v = V.eval(tc);
  out.ds = D1.eval(tc);
  out.dss = D2.eval(tc);
  out.dt = V.deriv(tc);
  out.dtt = V.deriv2(tc);
  out.dst = D1.deriv(tc);
  return out;
}

double ApproximateSolution::zeta(double s) const {
  if (!gated) return 1.0;
  return smoothstep_quintic(s0_gate + 2.0, s0_gate + 3.0, s);
}

double ApproximateSolution::shift(double s) const {
  double h = h0.empty() ? 0.0 : h0.eval(s);
  if (!h_end_spline.empty()) h += zeta(s) * h_end_spline.eval(s);
  return h;
}

double ApproximateSolution::u0(double s, double t) const {
  return profile.U_at(t) + eps * eps * A2(s) * profile.psi0_at(t);
}

double ApproximateSolution::value(double s, double t) const {
  double u = u0(s, t);
  if (!phi_jet.empty()) {
    const double z = zeta(s);
    if (z != 0.0) u += z * phi_jet.jet(s, t).v;
  }
  return u;
}

double ApproximateSolution::nodal_t(double s) const {
  double lo = -1.0, hi = 1.0;
  double flo = value(s, lo), fhi = value(s, hi);
  require(flo * fhi < 0.0, ErrorCode::NoRoot, "assembly: no sign change across the interface");
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = value(s, mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  return 0.5 * (lo + hi);
}

ApproximateSolution build_u0(const IsothermalProfile& model, double eps,
                             const ProfileSolution& profile) {
  require(std::abs(profile.eps - eps) <= 1e-14, ErrorCode::InvalidParameter,
          "assembly: profile solved at a different eps");
  ApproximateSolution u;
  u.eps = eps;
  u.profile = profile;
  u.model = model;
  u.s_begin = 0.0;
  u.s_end = model.s_tau;
  auto pm = std::make_shared<IsothermalProfile>(model);
  u.A2 = [pm](double s) { return pm->normA2_at(s); };
  u.dA2 = [pm](double s) {
    return -2.0 * std::exp(-4.0 * pm->sigma_at(s)) * pm->dsigma_at(s);
  };
  u.d2A2 = [pm](double s) {
    const double sp = pm->dsigma_at(s);
    return std::exp(-4.0 * pm->sigma_at(s)) * (8.0 * sp * sp - 2.0 * pm->d2sigma_exact(s));
  };
  u.trA3 = [pm](double s) { return pm->trA3_at(s); };
  u.meanH = [](double) { return 1.0; };
  u.w2 = [pm](double s) {
    const double w = pm->w_at(s);
    return w * w;
  };
  return u;
}

ApproximateSolution build_u0(const SurfaceChart& chart, const IsothermalProfile& model,
                             double eps, const ProfileSolution& profile, double s_begin,
                             double s_end, int samples) {
  require(s_end > s_begin && samples >= 16, ErrorCode::InvalidParameter,
          "assembly: chart window must be ordered with enough samples");
  ApproximateSolution u = build_u0(model, eps, profile);
  u.chart = &chart;
  u.s_begin = s_begin;
  u.s_end = s_end;

  const double margin = 0.02 * (s_end - s_begin);
  const double a = s_begin - margin, b = s_end + margin;
  Eigen::VectorXd a2(samples), tr3(samples), hh(samples), ww(samples);
  parallel_for(
      samples,
      [&](long i) {
        const SurfaceFrame fr = chart.frame(a + (b - a) * i / (samples - 1), 0.0);
        a2(i) = fr.normA2;
        tr3(i) = fr.trA3;
        hh(i) = fr.mean_curvature;
        ww(i) = fr.metric(0, 0);
      },
      default_thread_count());
  auto sa2 = std::make_shared<CubicSpline>(CubicSpline::create(a, b, a2));
  auto str3 = std::make_shared<CubicSpline>(CubicSpline::create(a, b, tr3));
  auto sh = std::make_shared<CubicSpline>(CubicSpline::create(a, b, hh));
  auto sw = std::make_shared<CubicSpline>(CubicSpline::create(a, b, ww));
  u.A2 = [sa2](double s) { return sa2->eval(s); };
  u.dA2 = [sa2](double s) { return sa2->deriv(s); };
  u.d2A2 = [sa2](double s) { return sa2->deriv2(s); };
  u.trA3 = [str3](double s) { return str3->eval(s); };
  u.meanH = [sh](double s) { return sh->eval(s); };
  u.w2 = [sw](double s) { return sw->eval(s); };
  return u;
}

namespace {

// Shift value with two s-derivatives, the zeta gating folded in.
struct ShiftJet {
  double h = 0.0, hp = 0.0, hpp = 0.0;
};

ShiftJet shift_jet(const ApproximateSolution& u, double s) {
  ShiftJet out;
  if (!u.h0.empty()) {
    out.h += u.h0.eval(s);
    out.hp += u.h0.deriv(s);
    out.hpp += u.h0.deriv2(s);
  }
  if (!u.h_end_spline.empty()) {
    const double z = u.zeta(s);
    double zp = 0.0, zpp = 0.0;
    if (u.gated) {
      zp = smoothstep_d1(u.s0_gate + 2.0, u.s0_gate + 3.0, s);
      zpp = smoothstep_d2(u.s0_gate + 2.0, u.s0_gate + 3.0, s);
    }
    const double h = u.h_end_spline.eval(s);
    const double hp = u.h_end_spline.deriv(s);
    const double hpp = u.h_end_spline.deriv2(s);
    out.h += z * h;
    out.hp += zp * h + z * hp;
    out.hpp += zpp * h + 2.0 * zp * hp + z * hpp;
  }
  return out;
}

// Full field jet of u = U + eps^2 |A|^2 psi0 + zeta phi at (s, t).
FieldJet solution_jet(const ApproximateSolution& u, double s, double t) {
  const double e2 = u.eps * u.eps;
  const double U = u.profile.U_at(t), dU = u.profile.dU_at(t), d2U = u.profile.d2U_at(t);
  const double p = u.profile.psi0_at(t), dp = u.profile.dpsi0_at(t),
               d2p = u.profile.d2psi0_at(t);
  const double a2 = u.A2(s), da2 = u.dA2(s), dd2 = u.d2A2(s);
  FieldJet J;
  J.v = U + e2 * a2 * p;
  J.ds = e2 * da2 * p;
  J.dss = e2 * dd2 * p;
  J.dt = dU + e2 * a2 * dp;
  J.dtt = d2U + e2 * a2 * d2p;
  J.dst = e2 * da2 * dp;
  if (!u.phi_jet.empty()) {
    const double z = u.zeta(s);
    double zp = 0.0, zpp = 0.0;
    if (u.gated) {
      zp = smoothstep_d1(u.s0_gate + 2.0, u.s0_gate + 3.0, s);
      zpp = smoothstep_d2(u.s0_gate + 2.0, u.s0_gate + 3.0, s);
    }
    if (z != 0.0 || zp != 0.0 || zpp != 0.0) {
      const FieldJet P = u.phi_jet.jet(s, t);
      J.v += z * P.v;
      J.ds += zp * P.v + z * P.ds;
      J.dss += zpp * P.v + 2.0 * zp * P.ds + z * P.dss;
      J.dt += z * P.dt;
      J.dtt += z * P.dtt;
      J.dst += zp * P.dt + z * P.dst;
    }
  }
  return J;
}

CubicSpline sample_shift_spline(const ApproximateSolution& u, double a, double b) {
  const int n = 4097;
  Eigen::VectorXd h(n);
  for (int i = 0; i < n; ++i) h(i) = u.shift(a + (b - a) * i / (n - 1));
  return CubicSpline::create(a, b, h);
}

}  // namespace

double WeightedGridFunction::s(int i) const {
  return s_begin + (s_end - s_begin) * i / (values.rows() - 1.0);
}

double WeightedGridFunction::t(int j) const {
  return -t_box + 2.0 * t_box * j / (values.cols() - 1.0);
}

double WeightedGridFunction::sup() const {
  return values.size() ? values.cwiseAbs().maxCoeff() : 0.0;
}

double WeightedGridFunction::weighted_sup() const { return weighted_sup(0.0); }

double WeightedGridFunction::weighted_sup(double a) const {
  return weighted_sup(a, s_begin, s_end);
}

double WeightedGridFunction::weighted_sup(double a, double s_from, double s_to) const {
  double sup = 0.0;
  for (long i = 0; i < values.rows(); ++i) {
    const double si = s(static_cast<int>(i));
    if (si < s_from || si > s_to) continue;
    const double ws = std::exp(a * si);
    for (long j = 0; j < values.cols(); ++j)
      sup = std::max(sup,
                     std::abs(values(i, j)) * ws *
                         std::pow(std::cosh(t(static_cast<int>(j))), gamma));
  }
  return sup;
}

ResidualReport residual(const ApproximateSolution& approx, const ResidualOptions& opt) {
  require(opt.ns >= 8 && opt.nt >= 8 && opt.t_box > 0.0, ErrorCode::InvalidParameter,
          "assembly: residual grid too small");
  require(opt.t_box <= approx.profile.t_box, ErrorCode::InvalidParameter,
          "assembly: residual box exceeds the profile table");
  const double eps = approx.eps;
  const auto& prof = approx.profile;

  DelaunayChart model_chart(approx.model);
  const SurfaceChart& chart = approx.chart ? *approx.chart : model_chart;
  const CubicSpline shift = sample_shift_spline(approx, approx.s_begin - 0.05,
                                                approx.s_end + 0.05);
  const FermiChart fermi(chart, eps, 0.0, shift);

  Eigen::VectorXd s_nodes(opt.ns), t_nodes(opt.nt);
  for (int i = 0; i < opt.ns; ++i)
    s_nodes(i) = approx.s_begin + (approx.s_end - approx.s_begin) * i / (opt.ns - 1.0);
  for (int j = 0; j < opt.nt; ++j) t_nodes(j) = -opt.t_box + 2.0 * opt.t_box * j / (opt.nt - 1.0);

  auto jet = [&](double s, double t) { return solution_jet(approx, s, t); };
  const Eigen::MatrixXd lap = apply_laplacian_expanded(fermi, jet, s_nodes, t_nodes, opt.m,
                                                       opt.threads, opt.symbol_cap);

  auto grid = [&](void) {
    WeightedGridFunction g;
    g.s_begin = approx.s_begin;
    g.s_end = approx.s_end;
    g.t_box = opt.t_box;
    g.gamma = opt.gamma;
    g.values.setZero(opt.ns, opt.nt);
    return g;
  };
  ResidualReport report;
  report.total = grid();
  report.jacobi_term = grid();
  report.trA3_term = grid();
  report.lambda_term = grid();
  report.curvature_term = grid();
  report.remainder = grid();

  const double e2 = eps * eps;
  for (int i = 0; i < opt.ns; ++i) {
    const double s = s_nodes(i);
    const ShiftJet hs = shift_jet(approx, s);
    const double a2 = approx.A2(s);
    const double tr3 = approx.trA3(s);
    const double dH = approx.meanH(s) - 1.0;
    const double w2 = approx.w2(s);
    for (int j = 0; j < opt.nt; ++j) {
      const double t = t_nodes(j);
      const double dU = prof.dU_at(t);
      const double u = approx.value(s, t);
      report.total.values(i, j) = eps * lap(i, j) + double_well(u) / eps - prof.ell;
      report.jacobi_term.values(i, j) = -e2 * (hs.hpp / w2 + a2 * hs.h) * dU;
      report.trA3_term.values(i, j) = -e2 * tr3 * t * t * dU;
      report.lambda_term.values(i, j) = e2 * prof.lambda * a2 * dU;
      report.curvature_term.values(i, j) = -dH * dU;
      report.remainder.values(i, j) =
          report.total.values(i, j) - report.jacobi_term.values(i, j) -
          report.trA3_term.values(i, j) - report.lambda_term.values(i, j) -
          report.curvature_term.values(i, j);
    }
  }
  report.sup_total = report.total.sup();
  report.weighted_total = report.total.weighted_sup();

  if (opt.exact_branch) {
    // Divergence-form cross-check where the offset stays inside the tube.
    double hsup = 0.0;
    for (int i = 0; i < opt.ns; ++i) hsup = std::max(hsup, std::abs(shift.eval(s_nodes(i))));
    const double box = 0.9 * (fermi.half_width() - e2 * hsup) / eps;
    report.exact_t_box = std::min(box, opt.t_box);
    if (report.exact_t_box > 0.0) {
      AnalyticField field;
      field.value = [&](double s, double t) { return jet(s, t).v; };
      field.ds = [&](double s, double t) { return jet(s, t).ds; };
      field.dss = [&](double s, double t) { return jet(s, t).dss; };
      field.dt = [&](double s, double t) { return jet(s, t).dt; };
      field.dtt = [&](double s, double t) { return jet(s, t).dtt; };
      field.dst = [&](double s, double t) { return jet(s, t).dst; };
      const int cs = 49, ct = 25;
      double gap = 0.0;
      for (int i = 0; i < cs; ++i) {
        const double s = approx.s_begin + (approx.s_end - approx.s_begin) * i / (cs - 1.0);
        for (int j = 0; j < ct; ++j) {
          const double t = -report.exact_t_box + 2.0 * report.exact_t_box * j / (ct - 1.0);
          const LaplacianValue both = apply_laplacian_fermi(fermi, field, s, t, opt.m);
          gap = std::max(gap, std::abs(both.exact - both.expanded));
        }
      }
      report.exact_gap = eps * gap;
    }
  }
  return report;
}

PeriodicSplit periodic_content(const WeightedGridFunction& r, double s_tau, double s_from,
                               int periods) {
  require(periods >= 2, ErrorCode::InvalidParameter, "assembly: need at least two periods");
  require(s_from >= r.s_begin - 1e-12 &&
              s_from + periods * s_tau <= r.s_end + 1e-12,
          ErrorCode::InvalidParameter, "assembly: periodic window leaves the sample");
  const long nt = r.values.cols();
  const int probe = 160;
  PeriodicSplit split;
  for (long j = 0; j < nt; ++j) {
    const CubicSpline col = CubicSpline::create(r.s_begin, r.s_end, r.values.col(j));
    const double wt = std::pow(std::cosh(r.t(static_cast<int>(j))), r.gamma);
    for (int i = 0; i < probe; ++i) {
      const double s = s_from + s_tau * i / probe;
      double mean = 0.0;
      for (int k = 0; k < periods; ++k) mean += col.eval(s + k * s_tau);
      mean /= periods;
      split.periodic = std::max(split.periodic, std::abs(mean) * wt);
      for (int k = 0; k < periods; ++k)
        split.leftover = std::max(split.leftover,
                                  std::abs(col.eval(s + k * s_tau) - mean) * wt);
    }
  }
  return split;
}

TriangleMesh nodal_mesh(const ApproximateSolution& approx, int ns, int ntheta) {
  DelaunayChart model_chart(approx.model);
  const SurfaceChart& chart = approx.chart ? *approx.chart : model_chart;
  const double a = approx.s_begin, b = approx.s_end;
  return tube_mesh(ns, ntheta, [&](int i, int j) {
    const double s = a + (b - a) * i / (ns - 1.0);
    const double th = 2.0 * M_PI * j / ntheta;
    const double z = approx.eps * approx.nodal_t(s) + approx.eps * approx.eps * approx.shift(s);
    const SurfaceFrame fr = chart.frame(s, th);
    return Eigen::Vector3d(fr.point + z * fr.normal);
  });
}

void attach_corrections(ApproximateSolution& u, const EndCorrectionResult& corrections) {
  require(std::abs(u.model.s_tau - corrections.h.s_tau) <= 1e-9, ErrorCode::InvalidParameter,
          "assembly: corrections computed on a different end model");
  u.h_end = corrections.h;
  u.h_end_spline = to_spline(corrections.h);
  u.phi_end = corrections.phi;
  u.phi_jet = StripInterpolant(corrections.phi);
  u.gated = false;
  u.s0_gate = 0.0;
}

void attach_corrections(ApproximateSolution& u, const EndCorrectionResult& corrections,
                        const EndConfiguration& end) {
  attach_corrections(u, corrections);
  u.gated = true;
  u.s0_gate = end.s0;
}

EndCorrectionResult end_corrections(const IsothermalProfile& base, double eps,
                                    const PerturbationVector& d,
                                    const EndCorrectionOptions& opt) {
  require(eps > 0.0 && eps < 1.0, ErrorCode::InvalidParameter,
          "assembly: eps must lie in (0, 1)");
  require(opt.strip_ns >= 9 && opt.strip_ns % 2 == 1, ErrorCode::InvalidParameter,
          "assembly: strip_ns must be odd so the periodic grid shares its nodes");
  require(opt.tol > 0.0 && opt.max_sweeps >= 2, ErrorCode::InvalidParameter,
          "assembly: bad iteration controls");

  EndCorrectionResult R;
  PerturbedDelaunay pert = make_perturbed(base, d, opt.eta);
  R.model = std::move(pert.shifted);
  R.profile = solve_profiles(eps, 1.0);
  const IsothermalProfile& md = R.model;
  const ProfileSolution& prof = R.profile;

  StripOptions sopt;
  sopt.ns = opt.strip_ns;
  sopt.nt = opt.strip_nt;
  sopt.t_box = opt.t_box;
  sopt.gamma = opt.gamma;
  sopt.alpha = opt.alpha;
  const StripSolver solver(md, eps, sopt);
  const DelaunayChart chart(md);

  const int ns = opt.strip_ns, nt = opt.strip_nt;
  auto blank = [&](void) {
    StripFunction f;
    f.s_tau = md.s_tau;
    f.t_box = opt.t_box;
    f.eps = eps;
    f.gamma = opt.gamma;
    f.values.setZero(ns, nt);
    return f;
  };
  StripFunction phi = blank();
  SymmetricPeriodicFunction h;
  h.s_tau = md.s_tau;
  h.values.setZero(ns);

  Eigen::VectorXd s_nodes(ns), t_nodes(nt);
  for (int i = 0; i < ns; ++i) s_nodes(i) = phi.s(i);
  for (int j = 0; j < nt; ++j) t_nodes(j) = phi.t(j);

  // Kernel normalizer <U', v*'> on the strip t grid, trapezoid to match
  // kernel_inner_products.
  Eigen::VectorXd dU(nt), vp(nt), Uv(nt), ps(nt);
  for (int j = 0; j < nt; ++j) {
    dU(j) = prof.dU_at(t_nodes(j));
    vp(j) = heteroclinic_prime(t_nodes(j));
    Uv(j) = prof.U_at(t_nodes(j));
    ps(j) = prof.psi0_at(t_nodes(j));
  }
  const double ht = phi.ht();
  double c_U = 0.0;
  for (int j = 0; j < nt; ++j) c_U += trapezoid_weight(j, nt) * ht * dU(j) * vp(j);

  Eigen::VectorXd A2(ns), w2(ns);
  for (int i = 0; i < ns; ++i) {
    A2(i) = md.normA2_at(s_nodes(i));
    const double w = md.w_at(s_nodes(i));
    w2(i) = w * w;
  }

  const double e2 = eps * eps;
  ApproximateSolution work = build_u0(md, eps, prof);

  // Honest residual of the current iterate on an arbitrary node set.
  auto evaluate = [&](const Eigen::VectorXd& sn, const Eigen::VectorXd& tn) {
    const FermiChart fermi(chart, eps, 0.0, to_spline(h));
    auto jet = [&](double s, double t) { return solution_jet(work, s, t); };
    const Eigen::MatrixXd lap =
        apply_laplacian_expanded(fermi, jet, sn, tn, 0, opt.threads, opt.symbol_cap);
    Eigen::MatrixXd E(sn.size(), tn.size());
    for (long i = 0; i < sn.size(); ++i)
      for (long j = 0; j < tn.size(); ++j) {
        const double u = work.value(sn(i), tn(j));
        E(i, j) = eps * lap(i, j) + double_well(u) / eps - prof.ell;
      }
    return E;
  };
  auto evaluate_grid = [&]() {
    StripFunction E = blank();
    const FermiChart fermi(chart, eps, 0.0, to_spline(h));
    auto jet = [&](double s, double t) { return solution_jet(work, s, t); };
    const Eigen::MatrixXd lap =
        apply_laplacian_expanded(fermi, jet, s_nodes, t_nodes, 0, opt.threads, opt.symbol_cap);
    for (int i = 0; i < ns; ++i)
      for (int j = 0; j < nt; ++j) {
        // On grid nodes the interpolant reproduces the table, so the value
        // assembles directly.
        const double u = Uv(j) + e2 * A2(i) * ps(j) + phi.values(i, j);
        E.values(i, j) = eps * lap(i, j) + double_well(u) / eps - prof.ell;
      }
    // The model problem is mirror symmetric; the sigma table's integration
    // drift is not. Both solvers operate in the symmetric class, so the
    // sweep works with the symmetric part; exit diagnostics keep the raw
    // evaluation.
    for (int i = 0; 2 * i < ns; ++i)
      for (int j = 0; j < nt; ++j) {
        const double avg = 0.5 * (E.values(i, j) + E.values(ns - 1 - i, j));
        E.values(i, j) = avg;
        E.values(ns - 1 - i, j) = avg;
      }
    return E;
  };

  double prev = std::numeric_limits<double>::infinity();
  int stale = 0;
  bool converged = false;
  for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
    StripFunction E = evaluate_grid();
    const StripSolveReport srep = solver.solve(project_Z(E));
    phi.values -= srep.phi.values;
    work.phi_end = phi;
    work.phi_jet = StripInterpolant(phi);

    E = evaluate_grid();
    const Eigen::VectorXd kip = kernel_inner_products(E);
    SymmetricPeriodicFunction g;
    g.s_tau = md.s_tau;
    g.values = (w2.array() * kip.array() / (e2 * c_U)).matrix();
    const PeriodicSolveReport prep = solve_periodic(md, g);
    h.values += prep.h.values;

    SweepTrace trace;
    trace.kernel_residual = kip.cwiseAbs().maxCoeff();
    trace.increment_h = prep.h.values.cwiseAbs().maxCoeff();
    trace.increment_phi = weighted_sup(srep.phi, opt.gamma);
    trace.blended = trace.increment_h + std::pow(eps, opt.alpha - 3.0) * trace.increment_phi;
    trace.contraction = std::isfinite(prev) && prev > 0.0 ? trace.blended / prev : 0.0;
    R.trace.push_back(trace);
    R.sweeps = sweep;

    if (trace.blended < opt.tol) {
      converged = true;
      break;
    }
    if (trace.contraction >= 1.0 && sweep > 1) {
      if (++stale >= opt.grace_sweeps) {
        char msg[160];
        std::snprintf(msg, sizeof(msg),
                      "assembly: end correction stopped contracting (factor %.3g at sweep %d)",
                      trace.contraction, sweep);
        throw Error(ErrorCode::NoContraction, msg);
      }
    } else {
      stale = 0;
    }
    prev = trace.blended;
  }
  require(converged, ErrorCode::NonConvergence,
          "assembly: end correction still above tol after max_sweeps");

  R.h = h;
  R.phi = phi;
  R.final_increment = R.trace.back().blended;
  for (size_t k = 2; k < R.trace.size(); ++k)
    R.contraction_max = std::max(R.contraction_max, R.trace[k].contraction);
  R.h_sup = h.values.cwiseAbs().maxCoeff();
  R.phi_weighted = weighted_sup(phi, opt.gamma);
  R.orthogonality = kernel_inner_products(phi).cwiseAbs().maxCoeff();

  const Eigen::MatrixXd Eg = evaluate(s_nodes, t_nodes);
  R.residual_on_grid = Eg.cwiseAbs().maxCoeff();
  Eigen::VectorXd s_st(ns - 1), t_st(nt - 1);
  for (int i = 0; i + 1 < ns; ++i) s_st(i) = 0.5 * (s_nodes(i) + s_nodes(i + 1));
  for (int j = 0; j + 1 < nt; ++j) t_st(j) = 0.5 * (t_nodes(j) + t_nodes(j + 1));
  const Eigen::MatrixXd Es = evaluate(s_st, t_st);
  double wsup = 0.0;
  for (long i = 0; i < Es.rows(); ++i)
    for (long j = 0; j < Es.cols(); ++j)
      wsup = std::max(wsup, std::abs(Es(i, j)) * std::pow(std::cosh(t_st(j)), opt.gamma));
  R.residual_staggered = wsup;
  return R;
}

}  // namespace cmcwb
