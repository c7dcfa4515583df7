#include "cmcwb/delaunay.hpp"

#include <cmath>
#include <numbers>

#include "cmcwb/errors.hpp"
#include "cmcwb/ode.hpp"

namespace cmcwb {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMaxSearch = 400.0;  // generous bound for one period at any tau

void check_family_parameters(double tau, double grid_step) {
  require(tau > 0.0 && tau <= 1.0, ErrorCode::InvalidParameter,
          "tau must lie in (0, 1], got " + std::to_string(tau));
  require(grid_step > 0.0 && grid_step <= 0.05, ErrorCode::InvalidParameter,
          "grid_step must lie in (0, 0.05], got " + std::to_string(grid_step));
}

// Locates the first rising zero of y[1] (state returns to its minimum-radius
// configuration); this is the period of the planar system.
double locate_period(const OdeRhs& rhs, const Eigen::VectorXd& y0) {
  OdeEvent ev;
  ev.g = [](double, const Eigen::VectorXd& y) { return y[1]; };
  ev.direction = +1;
  ev.terminal = true;
  OdeOptions opt;
  opt.h_max = 0.05;
  const OdeResult res = integrate_sampled(rhs, y0, {0.0, kMaxSearch}, opt, {ev});
  require(res.terminated_by_event && !res.event_t.empty(), ErrorCode::NonConvergence,
          "period event not found");
  return res.event_t.front();
}

int even_interval_count(double length, double grid_step) {
  int n = static_cast<int>(std::llround(length / grid_step));
  if (n < 8) n = 8;
  if (n % 2) ++n;
  return n;
}

}  // namespace

MeridianSolution solve_meridian(double tau, double grid_step) {
  check_family_parameters(tau, grid_step);
  MeridianSolution out;
  out.tau = tau;
  out.grid_step = grid_step;
  out.eps_neck = 1.0 - std::sqrt(1.0 - tau * tau);

  if (tau == 1.0) {
    out.degenerate = true;
    out.period = kTwoPi;
    const int n = even_interval_count(out.period, grid_step);
    out.rho = CubicSpline::create(0.0, out.period, Eigen::VectorXd::Ones(n + 1),
                                  CubicSpline::Boundary::Periodic);
    return out;
  }

  const OdeRhs rhs = [](double, const Eigen::VectorXd& y) {
    Eigen::VectorXd dy(2);
    const double q = 1.0 + y[1] * y[1];
    dy[0] = y[1];
    dy[1] = q / y[0] - q * std::sqrt(q);
    return dy;
  };
  Eigen::VectorXd y0(2);
  y0 << out.eps_neck, 0.0;

  out.period = locate_period(rhs, y0);

  const int n = even_interval_count(out.period, grid_step);
  std::vector<double> samples(n + 1);
  for (int i = 0; i <= n; ++i) samples[i] = out.period * i / n;
  const OdeResult res = integrate_sampled(rhs, y0, samples);
  require(static_cast<int>(res.y.size()) == n + 1, ErrorCode::NonConvergence,
          "meridian sampling terminated early");

  Eigen::VectorXd rho(n + 1);
  for (int i = 0; i <= n; ++i) rho[i] = res.y[i][0];
  require(std::abs(rho[n] - rho[0]) <= 1e-9 * (1.0 + std::abs(rho[0])),
          ErrorCode::NonConvergence, "meridian table failed to close up");
  rho[n] = rho[0];
  out.rho = CubicSpline::create(0.0, out.period, rho, CubicSpline::Boundary::Periodic);
  return out;
}

double IsothermalProfile::d2sigma_exact(double s) const {
  return -(tau * tau / 2.0) * std::sinh(2.0 * sigma_at(s));
}

double IsothermalProfile::w_at(double s) const { return tau * std::exp(sigma_at(s)); }

double IsothermalProfile::kappa1_at(double s) const {
  return 0.5 * (1.0 - std::exp(-2.0 * sigma_at(s)));
}

double IsothermalProfile::kappa2_at(double s) const {
  return 0.5 * (1.0 + std::exp(-2.0 * sigma_at(s)));
}

double IsothermalProfile::normA2_at(double s) const {
  const double k1 = kappa1_at(s), k2 = kappa2_at(s);
  return k1 * k1 + k2 * k2;
}

double IsothermalProfile::trA3_at(double s) const {
  const double k1 = kappa1_at(s), k2 = kappa2_at(s);
  return k1 * k1 * k1 + k2 * k2 * k2;
}

Eigen::Vector3d IsothermalProfile::position(double s, double theta) const {
  const double w = w_at(s);
  return {w * std::cos(theta), w * std::sin(theta), k_at(s)};
}

Eigen::Vector3d IsothermalProfile::normal(double s, double theta) const {
  const double w = w_at(s);
  const double dk = dk_at(s);
  const double dw = w * dsigma_at(s);
  // |(-dk, dw)| = w by the first integral; normalize anyway to shed table noise.
  Eigen::Vector3d nu(-dk * std::cos(theta), -dk * std::sin(theta), dw);
  return nu / nu.norm();
}

IsothermalProfile build_isothermal(const MeridianSolution& meridian, double grid_step) {
  check_family_parameters(meridian.tau, grid_step);
  IsothermalProfile out;
  out.tau = meridian.tau;
  out.eps_neck = meridian.eps_neck;
  out.grid_step = grid_step;
  out.degenerate = meridian.degenerate;

  if (meridian.degenerate) {
    out.period_s = kTwoPi;
    out.s_tau = 2.0 * kTwoPi;
    out.period_arc = kTwoPi;
    out.k_slope = 1.0;
    const int n = even_interval_count(out.s_tau, grid_step);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n + 1);
    out.sigma = CubicSpline::create(0.0, out.s_tau, zero, CubicSpline::Boundary::Periodic);
    out.dsigma = out.sigma;
    out.k_wobble = out.sigma;
    return out;
  }

  const double tau = out.tau;
  const OdeRhs rhs = [tau](double, const Eigen::VectorXd& y) {
    Eigen::VectorXd dy(3);
    dy[0] = y[1];
    dy[1] = -(tau * tau / 2.0) * std::sinh(2.0 * y[0]);
    dy[2] = (tau * tau / 2.0) * (1.0 + std::exp(2.0 * y[0]));
    return dy;
  };
  Eigen::VectorXd y0(3);
  y0 << std::log(out.eps_neck / tau), 0.0, 0.0;

  out.period_s = locate_period(rhs, y0);
  out.s_tau = 2.0 * out.period_s;

  const int n = even_interval_count(out.s_tau, grid_step);
  std::vector<double> samples(n + 1);
  for (int i = 0; i <= n; ++i) samples[i] = out.s_tau * i / n;
  const OdeResult res = integrate_sampled(rhs, y0, samples);
  require(static_cast<int>(res.y.size()) == n + 1, ErrorCode::NonConvergence,
          "isothermal sampling terminated early");

  Eigen::VectorXd sg(n + 1), dsg(n + 1), wob(n + 1);
  const double k_end = res.y[n][2];
  out.k_slope = k_end / out.s_tau;
  out.period_arc = 0.5 * k_end;
  for (int i = 0; i <= n; ++i) {
    sg[i] = res.y[i][0];
    dsg[i] = res.y[i][1];
    wob[i] = res.y[i][2] - out.k_slope * samples[i];
  }
  require(std::abs(sg[n] - sg[0]) <= 1e-9 * (1.0 + std::abs(sg[0])), ErrorCode::NonConvergence,
          "sigma table failed to close up");
  sg[n] = sg[0];
  dsg[n] = dsg[0];
  wob[n] = wob[0] = 0.0;
  out.sigma = CubicSpline::create(0.0, out.s_tau, sg, CubicSpline::Boundary::Periodic);
  out.dsigma = CubicSpline::create(0.0, out.s_tau, dsg, CubicSpline::Boundary::Periodic);
  out.k_wobble = CubicSpline::create(0.0, out.s_tau, wob, CubicSpline::Boundary::Periodic);
  return out;
}

namespace {

SurfaceFrame frame_from_tables(const IsothermalProfile& p, double s, double theta) {
  SurfaceFrame f;
  const double sg = p.sigma_at(s);
  const double dsg = p.dsigma_at(s);
  const double d2sg = p.d2sigma_spline(s);
  const double w = p.tau * std::exp(sg);
  const double root = std::sqrt(std::max(1.0 - dsg * dsg, 1e-300));

  f.point = p.position(s, theta);
  f.normal = p.normal(s, theta);
  f.metric = (w * w) * Eigen::Matrix2d::Identity();

  const double kappa1 = -d2sg / (w * root);
  const double kappa2 = root / w;
  f.second_fundamental.setZero();
  f.second_fundamental(0, 0) = kappa1 * w * w;
  f.second_fundamental(1, 1) = kappa2 * w * w;
  f.mean_curvature = kappa1 + kappa2;
  f.normA2 = kappa1 * kappa1 + kappa2 * kappa2;
  f.trA3 = kappa1 * kappa1 * kappa1 + kappa2 * kappa2 * kappa2;
  return f;
}

}  // namespace

SurfaceFrame frame_at(const IsothermalProfile& profile, double s, double theta) {
  return frame_from_tables(profile, s, theta);
}

SurfaceFrame frame_at(const IsothermalProfile& profile, const Eigen::Matrix3d& rotation,
                      const Eigen::Vector3d& translation, double s, double theta) {
  SurfaceFrame f = frame_from_tables(profile, s, theta);
  f.point = rotation * f.point + translation;
  f.normal = rotation * f.normal;
  return f;
}

double mean_curvature_numeric(const ParametricChart& chart, double u, double v, double h) {
  require(h > 0.0, ErrorCode::InvalidParameter, "stencil spacing must be positive");
  const bool inside = (u - h >= chart.u0 && u + h <= chart.u1 && v - h >= chart.v0 &&
                       v + h <= chart.v1);
  require(inside, ErrorCode::StencilOutOfDomain, "five-point stencil leaves the chart box");

  const Eigen::Vector3d c = chart.position(u, v);
  const Eigen::Vector3d up = chart.position(u + h, v);
  const Eigen::Vector3d um = chart.position(u - h, v);
  const Eigen::Vector3d vp = chart.position(u, v + h);
  const Eigen::Vector3d vm = chart.position(u, v - h);
  const Eigen::Vector3d pp = chart.position(u + h, v + h);
  const Eigen::Vector3d pm = chart.position(u + h, v - h);
  const Eigen::Vector3d mp = chart.position(u - h, v + h);
  const Eigen::Vector3d mm = chart.position(u - h, v - h);

  const Eigen::Vector3d Xu = (up - um) / (2.0 * h);
  const Eigen::Vector3d Xv = (vp - vm) / (2.0 * h);
  const Eigen::Vector3d Xuu = (up - 2.0 * c + um) / (h * h);
  const Eigen::Vector3d Xvv = (vp - 2.0 * c + vm) / (h * h);
  const Eigen::Vector3d Xuv = (pp - pm - mp + mm) / (4.0 * h * h);

  const double E = Xu.dot(Xu), F = Xu.dot(Xv), G = Xv.dot(Xv);
  const double det = E * G - F * F;
  require(det > 1e-30, ErrorCode::InvalidParameter, "degenerate metric at probe point");
  const Eigen::Vector3d n = Xu.cross(Xv).normalized();
  const double L = Xuu.dot(n), M = Xuv.dot(n), N = Xvv.dot(n);
  return (L * G - 2.0 * M * F + N * E) / det;
}

}  // namespace cmcwb
