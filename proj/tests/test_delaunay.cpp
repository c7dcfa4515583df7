#include <cmath>
#include <numbers>
#include <random>

#include "cmcwb/delaunay.hpp"
#include "cmcwb/errors.hpp"
#include "cmcwb/quadrature.hpp"
#include "doctest.h"

using namespace cmcwb;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent period oracle: with rho = 1 + (1 - eps) sin(u) the arclength
// element of the meridian reduces to a smooth integrand on [-pi/2, pi/2],
//   T / 2 = int (rho^2 + tau^2) / sqrt((rho + eps)(rho + 2 - eps)) du,
// evaluated here with spectral-accuracy Gauss-Legendre panels.
double period_oracle(double tau) {
  const double eps = 1.0 - std::sqrt(1.0 - tau * tau);
  auto f = [&](double u) {
    const double rho = 1.0 + (1.0 - eps) * std::sin(u);
    return (rho * rho + tau * tau) / std::sqrt((rho + eps) * (rho + 2.0 - eps));
  };
  return 2.0 * integrate_gl(f, -kPi / 2.0, kPi / 2.0, 48, 16);
}

// Max residual of the arclength meridian equation measured on the spline at
// interval midpoints (where spline second-derivative error is generic).
double meridian_residual(const MeridianSolution& m) {
  double worst = 0.0;
  const int n = m.rho.intervals();
  for (int i = 0; i < n; ++i) {
    const double a = (i + 0.5) * m.period / n;
    const double r = m.rho_at(a), rp = m.drho_at(a), rpp = m.rho.deriv2(a);
    const double q = 1.0 + rp * rp;
    worst = std::max(worst, std::abs(rpp - q / r + q * std::sqrt(q)));
  }
  return worst;
}

}  // namespace

TEST_SUITE("delaunay") {
  TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(solve_meridian(0.0, 1e-3), Error);
    CHECK_THROWS_AS(solve_meridian(-0.5, 1e-3), Error);
    CHECK_THROWS_AS(solve_meridian(1.2, 1e-3), Error);
    CHECK_THROWS_AS(solve_meridian(0.6, 0.0), Error);
    CHECK_THROWS_AS(solve_meridian(0.6, 0.5), Error);
    try {
      solve_meridian(2.0, 1e-3);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidParameter);
    }
  }

  TEST_CASE("neck and bulge radii at tau = 0.6") {
    const auto m = solve_meridian(0.6, 1e-3);
    CHECK(std::abs(m.eps_neck - 0.2) < 1e-14);
    CHECK(std::abs(m.rho_at(0.0) - 0.2) < 1e-12);
    double lo = 10.0, hi = 0.0;
    for (int i = 0; i <= 4000; ++i) {
      const double r = m.rho_at(m.period * i / 4000.0);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    CHECK(std::abs(lo - 0.2) < 1e-6);
    CHECK(std::abs(hi - 1.8) < 1e-6);
  }

  TEST_CASE("period matches the quadrature oracle") {
    for (double tau : {0.3, 0.6, 0.9}) {
      const auto m = solve_meridian(tau, 2e-3);
      CHECK(std::abs(m.period - period_oracle(tau)) < 1e-9);
    }
    // frozen anchors from an independent high-accuracy integration
    CHECK(solve_meridian(0.3, 2e-3).period == doctest::Approx(4.38591007).epsilon(1e-6));
    CHECK(solve_meridian(0.6, 2e-3).period == doctest::Approx(5.10539977).epsilon(1e-6));
    CHECK(solve_meridian(0.9, 2e-3).period == doctest::Approx(5.97316043).epsilon(1e-6));
  }

  TEST_CASE("meridian first integral holds on the spline") {
    const auto m = solve_meridian(0.6, 1e-3);
    double worst = 0.0;
    for (int i = 0; i <= 3000; ++i) {
      const double a = m.period * i / 3000.0;
      const double r = m.rho_at(a), rp = m.drho_at(a);
      worst = std::max(worst,
                       std::abs(r / std::sqrt(1.0 + rp * rp) - 0.5 * (r * r + m.tau * m.tau)));
    }
    CHECK(worst < 1e-7);
  }

  TEST_CASE("meridian residual converges at second order") {
    for (double tau : {0.3, 0.6, 0.9}) {
      const double r1 = meridian_residual(solve_meridian(tau, 2e-3));
      const double r2 = meridian_residual(solve_meridian(tau, 1e-3));
      CHECK(r1 / r2 > 3.2);
      CHECK(r1 / r2 < 4.8);
    }
  }

  TEST_CASE("degenerate cylinder at tau = 1") {
    const auto m = solve_meridian(1.0, 1e-3);
    CHECK(m.degenerate);
    for (double a : {0.0, 0.7, 3.0}) CHECK(m.rho_at(a) == 1.0);
    const auto p = build_isothermal(m, 1e-3);
    CHECK(p.degenerate);
    CHECK(p.sigma_at(1.3) == 0.0);
    CHECK(frame_at(p, 0.4, 1.0).mean_curvature == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("isothermal tables satisfy both defining relations") {
    const auto m = solve_meridian(0.6, 1e-3);
    const auto p = build_isothermal(m, 1e-3);

    // conformal factor against the meridian radius through the arclength map
    double worst_link = 0.0, worst_fi = 0.0;
    for (int i = 0; i <= 5000; ++i) {
      const double s = p.s_tau * i / 5000.0;
      worst_link = std::max(worst_link, std::abs(p.w_at(s) - m.rho_at(p.k_at(s))));
      const double ds = p.dsigma_at(s);
      const double ch = std::cosh(p.sigma_at(s));
      worst_fi = std::max(worst_fi, std::abs(ds * ds + p.tau * p.tau * ch * ch - 1.0));
      CHECK(p.dk_at(s) > 0.0);
    }
    CHECK(worst_link < 1e-8);
    CHECK(worst_fi < 1e-9);

    // cell length is fixed by k(s_tau) = 2 T; compare against the meridian period
    CHECK(std::abs(p.k_at(p.s_tau) - 2.0 * m.period) < 1e-9);
    CHECK(std::abs(p.period_arc - m.period) < 1e-9);

    // reflection symmetry of the cell
    for (double s : {0.3, 1.1, 4.5, 7.0})
      CHECK(std::abs(p.sigma_at(s) - p.sigma_at(p.s_tau - s)) < 1e-10);
  }

  TEST_CASE("frame carries unit mean curvature at second order") {
    const auto m = solve_meridian(0.6, 1e-3);
    double err[3];
    // refine down to the working step; below ~5e-4 the spline second
    // derivative hits the sample roundoff floor (noise / h^2)
    const double steps[3] = {4e-3, 2e-3, 1e-3};
    for (int pass = 0; pass < 3; ++pass) {
      const auto p = build_isothermal(m, steps[pass]);
      double worst = 0.0;
      for (int i = 0; i <= 800; ++i) {
        const double s = p.s_tau * (i + 0.37) / 801.0;
        worst = std::max(worst, std::abs(frame_at(p, s, 0.3).mean_curvature - 1.0));
      }
      err[pass] = worst;
    }
    CHECK(err[0] < 1e-5);
    const double order1 = std::log2(err[0] / err[1]);
    const double order2 = std::log2(err[1] / err[2]);
    CHECK(0.5 * (order1 + order2) > 1.6);
    CHECK(0.5 * (order1 + order2) < 2.4);
  }

  TEST_CASE("frame structure: metric, second fundamental form, normal") {
    const auto p = build_isothermal(solve_meridian(0.6, 1e-3), 1e-3);
    const auto f = frame_at(p, 2.2, 0.9);
    const double w = p.w_at(2.2);
    CHECK(f.metric(0, 0) == doctest::Approx(w * w).epsilon(1e-12));
    CHECK(f.metric(1, 1) == doctest::Approx(w * w).epsilon(1e-12));
    CHECK(f.metric(0, 1) == 0.0);
    CHECK(f.second_fundamental(0, 1) == 0.0);
    // hoop curvature entry equals dk/ds
    CHECK(f.second_fundamental(1, 1) == doctest::Approx(p.dk_at(2.2)).epsilon(1e-9));
    CHECK(f.normal.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f.normA2 == doctest::Approx(p.normA2_at(2.2)).epsilon(1e-5));
    // normal points toward the axis: moving along it reduces distance to the axis
    const Eigen::Vector3d q = f.point + 0.05 * f.normal;
    CHECK(std::hypot(q.x(), q.y()) < std::hypot(f.point.x(), f.point.y()));
  }

  TEST_CASE("pure translation shifts the frame without touching curvature") {
    const auto p = build_isothermal(solve_meridian(0.6, 1e-3), 1e-3);
    const Eigen::Vector3d b(0.3, -0.1, 2.0);
    const auto f0 = frame_at(p, 1.7, 0.4);
    const auto f1 = frame_at(p, Eigen::Matrix3d::Identity(), b, 1.7, 0.4);
    CHECK((f1.point - f0.point - b).norm() == 0.0);
    CHECK((f1.normal - f0.normal).norm() == 0.0);
    CHECK(f1.mean_curvature == f0.mean_curvature);
    CHECK((f1.second_fundamental - f0.second_fundamental).norm() == 0.0);
  }

  TEST_CASE("numeric mean curvature: sphere, cylinder, families") {
    const ParametricChart sphere{
        [](double u, double v) {
          return Eigen::Vector3d(std::cos(u) * std::cos(v), std::cos(u) * std::sin(v),
                                 std::sin(u));
        },
        -1.0, 1.0, -1.0, 7.0};
    const ParametricChart cylinder{
        [](double u, double v) { return Eigen::Vector3d(std::cos(v), std::sin(v), u); },
        -1.0, 1.0, -1.0, 7.0};

    // sign convention: X_u x X_v points inward for these charts
    const double hs[2] = {4e-3, 2e-3};
    double es[2], ec[2];
    for (int i = 0; i < 2; ++i) {
      es[i] = std::abs(mean_curvature_numeric(sphere, 0.31, 0.77, hs[i]) - 2.0);
      ec[i] = std::abs(mean_curvature_numeric(cylinder, 0.31, 0.77, hs[i]) - 1.0);
    }
    CHECK(es[0] < 1e-4);
    CHECK(es[0] / es[1] > 3.2);
    CHECK(es[0] / es[1] < 4.8);
    CHECK(ec[0] < 1e-4);
    CHECK(ec[0] / ec[1] > 3.2);
    CHECK(ec[0] / ec[1] < 4.8);

    const auto p = build_isothermal(solve_meridian(0.6, 2e-3), 2e-3);
    const ParametricChart delaunay{
        [&](double u, double v) { return p.position(u, v); }, 0.0, p.s_tau, -1.0, 7.0};
    double ed[2];
    for (int i = 0; i < 2; ++i)
      ed[i] = std::abs(mean_curvature_numeric(delaunay, 3.1, 0.77, hs[i]) - 1.0);
    CHECK(ed[0] < 1e-4);
    CHECK(ed[0] / ed[1] > 3.0);
    CHECK(ed[0] / ed[1] < 5.0);
  }

  TEST_CASE("stencil domain violations are reported") {
    const ParametricChart box{
        [](double u, double v) { return Eigen::Vector3d(u, v, u * v); }, 0.0, 1.0, 0.0, 1.0};
    try {
      mean_curvature_numeric(box, 0.0005, 0.5, 1e-3);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::StencilOutOfDomain);
    }
    CHECK_NOTHROW(mean_curvature_numeric(box, 0.5, 0.5, 1e-3));
  }

  TEST_CASE("frame and numeric curvature agree at random points") {
    const auto p = build_isothermal(solve_meridian(0.6, 1e-3), 1e-3);
    const ParametricChart chart{
        [&](double u, double v) { return p.position(u, v); }, -100.0, 100.0, -100.0, 100.0};
    std::mt19937 rng(20240817u);
    std::uniform_real_distribution<double> us(0.0, p.s_tau), ut(0.0, 2.0 * kPi);
    for (int i = 0; i < 100; ++i) {
      const double s = us(rng), th = ut(rng);
      const double hf = frame_at(p, s, th).mean_curvature;
      const double hn = mean_curvature_numeric(chart, s, th, 2e-3);
      CHECK(std::abs(hf - hn) < 1e-4);
    }
  }
}
