#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "cmcwb/delaunay.hpp"
#include "cmcwb/errors.hpp"
#include "cmcwb/fermi.hpp"
#include "cmcwb/interp.hpp"
#include "doctest.h"

using namespace cmcwb;

namespace {

constexpr double kPi = std::numbers::pi;

IsothermalProfile profile_for(double tau, double h = 1e-3) {
  return build_isothermal(solve_meridian(tau, h), h);
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// First fundamental form of an embedding by fourth-order differences.
Eigen::Matrix2d pullback_metric(const std::function<Eigen::Vector3d(double, double)>& Y, double s,
                                double theta) {
  const double h = 2e-3;
  auto d1 = [&](bool in_s) {
    auto at = [&](double o) { return in_s ? Y(s + o, theta) : Y(s, theta + o); };
    return (at(-2 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2 * h)) / (12.0 * h);
  };
  const Eigen::Vector3d Ys = d1(true), Yt = d1(false);
  Eigen::Matrix2d g;
  g << Ys.dot(Ys), Ys.dot(Yt), Ys.dot(Yt), Yt.dot(Yt);
  return g;
}

// Exposes only positions so the base-class finite-difference frame runs.
class PositionOnlyChart : public SurfaceChart {
 public:
  explicit PositionOnlyChart(const IsothermalProfile& p) : p_(&p) {}
  Eigen::Vector3d position(double s, double theta) const override {
    return p_->position(s, theta);
  }
  double max_principal_curvature() const override { return p_->kappa2_at(0.0); }

 private:
  const IsothermalProfile* p_;
};

CubicSpline periodic_shift(double amplitude, double s_tau, int harmonics = 1) {
  const int n = 256;
  Eigen::VectorXd y(n + 1);
  for (int i = 0; i <= n; ++i)
    y[i] = amplitude * std::cos(2.0 * kPi * harmonics * i / n);
  return CubicSpline::create(0.0, s_tau, y, CubicSpline::Boundary::Periodic);
}

}  // namespace

TEST_SUITE("fermi") {

TEST_CASE("tube metric keeps its block structure and matches the offset pullback") {
  const IsothermalProfile p = profile_for(0.6);
  const DelaunayChart chart(p);
  for (double s : {0.7, 3.1, 9.5}) {
    const SurfaceFrame fr = frame_at(p, s, 0.0);
    const Eigen::Matrix3d G0 = fermi_metric(chart, s, 0.0, 0.0);
    CHECK((G0.topLeftCorner<2, 2>() - fr.metric).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK(G0(2, 2) == 1.0);
    CHECK(G0(0, 2) == 0.0);
    CHECK(G0(2, 1) == 0.0);
    for (double z : {-0.15, 0.1}) {
      auto offset = [&](double a, double b) {
        return p.position(a, b) + z * p.normal(a, b);
      };
      const Eigen::Matrix2d direct = pullback_metric(offset, s, 0.4);
      const Eigen::Matrix2d formula =
          fermi_metric(chart, s, 0.4, z).topLeftCorner<2, 2>();
      CAPTURE(s);
      CAPTURE(z);
      CHECK((direct - formula).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("cylinder tube metric is diagonal with the shrinking hoop factor") {
  const IsothermalProfile cyl = profile_for(1.0);
  const DelaunayChart chart(cyl);
  for (double z : {-0.4, -0.1, 0.2, 0.45}) {
    const Eigen::Matrix3d G = fermi_metric(chart, 2.3, 1.1, z);
    CHECK(G(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(G(1, 1) == doctest::Approx((1.0 - z) * (1.0 - z)).epsilon(1e-12));
    CHECK(std::abs(G(0, 1)) <= 1e-13);
    CHECK(G(2, 2) == 1.0);
  }
}

TEST_CASE("tube metric stays positive definite past the focal distance") {
  const IsothermalProfile p = profile_for(0.6);
  const DelaunayChart chart(p);
  for (int i = 0; i <= 40; ++i) {
    const double s = p.s_tau * i / 40.0;
    for (double z : {-0.29, -0.15, -0.1, 0.1, 0.15, 0.29}) {
      const Eigen::Matrix2d G = fermi_metric(chart, s, 0.0, z).topLeftCorner<2, 2>();
      CHECK(G(0, 1) == G(1, 0));
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(G);
      CAPTURE(s);
      CAPTURE(z);
      CHECK(eig.eigenvalues().minCoeff() > 0.0);
      if (std::abs(z) <= 0.15) CHECK(eig.eigenvalues().minCoeff() >= 1e-3);
    }
  }
}

TEST_CASE("default finite-difference frame matches the closed forms") {
  const IsothermalProfile p = profile_for(0.6);
  const PositionOnlyChart fd_chart(p);
  for (double s : {0.3, 2.0, 7.98, 12.5}) {
    for (double theta : {0.4, 2.0}) {
      const SurfaceFrame numeric = fd_chart.frame(s, theta);
      const SurfaceFrame closed = frame_at(p, s, theta);
      CAPTURE(s);
      CAPTURE(theta);
      CHECK((numeric.point - closed.point).norm() <= 1e-12);
      CHECK((numeric.normal - closed.normal).norm() <= 1e-10);
      CHECK((numeric.metric - closed.metric).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK((numeric.second_fundamental - closed.second_fundamental).cwiseAbs().maxCoeff() <=
            5e-8);
      CHECK(numeric.mean_curvature == doctest::Approx(1.0).epsilon(1e-8));
      const Eigen::Vector2d kappa = principal_curvatures(numeric);
      CHECK(kappa(0) == doctest::Approx(p.kappa1_at(s)).epsilon(1e-7));
      CHECK(kappa(1) == doctest::Approx(p.kappa2_at(s)).epsilon(1e-7));
    }
  }
}

TEST_CASE("chart construction enforces the focal bound and the tube width") {
  const IsothermalProfile p = profile_for(0.6);
  const DelaunayChart chart(p);
  CHECK(chart.max_principal_curvature() == doctest::Approx(5.0).epsilon(1e-10));

  const FermiChart fermi(chart, 0.05);
  CHECK(fermi.half_width() == doctest::Approx(0.1).epsilon(1e-10));
  CHECK_NOTHROW(fermi.metric(1.0, 0.0, 0.0999));
  try {
    fermi.metric(1.0, 0.0, -0.11);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutsideTube);
  }
  try {
    fermi.coefficients(1.0, 0.0, 0.2);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutsideTube);
  }

  CHECK_NOTHROW(FermiChart(chart, 0.05, 0.15));
  try {
    FermiChart(chart, 0.05, 0.21);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidParameter);
  }
  CHECK_THROWS_AS(FermiChart(chart, 0.0), Error);
  CHECK_THROWS_AS(FermiChart(chart, 1.0), Error);

  // tau = 0.3 neck is much tighter; the default half width follows the focal radius
  const IsothermalProfile narrow = profile_for(0.3);
  const DelaunayChart narrow_chart(narrow);
  const FermiChart narrow_fermi(narrow_chart, 0.02);
  const double focal = 1.0 / narrow_chart.max_principal_curvature();
  CHECK(narrow_fermi.half_width() == doctest::Approx(0.5 * focal).epsilon(1e-10));
  CHECK(narrow_fermi.half_width() < 0.024);
}

TEST_CASE("coefficient quotients extrapolate to their z = 0 limits") {
  const IsothermalProfile p = profile_for(0.6);
  const DelaunayChart chart(p);
  const FermiChart fermi(chart, 0.05);
  for (double s : {0.0, 2.5, 7.98}) {
    const LaplacianCoefficients c0 = fermi.coefficients(s, 0.0, 0.0);
    const SurfaceFrame fr = frame_at(p, s, 0.0);
    const Eigen::Matrix2d g_inv = fr.metric.inverse();
    const Eigen::Matrix2d a_closed = 2.0 * g_inv * fr.second_fundamental * g_inv;
    CHECK((c0.a - a_closed).cwiseAbs().maxCoeff() <= 1e-10 * a_closed.cwiseAbs().maxCoeff());
    // tight against the frame curvatures, loose against the analytic profile
    // (the frame carries the table's O(grid_step^2) curvature error)
    const Eigen::Vector2d kappa = principal_curvatures(fr);
    const double q_frame = std::pow(kappa(0), 3) + std::pow(kappa(1), 3);
    const double qt_frame = std::pow(kappa(0), 4) + std::pow(kappa(1), 4);
    CHECK(c0.Q == doctest::Approx(q_frame).epsilon(1e-13));
    CHECK(c0.Qtilde == doctest::Approx(qt_frame).epsilon(1e-12));
    CHECK(c0.Q == doctest::Approx(p.trA3_at(s)).epsilon(1e-5));
    const double trA4 = std::pow(p.kappa1_at(s), 4) + std::pow(p.kappa2_at(s), 4);
    CHECK(c0.Qtilde == doctest::Approx(trA4).epsilon(1e-5));

    // symmetric averages of the quotients converge to the limits at O(dz^2)
    auto gap = [&](double dz) {
      const LaplacianCoefficients cp = fermi.coefficients(s, 0.0, dz);
      const LaplacianCoefficients cm = fermi.coefficients(s, 0.0, -dz);
      double worst = (0.5 * (cp.a + cm.a) - c0.a).cwiseAbs().maxCoeff();
      worst = std::max(worst, (0.5 * (cp.b + cm.b) - c0.b).cwiseAbs().maxCoeff());
      worst = std::max(worst, std::abs(0.5 * (cp.Q + cm.Q) - c0.Q));
      return worst;
    };
    const double e1 = gap(2e-3), e2 = gap(1e-3);
    CAPTURE(s);
    CAPTURE(e1);
    CAPTURE(e2);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.25));

    // quotient identity z a = G^{lm} - g^{lm} through the public metric
    const double z = 0.07;
    const LaplacianCoefficients cz = fermi.coefficients(s, 0.0, z);
    const Eigen::Matrix2d Gt_inv =
        fermi.metric(s, 0.0, z).topLeftCorner<2, 2>().inverse().eval();
    CHECK((z * cz.a - (Gt_inv - g_inv)).cwiseAbs().maxCoeff() <=
          1e-11 * Gt_inv.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("cylinder coefficients follow the geometric series") {
  const IsothermalProfile cyl = profile_for(1.0);
  const DelaunayChart chart(cyl);
  const FermiChart fermi(chart, 0.05);  // focal radius 1, half width 0.3
  for (double z : {-0.25, 0.1, 0.25}) {
    const LaplacianCoefficients c = fermi.coefficients(4.0, 0.0, z);
    const double hz = 1.0 / (1.0 - z);
    CHECK(c.Hz == doctest::Approx(hz).epsilon(1e-12));
    CHECK(std::abs(c.Hz - (1.0 + z + z * z)) ==
          doctest::Approx(std::abs(z * z * z) * hz).epsilon(1e-10));
    CHECK(c.Q == doctest::Approx(hz).epsilon(1e-9));
    CHECK(c.Qtilde == doctest::Approx(hz).epsilon(1e-7));
    CHECK(c.a(1, 1) == doctest::Approx((2.0 - z) * hz * hz).epsilon(1e-9));
    CHECK(std::abs(c.a(0, 0)) <= 1e-11);
    CHECK(c.b.cwiseAbs().maxCoeff() <= 1e-9);
  }
  const LaplacianCoefficients c0 = fermi.coefficients(4.0, 0.0, 0.0);
  CHECK(c0.Q == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c0.Qtilde == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c0.a(1, 1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(c0.b.cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("offset curvature error shrinks at third order in the height") {
  const IsothermalProfile p = profile_for(0.6);
  const DelaunayChart chart(p);
  const FermiChart fermi(chart, 0.05);
  const std::vector<double> heights = {0.05, 0.025, 0.0125};
  std::vector<double> err;
  for (double z : heights) {
    double worst = 0.0;
    for (int i = 0; i <= 120; ++i) {
      const double s = 0.5 * p.s_tau * i / 120.0;
      const double model = 1.0 + z * p.normA2_at(s) + z * z * p.trA3_at(s);
      worst = std::max(worst, std::abs(fermi.offset_mean_curvature(s, 0.0, z) - model));
    }
    err.push_back(worst);
  }
  CHECK(err[0] > err[1]);
  CHECK(err[1] > err[2]);
  const double slope = fit_slope(heights, err);
  CAPTURE(err[0]);
  CAPTURE(slope);
  CHECK(slope == doctest::Approx(3.0).epsilon(0.1));
}

TEST_CASE("signed distance reproduces the offset curvature identity") {
  const IsothermalProfile p = profile_for(0.6);
  const DelaunayChart chart(p);
  const double eps = 0.05;
  const CubicSpline shift = periodic_shift(0.3, p.s_tau);
  const FermiChart fermi(chart, eps, 0.0, shift);
  AnalyticField u;
  u.value = [&](double s, double t) { return eps * t + eps * eps * shift.eval(s); };
  u.ds = [&](double s, double) { return eps * eps * shift.deriv(s); };
  u.dss = [&](double s, double) { return eps * eps * shift.deriv2(s); };
  u.dt = [&](double, double) { return eps; };
  u.dtt = [](double, double) { return 0.0; };
  u.dst = [](double, double) { return 0.0; };
  for (double s : {0.5, 4.0, 11.0}) {
    for (double t : {-1.2, 0.3, 1.4}) {
      const double z = eps * t + eps * eps * shift.eval(s);
      const LaplacianValue value = apply_laplacian_fermi(fermi, u, s, t, 0);
      const double hz = fermi.offset_mean_curvature(s, 0.0, z);
      CAPTURE(s);
      CAPTURE(t);
      CHECK(value.exact == doctest::Approx(-hz).epsilon(1e-13));
      // truncating the coefficient fields at first z-order leaves an
      // O(z^2 eps^2) remainder in the expanded drift
      const double trA4 = std::pow(p.kappa1_at(s), 4) + std::pow(p.kappa2_at(s), 4);
      const double model =
          1.0 + z * (p.normA2_at(s) + z * (p.trA3_at(s) + z * trA4));
      CHECK(std::abs(value.expanded + model) <= 1e-3);
    }
  }
}

TEST_CASE("t-only fields reduce to the one-dimensional operator") {
  const IsothermalProfile p = profile_for(0.6);
  const DelaunayChart chart(p);
  const double eps = 0.05;
  const FermiChart fermi(chart, eps);
  AnalyticField u;
  u.value = [](double, double t) { return std::tanh(t / std::numbers::sqrt2); };
  u.dt = [](double, double t) {
    const double c = std::cosh(t / std::numbers::sqrt2);
    return 1.0 / (std::numbers::sqrt2 * c * c);
  };
  u.dtt = [](double, double t) {
    const double v = std::tanh(t / std::numbers::sqrt2);
    return -v * (1.0 - v * v);
  };
  u.ds = [](double, double) { return 0.0; };
  u.dss = [](double, double) { return 0.0; };
  u.dst = [](double, double) { return 0.0; };
  for (double s : {1.0, 6.5}) {
    for (double t : {-1.5, 0.7}) {
      const double z = eps * t;
      const double hz = fermi.offset_mean_curvature(s, 0.0, z);
      const LaplacianValue flat = apply_laplacian_fermi(fermi, u, s, t, 0);
      const double expect = u.dtt(s, t) / (eps * eps) - hz * u.dt(s, t) / eps;
      const double scale = std::abs(u.dtt(s, t)) / (eps * eps) + 1.0;
      CHECK(std::abs(flat.exact - expect) <= 1e-12 * scale);
      const Eigen::Vector2d kappa = principal_curvatures(frame_at(p, s, 0.0));
      const double na2 = kappa.squaredNorm();
      const double ta3 = std::pow(kappa(0), 3) + std::pow(kappa(1), 3);
      const double ta4 = std::pow(kappa(0), 4) + std::pow(kappa(1), 4);
      const double c0e = kappa.sum() + z * (na2 + z * (ta3 + z * ta4));
      CHECK(std::abs(flat.expanded - (u.dtt(s, t) / (eps * eps) - c0e * u.dt(s, t) / eps)) <=
            1e-12 * scale);

      // hoop mode adds the inverse offset metric times m^2
      const LaplacianValue mode = apply_laplacian_fermi(fermi, u, s, t, 1);
      const double gtt_z = 1.0 / fermi.metric(s, 0.0, z)(1, 1);
      CHECK(std::abs(mode.exact - (expect - gtt_z * u.value(s, t))) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("exact and expanded branches separate at third order in eps") {
  const IsothermalProfile p = profile_for(0.6);
  const DelaunayChart chart(p);
  const CubicSpline shift = periodic_shift(0.25, p.s_tau);
  const double q = 2.0 * kPi / p.s_tau;
  AnalyticField u;
  u.value = [&](double s, double t) { return std::cos(q * s) * (t + 0.4 * t * t - 0.2 * t * t * t); };
  u.ds = [&](double s, double t) {
    return -q * std::sin(q * s) * (t + 0.4 * t * t - 0.2 * t * t * t);
  };
  u.dss = [&](double s, double t) {
    return -q * q * std::cos(q * s) * (t + 0.4 * t * t - 0.2 * t * t * t);
  };
  u.dt = [&](double s, double t) { return std::cos(q * s) * (1.0 + 0.8 * t - 0.6 * t * t); };
  u.dtt = [&](double s, double t) { return std::cos(q * s) * (0.8 - 1.2 * t); };
  u.dst = [&](double s, double t) {
    return -q * std::sin(q * s) * (1.0 + 0.8 * t - 0.6 * t * t);
  };
  const std::vector<double> eps_ladder = {0.1, 0.05, 0.025};
  std::vector<double> diff;
  for (double eps : eps_ladder) {
    const FermiChart fermi(chart, eps, 0.0, shift);
    double worst = 0.0;
    for (int i = 0; i < 48; ++i) {
      const double s = p.s_tau * i / 48.0;
      for (int j = 0; j <= 16; ++j) {
        const double t = -0.8 + 1.6 * j / 16.0;
        const LaplacianValue value = apply_laplacian_fermi(fermi, u, s, t, 1);
        worst = std::max(worst, std::abs(value.exact - value.expanded));
      }
    }
    diff.push_back(worst);
  }
  CHECK(diff[0] > diff[1]);
  CHECK(diff[1] > diff[2]);
  const double slope = fit_slope(eps_ladder, diff);
  CAPTURE(diff[0]);
  CAPTURE(diff[2]);
  CAPTURE(slope);
  CHECK(slope >= 2.7);
}

TEST_CASE("grid application converges to the analytic operator at fourth order") {
  const IsothermalProfile p = profile_for(0.6);
  const DelaunayChart chart(p);
  const double eps = 0.05;
  const CubicSpline shift = periodic_shift(0.25, p.s_tau);
  const FermiChart fermi(chart, eps, 0.0, shift);
  const double q = 3.0 * 2.0 * kPi / p.s_tau;
  auto f = [&](double s, double t) { return std::cos(q * s) * (std::sin(2.0 * t) + 0.4 * t * t); };
  AnalyticField u;
  u.value = f;
  u.ds = [&](double s, double t) { return -q * std::sin(q * s) * (std::sin(2.0 * t) + 0.4 * t * t); };
  u.dss = [&](double s, double t) { return -q * q * f(s, t); };
  u.dt = [&](double s, double t) { return std::cos(q * s) * (2.0 * std::cos(2.0 * t) + 0.8 * t); };
  u.dtt = [&](double s, double t) { return std::cos(q * s) * (-4.0 * std::sin(2.0 * t) + 0.8); };
  u.dst = [&](double s, double t) {
    return -q * std::sin(q * s) * (2.0 * std::cos(2.0 * t) + 0.8 * t);
  };

  const double s0 = 2.0, s1 = 6.0, t0 = -0.8, t1 = 0.8;
  auto grid_error = [&](long ns, long nt) {
    FermiGridField field;
    field.ghost = 2;
    field.s0 = s0;
    field.s1 = s1;
    field.t0 = t0;
    field.t1 = t1;
    const double ds = (s1 - s0) / (ns - 1), dt = (t1 - t0) / (nt - 1);
    field.values.resize(ns + 4, nt + 4);
    for (long i = 0; i < ns + 4; ++i)
      for (long j = 0; j < nt + 4; ++j)
        field.values(i, j) = f(s0 + (i - 2) * ds, t0 + (j - 2) * dt);
    const LaplacianGridResult applied = apply_laplacian_fermi(fermi, field, 1);
    double worst = 0.0;
    for (long i = 0; i < ns; ++i) {
      for (long j = 0; j < nt; ++j) {
        const LaplacianValue ref =
            apply_laplacian_fermi(fermi, u, s0 + i * ds, t0 + j * dt, 1);
        worst = std::max(worst, std::abs(applied.exact(i, j) - ref.exact));
      }
    }
    return worst;
  };
  const double coarse = grid_error(41, 17);
  const double fine = grid_error(81, 33);
  CAPTURE(coarse);
  CAPTURE(fine);
  CHECK(coarse / fine >= 11.0);
  CHECK(coarse / fine <= 22.0);

  FermiGridField thin;
  thin.ghost = 1;
  thin.s0 = s0;
  thin.s1 = s1;
  thin.t0 = t0;
  thin.t1 = t1;
  thin.values = Eigen::MatrixXd::Zero(12, 12);
  try {
    apply_laplacian_fermi(fermi, thin, 0);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GhostLayerMissing);
  }
}

TEST_CASE("operator responds linearly to shift differences") {
  const IsothermalProfile p = profile_for(0.6);
  const DelaunayChart chart(p);
  const double eps = 0.05;
  const CubicSpline base_shift = periodic_shift(0.2, p.s_tau);
  AnalyticField u;
  const double q = 2.0 * kPi / p.s_tau;
  u.value = [&](double s, double t) { return std::cos(q * s) * (t + 0.3 * t * t); };
  u.ds = [&](double s, double t) { return -q * std::sin(q * s) * (t + 0.3 * t * t); };
  u.dss = [&](double s, double t) { return -q * q * std::cos(q * s) * (t + 0.3 * t * t); };
  u.dt = [&](double s, double t) { return std::cos(q * s) * (1.0 + 0.6 * t); };
  u.dtt = [&](double s, double t) { return 0.6 * std::cos(q * s); };
  u.dst = [&](double s, double t) { return -q * std::sin(q * s) * (1.0 + 0.6 * t); };

  auto perturbed = [&](double delta) {
    const int n = 256;
    Eigen::VectorXd y(n + 1);
    for (int i = 0; i <= n; ++i) {
      const double s = p.s_tau * i / n;
      y[i] = base_shift.eval(s) + delta * std::sin(2.0 * kPi * i / n);
    }
    return CubicSpline::create(0.0, p.s_tau, y, CubicSpline::Boundary::Periodic);
  };
  const FermiChart fermi0(chart, eps, 0.0, base_shift);
  auto deviation = [&](double delta) {
    const FermiChart fermi1(chart, eps, 0.0, perturbed(delta));
    double worst = 0.0;
    for (int i = 0; i < 24; ++i) {
      const double s = p.s_tau * i / 24.0;
      for (double t : {-1.0, 0.2, 0.9}) {
        const double a = apply_laplacian_fermi(fermi0, u, s, t, 0).exact;
        const double b = apply_laplacian_fermi(fermi1, u, s, t, 0).exact;
        worst = std::max(worst, std::abs(a - b));
      }
    }
    return worst;
  };
  const double d1 = deviation(0.1);
  const double d2 = deviation(0.05);
  CAPTURE(d1);
  CAPTURE(d2);
  CHECK(d1 / d2 == doctest::Approx(2.0).epsilon(0.15));
  CHECK(fermi0.shift_c2_bound() > 0.2);
}

TEST_CASE("coefficient bounds stay finite across the tube") {
  const IsothermalProfile p = profile_for(0.6);
  const DelaunayChart chart(p);
  const FermiChart fermi(chart, 0.05);
  const CoefficientBounds bounds = coefficient_bounds(fermi, 0.0, p.s_tau, 24, 9);
  CHECK(std::isfinite(bounds.sup_a));
  CHECK(std::isfinite(bounds.sup_b));
  CHECK(std::isfinite(bounds.sup_Q));
  CHECK(bounds.sup_a > 0.0);
  CHECK(bounds.sup_Q >= 60.0);
  CHECK(bounds.sup_Q <= 400.0);
}

}  // TEST_SUITE("fermi")
