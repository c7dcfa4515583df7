#include <cmath>
#include <vector>

#include "cmcwb/delaunay.hpp"
#include "cmcwb/errors.hpp"
#include "cmcwb/jacobi.hpp"
#include "doctest.h"

using namespace cmcwb;

namespace {

IsothermalProfile profile_for(double tau, double h = 1e-3) {
  return build_isothermal(solve_meridian(tau, h), h);
}

double deriv_fd(const IsothermalProfile& p, const TauDerivatives* tds, FieldKind kind, double s,
                double h = 1e-3) {
  return (eval_jacobi(p, tds, kind, s + h, 0.0) - eval_jacobi(p, tds, kind, s - h, 0.0)) /
         (2.0 * h);
}

}  // namespace

TEST_SUITE("jacobi") {

TEST_CASE("field equation residual converges at second order for all six kinds") {
  const IsothermalProfile p = profile_for(0.6);
  const TauDerivatives tds = make_tau_derivatives(p);
  const std::vector<double> steps = {0.02, 0.01, 0.005};
  const FieldKind kinds[] = {FieldKind::T1, FieldKind::T2, FieldKind::T3,
                             FieldKind::R1, FieldKind::R2, FieldKind::D};
  for (FieldKind kind : kinds) {
    std::vector<double> err;
    for (double h : steps)
      err.push_back(jacobi_residual(p, &tds, kind, 0.0, 2.0 * p.s_tau, h));
    const double order =
        0.5 * (std::log2(err[0] / err[1]) + std::log2(err[1] / err[2]));
    CAPTURE(static_cast<int>(kind));
    CHECK(order == doctest::Approx(2.0).epsilon(0.2));
  }
}

TEST_CASE("cylinder translation field is annihilated exactly") {
  const IsothermalProfile p = profile_for(1.0);
  const double res = jacobi_residual(p, nullptr, FieldKind::T1, 0.0, 8.0, 0.01);
  CHECK(res <= 1e-15);
}

TEST_CASE("axial kernel derivative at the neck equals sqrt(1 - tau^2)") {
  for (double tau : {0.3, 0.6, 0.9}) {
    const IsothermalProfile p = profile_for(tau);
    const double expected = std::sqrt(1.0 - tau * tau);
    CHECK(p.d2sigma_exact(0.0) == doctest::Approx(expected).epsilon(1e-11));
    CHECK(deriv_fd(p, nullptr, FieldKind::P0plus, 0.0) ==
          doctest::Approx(expected).epsilon(1e-5));
  }
}

TEST_CASE("family field has distinct end slopes on the half and full cell") {
  // The T3 kernel slope matches at both cell ends; the family field slope
  // does not, which is what makes the reduced Neumann problem injective.
  const IsothermalProfile p = profile_for(0.6);
  const TauDerivatives tds = make_tau_derivatives(p);
  const double half = p.period_s;
  const double at_zero = deriv_fd(p, &tds, FieldKind::P0minus, 0.0);
  const double at_half = deriv_fd(p, &tds, FieldKind::P0minus, half);
  const double at_full = deriv_fd(p, &tds, FieldKind::P0minus, p.s_tau);
  CHECK(std::abs(at_zero) < 1e-3);
  CHECK(at_half == doctest::Approx(2.876).epsilon(0.01));
  CHECK(at_full == doctest::Approx(5.7516).epsilon(0.01));
}

TEST_CASE("translation fields are periodic while rotation and family fields grow") {
  const IsothermalProfile p = profile_for(0.6);
  const TauDerivatives tds = make_tau_derivatives(p);
  const double s = 0.4;
  CHECK(eval_jacobi(p, nullptr, FieldKind::T1, s + p.s_tau, 0.0) ==
        doctest::Approx(eval_jacobi(p, nullptr, FieldKind::T1, s, 0.0)).epsilon(1e-9));
  const double r_near = std::abs(eval_jacobi(p, &tds, FieldKind::R1, s, M_PI / 2));
  const double r_far = std::abs(eval_jacobi(p, &tds, FieldKind::R1, s + 2 * p.s_tau, M_PI / 2));
  CHECK(r_far > 2.0 * r_near);
  const double d_near = std::abs(eval_jacobi(p, &tds, FieldKind::D, s, 0.0));
  const double d_far = std::abs(eval_jacobi(p, &tds, FieldKind::D, s + 3 * p.s_tau, 0.0));
  CHECK(d_far > 2.0 * d_near);
}

TEST_CASE("reduced kinds alias the geometric ones") {
  const IsothermalProfile p = profile_for(0.6);
  const TauDerivatives tds = make_tau_derivatives(p);
  for (double s : {0.0, 1.3, 7.9}) {
    CHECK(eval_jacobi(p, nullptr, FieldKind::P0plus, s, 2.0) ==
          eval_jacobi(p, nullptr, FieldKind::T3, s, 2.0));
    CHECK(eval_jacobi(p, &tds, FieldKind::P0minus, s, 2.0) ==
          eval_jacobi(p, &tds, FieldKind::D, s, 2.0));
  }
}

TEST_CASE("family kinds demand tau-derivative tables and respect the window") {
  const IsothermalProfile p = profile_for(0.6);
  CHECK_THROWS_WITH_AS(eval_jacobi(p, nullptr, FieldKind::D, 1.0, 0.0),
                       doctest::Contains("tau-derivative"), Error);
  const TauDerivatives tds = make_tau_derivatives(p);
  CHECK_NOTHROW(eval_jacobi(p, &tds, FieldKind::D, 3.4 * p.s_tau, 0.0));
  CHECK_THROWS_AS(eval_jacobi(p, &tds, FieldKind::D, 3.6 * p.s_tau, 0.0), Error);
  try {
    eval_jacobi(p, &tds, FieldKind::D, 3.6 * p.s_tau, 0.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidParameter);
  }
}

TEST_CASE("perturbation construction validates its inputs") {
  const IsothermalProfile p = profile_for(0.6);
  PerturbationVector big;
  big.aT = Eigen::Vector3d(0.05, 0.0, 0.0);
  CHECK_THROWS_AS(make_perturbed(p, big), Error);
  try {
    make_perturbed(p, big);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PerturbationTooLarge);
  }

  const IsothermalProfile cyl = profile_for(1.0);
  PerturbationVector shift;
  shift.aD = 0.01;  // pushes the neck parameter past 1
  try {
    make_perturbed(cyl, shift);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidParameter);
  }
}

TEST_CASE("pure axial translation reproduces the axial field") {
  const IsothermalProfile p = profile_for(0.6);
  const TauDerivatives tds = make_tau_derivatives(p);
  PerturbationVector a;
  a.aT = Eigen::Vector3d(0.0, 0.0, 0.03);
  const GraphDecomposition dec =
      normal_graph_decompose(p, tds, a, 0.0, p.s_tau, 40, 16);
  // max |sigma'| = sqrt(1 - tau^2), so the graph peaks near 0.03 * 0.8.
  CHECK(dec.sup_w == doctest::Approx(0.03 * 0.8).epsilon(0.02));
  CHECK(dec.sup_rem < 3e-3);
}

TEST_CASE("graph remainder shrinks quadratically in the perturbation size") {
  const IsothermalProfile p = profile_for(0.6);
  const TauDerivatives tds = make_tau_derivatives(p);
  Eigen::VectorXd dir(6);
  dir << 0.35, 0.2, 0.4, 0.25, 0.2, 0.45;
  dir.normalize();
  std::vector<double> rem, lin;
  for (double t : {0.04, 0.02, 0.01}) {
    PerturbationVector a;
    a.aT = t * dir.head<3>();
    a.aR = t * dir.segment<2>(3);
    a.aD = t * dir(5);
    const GraphDecomposition dec =
        normal_graph_decompose(p, tds, a, 0.2, 0.55 * p.s_tau, 36, 12);
    rem.push_back(dec.sup_rem);
    lin.push_back(dec.sup_w);
  }
  CHECK(rem[0] / rem[1] == doctest::Approx(4.0).epsilon(0.25));
  CHECK(rem[1] / rem[2] == doctest::Approx(4.0).epsilon(0.3));
  // The graph itself scales linearly.
  CHECK(lin[0] / lin[2] == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("projection refuses a graph that wanders out of its chart") {
  const IsothermalProfile p = profile_for(0.3);
  const TauDerivatives tds = make_tau_derivatives(p);
  PerturbationVector a;
  a.aT = Eigen::Vector3d(0.048, 0.0, 0.0);  // exceeds the neck radius
  try {
    normal_graph_decompose(p, tds, a, -1.0, 1.0, 24, 16);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ProjectionNotUnique);
  }
}

}  // TEST_SUITE
