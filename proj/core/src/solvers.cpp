#include "cmcwb/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cmcwb/errors.hpp"
#include "cmcwb/profiles.hpp"

namespace cmcwb {

namespace {

// Thomas elimination with pivot monitoring. a lower, b main, c upper;
// a[0] and c[n-1] ignored. Raises SingularMatrix on pivot breakdown.
Eigen::VectorXd tridiagonal_checked(Eigen::VectorXd a, Eigen::VectorXd b, Eigen::VectorXd c,
                                    Eigen::VectorXd d) {
  const int n = static_cast<int>(b.size());
  double scale = 0.0;
  for (int i = 0; i < n; ++i) {
    scale = std::max(scale, std::abs(b[i]) + (i > 0 ? std::abs(a[i]) : 0.0) +
                                (i + 1 < n ? std::abs(c[i]) : 0.0));
  }
  const double floor = 1e-13 * scale;
  for (int i = 1; i < n; ++i) {
    require(std::abs(b[i - 1]) > floor, ErrorCode::SingularMatrix,
            "tridiagonal pivot breakdown at row " + std::to_string(i - 1));
    const double m = a[i] / b[i - 1];
    b[i] -= m * c[i - 1];
    d[i] -= m * d[i - 1];
  }
  require(std::abs(b[n - 1]) > floor, ErrorCode::SingularMatrix,
          "tridiagonal pivot breakdown at row " + std::to_string(n - 1));
  Eigen::VectorXd x(n);
  x[n - 1] = d[n - 1] / b[n - 1];
  for (int i = n - 2; i >= 0; --i) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
  return x;
}

struct NeumannSolve {
  Eigen::VectorXd h;
  double residual = 0.0;
};

// h'' + q h = g on the closed uniform grid, Neumann via even mirror ghosts.
NeumannSolve neumann_solve(const Eigen::VectorXd& q, double step, const Eigen::VectorXd& g) {
  const int n = static_cast<int>(q.size());
  const double w = 1.0 / (step * step);
  Eigen::VectorXd a = Eigen::VectorXd::Constant(n, w);
  Eigen::VectorXd b = q.array() - 2.0 * w;
  Eigen::VectorXd c = Eigen::VectorXd::Constant(n, w);
  c[0] = 2.0 * w;
  a[n - 1] = 2.0 * w;
  NeumannSolve out;
  out.h = tridiagonal_checked(a, b, c, g);
  for (int i = 0; i < n; ++i) {
    const double lo = i > 0 ? out.h[i - 1] : out.h[1];
    const double hi = i + 1 < n ? out.h[i + 1] : out.h[n - 2];
    const double defect = w * (lo - 2.0 * out.h[i] + hi) + q[i] * out.h[i] - g[i];
    out.residual = std::max(out.residual, std::abs(defect));
  }
  return out;
}

double sup_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Uniform [-1, 1] from the raw engine words; the distribution adapters are
// not pinned by the standard, this is.
double uniform_pm1(std::mt19937& rng) {
  return 2.0 * ((rng() >> 5) * (1.0 / 134217728.0)) - 1.0;
}

}  // namespace

SymmetricPeriodicFunction sample_symmetric(double s_tau, int n,
                                           const std::function<double(double)>& fn) {
  require(s_tau > 0.0, ErrorCode::InvalidParameter, "s_tau must be positive");
  require(n >= 5 && n % 2 == 1, ErrorCode::InvalidParameter,
          "node count must be odd and at least 5 so the half period is a node");
  require(static_cast<bool>(fn), ErrorCode::InvalidParameter, "sample function missing");
  SymmetricPeriodicFunction h;
  h.s_tau = s_tau;
  h.values.resize(n);
  const double step = s_tau / double(n - 1);
  for (int i = 0; i < n; ++i) h.values[i] = fn(step * i);
  return h;
}

double symmetry_defect(const SymmetricPeriodicFunction& h) {
  const int n = h.nodes();
  double defect = 0.0;
  for (int i = 0; i < n; ++i) defect = std::max(defect, std::abs(h.values[i] - h.values[n - 1 - i]));
  return defect;
}

CubicSpline to_spline(const SymmetricPeriodicFunction& h) {
  require(h.nodes() >= 5, ErrorCode::InvalidParameter, "too few nodes");
  Eigen::VectorXd y = h.values;
  const double gap = std::abs(y[y.size() - 1] - y[0]);
  require(gap <= 1e-10 * std::max(1.0, sup_abs(y)), ErrorCode::InvalidParameter,
          "end values do not wrap");
  y[y.size() - 1] = y[0];
  return CubicSpline::create(0.0, h.s_tau, y, CubicSpline::Boundary::Periodic);
}

SymmetricPeriodicFunction apply_periodic(const IsothermalProfile& profile,
                                         const SymmetricPeriodicFunction& h) {
  const int n = h.nodes();
  require(n >= 5, ErrorCode::InvalidParameter, "too few nodes");
  require(std::abs(h.s_tau - profile.s_tau) <= 1e-9 * profile.s_tau, ErrorCode::InvalidParameter,
          "cell length does not match the profile");
  const double step = h.step();
  const double w = 1.0 / (step * step);
  SymmetricPeriodicFunction g;
  g.s_tau = h.s_tau;
  g.values.resize(n);
  for (int i = 0; i < n; ++i) {
    const double sigma = profile.sigma_at(step * i);
    const double q = profile.tau * profile.tau * std::cosh(2.0 * sigma);
    const double lo = i > 0 ? h.values[i - 1] : h.values[1];
    const double hi = i + 1 < n ? h.values[i + 1] : h.values[n - 2];
    g.values[i] = w * (lo - 2.0 * h.values[i] + hi) + q * h.values[i];
  }
  return g;
}

PeriodicSolveReport solve_periodic(const IsothermalProfile& profile,
                                   const SymmetricPeriodicFunction& g) {
  const int n = g.nodes();
  require(n >= 5 && n % 2 == 1, ErrorCode::InvalidParameter,
          "node count must be odd and at least 5 so the half period is a node");
  require(std::abs(g.s_tau - profile.s_tau) <= 1e-9 * profile.s_tau, ErrorCode::InvalidParameter,
          "cell length does not match the profile");
  const double scale = std::max(1.0, sup_abs(g.values));
  require(symmetry_defect(g) <= 1e-8 * scale, ErrorCode::InvalidParameter,
          "right hand side is not symmetric about the half period");

  const int m = (n + 1) / 2;  // nodes on [0, s_tau / 2]
  const double step = g.step();
  Eigen::VectorXd q(m);
  for (int i = 0; i < m; ++i) {
    const double sigma = profile.sigma_at(step * i);
    q[i] = profile.tau * profile.tau * std::cosh(2.0 * sigma);
  }
  const NeumannSolve half = neumann_solve(q, step, g.values.head(m));

  PeriodicSolveReport report;
  report.h.s_tau = g.s_tau;
  report.h.values.resize(n);
  for (int i = 0; i < n; ++i) report.h.values[i] = half.h[i < m ? i : n - 1 - i];
  report.residual = half.residual;
  const double sup_g = sup_abs(g.values);
  report.inverse_ratio = sup_g > 0.0 ? sup_abs(report.h.values) / sup_g : 0.0;
  return report;
}

PeriodicSolveReport solve_periodic(const Eigen::VectorXd& potential, double length,
                                   const Eigen::VectorXd& g) {
  require(length > 0.0, ErrorCode::InvalidParameter, "length must be positive");
  require(potential.size() == g.size(), ErrorCode::InvalidParameter,
          "potential and data grids differ");
  require(g.size() >= 3, ErrorCode::InvalidParameter, "too few nodes");
  const double step = length / double(g.size() - 1);
  const NeumannSolve sol = neumann_solve(potential, step, g);
  PeriodicSolveReport report;
  report.h.s_tau = length;
  report.h.values = sol.h;
  report.residual = sol.residual;
  const double sup_g = sup_abs(g);
  report.inverse_ratio = sup_g > 0.0 ? sup_abs(sol.h) / sup_g : 0.0;
  return report;
}

double weighted_sup(const StripFunction& phi, double gamma) {
  const int ns = phi.ns(), nt = phi.nt();
  double sup = 0.0;
  for (int j = 0; j < nt; ++j) {
    const double weight = std::pow(std::cosh(phi.t(j)), gamma);
    for (int i = 0; i < ns; ++i) sup = std::max(sup, std::abs(phi.values(i, j)) * weight);
  }
  return sup;
}

double weighted_sup(const StripFunction& phi) { return weighted_sup(phi, phi.gamma); }

double strip_symmetry_defect(const StripFunction& phi) {
  const int ns = phi.ns(), nt = phi.nt();
  double defect = 0.0;
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nt; ++j)
      defect = std::max(defect, std::abs(phi.values(i, j) - phi.values(ns - 1 - i, j)));
  return defect;
}

Eigen::VectorXd kernel_inner_products(const StripFunction& phi) {
  const int ns = phi.ns(), nt = phi.nt();
  const double ht = phi.ht();
  Eigen::VectorXd vp(nt);
  for (int j = 0; j < nt; ++j) vp[j] = heteroclinic_prime(phi.t(j));
  Eigen::VectorXd out(ns);
  for (int i = 0; i < ns; ++i) {
    double sum = 0.0;
    for (int j = 0; j < nt; ++j) {
      const double w = (j == 0 || j == nt - 1) ? 0.5 * ht : ht;
      sum += w * vp[j] * phi.values(i, j);
    }
    out[i] = sum;
  }
  return out;
}

StripFunction project_Z(const StripFunction& g) {
  const int ns = g.ns(), nt = g.nt();
  require(ns >= 2 && nt >= 3, ErrorCode::InvalidParameter, "grid too small");
  const double ht = g.ht();
  Eigen::VectorXd vp(nt);
  double c_h = 0.0;
  for (int j = 0; j < nt; ++j) {
    vp[j] = heteroclinic_prime(g.t(j));
    const double w = (j == 0 || j == nt - 1) ? 0.5 * ht : ht;
    c_h += w * vp[j] * vp[j];
  }
  const Eigen::VectorXd ip = kernel_inner_products(g);
  StripFunction out = g;
  for (int i = 0; i < ns; ++i) {
    const double coef = ip[i] / c_h;
    for (int j = 0; j < nt; ++j) out.values(i, j) -= coef * vp[j];
  }
  return out;
}

struct StripSolver::Impl {
  int ns = 0, nt = 0;
  double s_tau = 0.0, t_box = 0.0, hs = 0.0, ht = 0.0, eps = 0.0;
  Eigen::VectorXd c;   // (tau e^sigma)^{-2} at the s nodes
  Eigen::VectorXd fp;  // f'(v_star) at the t nodes
  Eigen::VectorXd vp;  // v_star' at the t nodes
  Eigen::SparseMatrix<double> A;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  int unknowns = 0;  // interior values; multipliers follow

  int idx(int i, int j) const { return i * (nt - 2) + (j - 1); }

  void check_grid(const StripFunction& phi) const {
    require(phi.ns() == ns && phi.nt() == nt, ErrorCode::InvalidParameter,
            "grid does not match the solver");
    require(std::abs(phi.s_tau - s_tau) <= 1e-9 * s_tau &&
                std::abs(phi.t_box - t_box) <= 1e-9 * t_box,
            ErrorCode::InvalidParameter, "box does not match the solver");
  }

  // S phi on the interior unknowns; Dirichlet zeros at t ends, even mirrors
  // at the s walls.
  Eigen::VectorXd op_interior(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y(unknowns);
    const double ws = eps / (hs * hs);
    const double wt = 1.0 / (eps * ht * ht);
    for (int i = 0; i < ns; ++i) {
      const int left = i > 0 ? i - 1 : 1;
      const int right = i + 1 < ns ? i + 1 : ns - 2;
      for (int j = 1; j + 1 < nt; ++j) {
        const double v = x[idx(i, j)];
        double acc = (c[i] * ws) * (x[idx(left, j)] - 2.0 * v + x[idx(right, j)]);
        const double lo = j > 1 ? x[idx(i, j - 1)] : 0.0;
        const double hi = j + 2 < nt ? x[idx(i, j + 1)] : 0.0;
        acc += wt * (lo - 2.0 * v + hi) + fp[j] * v / eps;
        y[idx(i, j)] = acc;
      }
    }
    return y;
  }
};

StripSolver::StripSolver(const IsothermalProfile& profile, double eps, const StripOptions& options)
    : impl_(new Impl), options_(options), eps_(eps), s_tau_(profile.s_tau) {
  require(eps > 0.0 && eps < 1.0, ErrorCode::InvalidParameter, "eps must lie in (0, 1)");
  require(options.ns >= 4 && options.nt >= 5, ErrorCode::InvalidParameter, "grid too small");
  require(options.t_box > 1.0, ErrorCode::InvalidParameter, "t box too small");
  require(options.gamma > 0.0 && options.gamma < std::sqrt(2.0), ErrorCode::InvalidParameter,
          "gamma must lie in (0, sqrt 2)");

  Impl& d = *impl_;
  d.ns = options.ns;
  d.nt = options.nt;
  d.s_tau = profile.s_tau;
  d.t_box = options.t_box;
  d.hs = profile.s_tau / double(d.ns - 1);
  d.ht = 2.0 * options.t_box / double(d.nt - 1);
  d.eps = eps;
  d.c.resize(d.ns);
  for (int i = 0; i < d.ns; ++i) {
    const double w = profile.w_at(d.hs * i);
    d.c[i] = 1.0 / (w * w);
  }
  d.fp.resize(d.nt);
  d.vp.resize(d.nt);
  for (int j = 0; j < d.nt; ++j) {
    const double t = -d.t_box + d.ht * j;
    d.fp[j] = double_well_prime(heteroclinic(t));
    d.vp[j] = heteroclinic_prime(t);
  }

  d.unknowns = d.ns * (d.nt - 2);
  const int total = d.unknowns + d.ns;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(d.unknowns) * 6 + static_cast<size_t>(d.ns) * (d.nt - 2) * 2);
  const double ws = eps / (d.hs * d.hs);
  const double wt = 1.0 / (eps * d.ht * d.ht);
  for (int i = 0; i < d.ns; ++i) {
    const int left = i > 0 ? i - 1 : 1;
    const int right = i + 1 < d.ns ? i + 1 : d.ns - 2;
    const double cs = d.c[i] * ws;
    for (int j = 1; j + 1 < d.nt; ++j) {
      const int row = d.idx(i, j);
      trip.emplace_back(row, row, -2.0 * cs - 2.0 * wt + d.fp[j] / eps);
      trip.emplace_back(row, d.idx(left, j), cs);
      trip.emplace_back(row, d.idx(right, j), cs);
      if (j > 1) trip.emplace_back(row, d.idx(i, j - 1), wt);
      if (j + 2 < d.nt) trip.emplace_back(row, d.idx(i, j + 1), wt);
      // multiplier column and constraint row share the trapezoid vector
      trip.emplace_back(row, d.unknowns + i, d.ht * d.vp[j]);
      trip.emplace_back(d.unknowns + i, row, d.ht * d.vp[j]);
    }
  }
  d.A.resize(total, total);
  d.A.setFromTriplets(trip.begin(), trip.end());
  d.A.makeCompressed();
  d.lu.compute(d.A);
  require(d.lu.info() == Eigen::Success, ErrorCode::SingularMatrix,
          "strip operator factorization failed");
}

StripSolver::~StripSolver() = default;
StripSolver::StripSolver(StripSolver&&) noexcept = default;
StripSolver& StripSolver::operator=(StripSolver&&) noexcept = default;

StripFunction StripSolver::sample(const std::function<double(double, double)>& fn) const {
  require(static_cast<bool>(fn), ErrorCode::InvalidParameter, "sample function missing");
  const Impl& d = *impl_;
  StripFunction out;
  out.s_tau = d.s_tau;
  out.t_box = d.t_box;
  out.eps = d.eps;
  out.gamma = options_.gamma;
  out.values.resize(d.ns, d.nt);
  for (int i = 0; i < d.ns; ++i)
    for (int j = 0; j < d.nt; ++j) out.values(i, j) = fn(d.hs * i, -d.t_box + d.ht * j);
  return out;
}

StripFunction StripSolver::apply(const StripFunction& phi) const {
  const Impl& d = *impl_;
  d.check_grid(phi);
  Eigen::VectorXd x(d.unknowns);
  for (int i = 0; i < d.ns; ++i)
    for (int j = 1; j + 1 < d.nt; ++j) x[d.idx(i, j)] = phi.values(i, j);
  const Eigen::VectorXd y = d.op_interior(x);
  StripFunction out = phi;
  out.values.setZero();
  for (int i = 0; i < d.ns; ++i)
    for (int j = 1; j + 1 < d.nt; ++j) out.values(i, j) = y[d.idx(i, j)];
  return out;
}

StripSolveReport StripSolver::solve(const StripFunction& g) const {
  const Impl& d = *impl_;
  d.check_grid(g);
  const double sup_g = g.values.cwiseAbs().maxCoeff();

  // |<g(s_i, .), v'>| <= tol ||g||_inf ||v'||_1 with ||v'||_1 = 2
  const Eigen::VectorXd defects = kernel_inner_products(g);
  const double defect = sup_abs(defects);
  require(defect <= options_.ortho_tol * 2.0 * std::max(sup_g, 1e-300),
          ErrorCode::NotOrthogonal,
          "kernel component " + std::to_string(defect) + " above tolerance; project_Z first");

  const int total = d.unknowns + d.ns;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(total);
  for (int i = 0; i < d.ns; ++i)
    for (int j = 1; j + 1 < d.nt; ++j) rhs[d.idx(i, j)] = g.values(i, j);

  Eigen::VectorXd x = d.lu.solve(rhs);
  require(d.lu.info() == Eigen::Success, ErrorCode::SingularMatrix, "strip solve failed");

  const double residual = (d.A * x - rhs).cwiseAbs().maxCoeff();
  if (residual > 1e-8 * std::max(sup_g, 1e-300)) {
    fail(ErrorCode::IllConditioned,
         "factored solve residual " + std::to_string(residual) + " exceeds contract at scale " +
             std::to_string(sup_g));
  }

  StripSolveReport report;
  report.phi.s_tau = d.s_tau;
  report.phi.t_box = d.t_box;
  report.phi.eps = d.eps;
  report.phi.gamma = options_.gamma;
  report.phi.values = Eigen::MatrixXd::Zero(d.ns, d.nt);
  for (int i = 0; i < d.ns; ++i)
    for (int j = 1; j + 1 < d.nt; ++j) report.phi.values(i, j) = x[d.idx(i, j)];
  report.residual = residual;
  report.orthogonality = sup_abs(kernel_inner_products(report.phi));
  report.weighted_input = weighted_sup(g, options_.gamma);
  report.weighted_output = weighted_sup(report.phi, options_.gamma);
  report.bound_constant =
      report.weighted_input > 0.0
          ? report.weighted_output / (std::pow(d.eps, 1.0 - options_.alpha) * report.weighted_input)
          : 0.0;
  report.multiplier_sup = d.ns > 0 ? x.tail(d.ns).cwiseAbs().maxCoeff() : 0.0;
  return report;
}

double StripSolver::coercivity(int iterations) const {
  const Impl& d = *impl_;
  require(iterations > 0, ErrorCode::InvalidParameter, "iterations must be positive");
  std::mt19937 rng(12345u);
  const int total = d.unknowns + d.ns;
  Eigen::VectorXd x(d.unknowns);
  for (int k = 0; k < d.unknowns; ++k) x[k] = uniform_pm1(rng);
  x /= x.norm();
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(total);
    rhs.head(d.unknowns) = x;
    const Eigen::VectorXd y = d.lu.solve(rhs);
    x = y.head(d.unknowns);
    x /= x.norm();
  }
  const double rayleigh = x.dot(d.op_interior(x));
  return -rayleigh;
}

StripSolveReport solve_strip(const IsothermalProfile& profile, double eps, double gamma,
                             const StripFunction& g, const StripOptions& hints) {
  StripOptions options = hints;
  options.ns = g.ns();
  options.nt = g.nt();
  options.t_box = g.t_box;
  options.gamma = gamma;
  const StripSolver solver(profile, eps, options);
  return solver.solve(g);
}

}  // namespace cmcwb
