#include "cmcwb/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "cmcwb/errors.hpp"

namespace cmcwb {

double trapezoid_uniform(const Eigen::VectorXd& y, double h) {
  const Eigen::Index n = y.size();
  require(n >= 2, ErrorCode::InvalidParameter, "trapezoid needs at least 2 samples");
  return h * (y.sum() - 0.5 * (y[0] + y[n - 1]));
}

Eigen::VectorXd trapezoid_weights(int n_intervals, double h) {
  require(n_intervals >= 1, ErrorCode::InvalidParameter, "empty quadrature grid");
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n_intervals + 1, h);
  w[0] = 0.5 * h;
  w[n_intervals] = 0.5 * h;
  return w;
}

double simpson_uniform(const Eigen::VectorXd& y, double h) {
  const Eigen::Index n = y.size() - 1;
  require(n >= 2 && n % 2 == 0, ErrorCode::InvalidParameter, "Simpson needs an even interval count");
  double s = y[0] + y[n];
  for (Eigen::Index i = 1; i < n; i += 2) s += 4.0 * y[i];
  for (Eigen::Index i = 2; i < n; i += 2) s += 2.0 * y[i];
  return s * h / 3.0;
}

void gauss_legendre(int order, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  require(order >= 2, ErrorCode::InvalidParameter, "Gauss-Legendre order must be >= 2");
  static std::map<int, std::pair<Eigen::VectorXd, Eigen::VectorXd>> cache;
  static std::mutex mutex;
  {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(order);
    if (it != cache.end()) {
      nodes = it->second.first;
      weights = it->second.second;
      return;
    }
  }
  const int n = order;
  Eigen::VectorXd x(n), w(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
  {
    std::lock_guard<std::mutex> lock(mutex);
    cache[order] = {x, w};
  }
  nodes = x;
  weights = w;
}

double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    int order, int panels) {
  Eigen::VectorXd x, w;
  gauss_legendre(order, x, w);
  const double hp = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * hp;
    for (int i = 0; i < order; ++i) total += w[i] * f(c + 0.5 * hp * x[i]);
  }
  return total * 0.5 * hp;
}

}  // namespace cmcwb
