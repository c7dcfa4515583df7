#pragma once

#include <functional>

#include <Eigen/Dense>

namespace cmcwb {

// Composite trapezoid over uniformly sampled values (spacing h).
double trapezoid_uniform(const Eigen::VectorXd& y, double h);

// Node weights of the uniform trapezoid rule on n+1 nodes with spacing h.
Eigen::VectorXd trapezoid_weights(int n_intervals, double h);

// Composite Simpson; requires an even interval count.
double simpson_uniform(const Eigen::VectorXd& y, double h);

// Gauss-Legendre nodes/weights on [-1, 1], computed by Newton on the
// Legendre recurrence. Cached per order.
void gauss_legendre(int order, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

// Panelled Gauss-Legendre integral of f over [a, b].
double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    int order = 32, int panels = 8);

}  // namespace cmcwb
