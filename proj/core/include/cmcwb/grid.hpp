#pragma once

#include <Eigen/Dense>

#include "cmcwb/errors.hpp"

namespace cmcwb {

struct UniformGrid1d {
  double a = 0.0, b = 1.0;
  int n = 1;  // interval count; n+1 nodes

  double h() const { return (b - a) / n; }
  int nodes() const { return n + 1; }
  double point(int i) const { return a + (b - a) * i / n; }

  Eigen::VectorXd points() const {
    Eigen::VectorXd p(n + 1);
    for (int i = 0; i <= n; ++i) p[i] = point(i);
    return p;
  }
};

inline UniformGrid1d make_grid(double a, double b, int n) {
  require(b > a && n >= 1, ErrorCode::InvalidParameter, "degenerate grid");
  return UniformGrid1d{a, b, n};
}

}  // namespace cmcwb
