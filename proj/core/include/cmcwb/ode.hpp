#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace cmcwb {

// Dormand-Prince 5(4) embedded pair with adaptive step control.
//
// Dense evaluation contract: accepted steps are forced onto every requested
// sample point, so sampled states carry the full integration accuracy
// (rtol/atol), not an interpolant's. Event times are located by bisection
// on re-integrated short segments to an absolute width of `event_tol`.
struct OdeOptions {
  double rtol = 1e-12;
  double atol = 1e-12;
  double h_init = 1e-3;
  double h_max = 0.25;
  long max_steps = 50'000'000;
  double event_tol = 1e-12;
};

struct OdeEvent {
  std::function<double(double, const Eigen::VectorXd&)> g;
  int direction = 0;    // +1 rising zeros only, -1 falling, 0 both
  bool terminal = true;
};

struct OdeResult {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> y;       // states at the requested samples (prefix if terminated)
  std::vector<double> event_t;
  std::vector<Eigen::VectorXd> event_y;
  std::vector<int> event_index;         // which event fired
  bool terminated_by_event = false;
  long steps = 0;
};

using OdeRhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

// Integrates from samples.front() to samples.back(); samples must be strictly
// increasing. y0 is the state at samples.front(). Raises NonConvergence if the
// step controller stalls, InvalidParameter on a bad sample vector.
OdeResult integrate_sampled(const OdeRhs& f, const Eigen::VectorXd& y0,
                            const std::vector<double>& samples,
                            const OdeOptions& options = {},
                            const std::vector<OdeEvent>& events = {});

// Convenience: uniform samples over [t0, t1] with n intervals.
OdeResult integrate_uniform(const OdeRhs& f, const Eigen::VectorXd& y0, double t0, double t1,
                            int n, const OdeOptions& options = {},
                            const std::vector<OdeEvent>& events = {});

}  // namespace cmcwb
