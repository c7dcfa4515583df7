#include "cmcwb/ode.hpp"

#include <algorithm>
#include <cmath>

#include "cmcwb/errors.hpp"

namespace cmcwb {
namespace {

struct Dp5Stages {
  Eigen::VectorXd k1, k2, k3, k4, k5, k6, k7;
};

// One Dormand-Prince 5(4) step from (t, y) with step h. k1 must hold f(t, y).
// Returns the scaled error norm; fills y5 (5th order result) and k7 = f(t+h, y5).
double dp5_step(const OdeRhs& f, double t, const Eigen::VectorXd& y, double h,
                Dp5Stages& st, Eigen::VectorXd& y5, double rtol, double atol) {
  const auto& k1 = st.k1;
  st.k2 = f(t + h / 5.0, y + h * (k1 / 5.0));
  st.k3 = f(t + 3.0 * h / 10.0, y + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * st.k2));
  st.k4 = f(t + 4.0 * h / 5.0,
            y + h * (44.0 / 45.0 * k1 - 56.0 / 15.0 * st.k2 + 32.0 / 9.0 * st.k3));
  st.k5 = f(t + 8.0 * h / 9.0,
            y + h * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * st.k2 +
                     64448.0 / 6561.0 * st.k3 - 212.0 / 729.0 * st.k4));
  st.k6 = f(t + h,
            y + h * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * st.k2 + 46732.0 / 5247.0 * st.k3 +
                     49.0 / 176.0 * st.k4 - 5103.0 / 18656.0 * st.k5));
  y5 = y + h * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * st.k3 + 125.0 / 192.0 * st.k4 -
                2187.0 / 6784.0 * st.k5 + 11.0 / 84.0 * st.k6);
  st.k7 = f(t + h, y5);
  const Eigen::VectorXd y4 =
      y + h * (5179.0 / 57600.0 * k1 + 7571.0 / 16695.0 * st.k3 + 393.0 / 640.0 * st.k4 -
               92097.0 / 339200.0 * st.k5 + 187.0 / 2100.0 * st.k6 + st.k7 / 40.0);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
    const double e = (y5[i] - y4[i]) / sc;
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(y.size()));
}

// Adaptive integration from (t0, y0) to t1 without events or sampling.
Eigen::VectorXd integrate_plain(const OdeRhs& f, double t0, const Eigen::VectorXd& y0,
                                double t1, const OdeOptions& opt, long& steps) {
  Eigen::VectorXd y = y0;
  if (t1 <= t0) return y;
  double t = t0;
  double h = std::min(opt.h_init, t1 - t0);
  Dp5Stages st;
  st.k1 = f(t, y);
  Eigen::VectorXd y5;
  while (t < t1) {
    h = std::min(h, t1 - t);
    const double err = dp5_step(f, t, y, h, st, y5, opt.rtol, opt.atol);
    ++steps;
    require(steps < opt.max_steps, ErrorCode::NonConvergence, "step limit exceeded");
    if (err <= 1.0) {
      t += h;
      y.swap(y5);
      st.k1.swap(st.k7);  // FSAL
      h *= std::clamp(0.9 * std::pow(std::max(err, 1e-16), -0.2), 1.0, 5.0);
      h = std::min(h, opt.h_max);
    } else {
      h *= std::max(0.9 * std::pow(err, -0.2), 0.2);
      require(h > 1e-15 * std::max(1.0, std::abs(t)), ErrorCode::NonConvergence,
              "step size underflow");
      st.k1 = f(t, y);  // k7 belongs to the rejected endpoint
    }
  }
  return y;
}

bool crossed(double g1, double g2, int direction) {
  if (direction >= 0 && g1 < 0.0 && g2 > 0.0) return true;
  if (direction <= 0 && g1 > 0.0 && g2 < 0.0) return true;
  return false;
}

}  // namespace

OdeResult integrate_sampled(const OdeRhs& f, const Eigen::VectorXd& y0,
                            const std::vector<double>& samples, const OdeOptions& opt,
                            const std::vector<OdeEvent>& events) {
  require(samples.size() >= 2, ErrorCode::InvalidParameter, "need at least two sample points");
  for (size_t i = 1; i < samples.size(); ++i)
    require(samples[i] > samples[i - 1], ErrorCode::InvalidParameter,
            "sample points must be strictly increasing");

  OdeResult out;
  out.t.push_back(samples[0]);
  out.y.push_back(y0);

  double t = samples[0];
  Eigen::VectorXd y = y0;
  double h = opt.h_init;
  Dp5Stages st;
  st.k1 = f(t, y);
  Eigen::VectorXd y5;
  std::vector<double> gprev(events.size());
  for (size_t e = 0; e < events.size(); ++e) gprev[e] = events[e].g(t, y);

  size_t next_sample = 1;
  while (next_sample < samples.size()) {
    const double target = samples[next_sample];
    const double hcap = std::min({h, opt.h_max, target - t});
    const double err = dp5_step(f, t, y, hcap, st, y5, opt.rtol, opt.atol);
    ++out.steps;
    require(out.steps < opt.max_steps, ErrorCode::NonConvergence, "step limit exceeded");
    if (err > 1.0) {
      h = hcap * std::max(0.9 * std::pow(err, -0.2), 0.2);
      require(h > 1e-15 * std::max(1.0, std::abs(t)), ErrorCode::NonConvergence,
              "step size underflow");
      st.k1 = f(t, y);
      continue;
    }

    const double t2 = t + hcap;
    bool stop = false;
    for (size_t e = 0; e < events.size(); ++e) {
      const double g2 = events[e].g(t2, y5);
      if (crossed(gprev[e], g2, events[e].direction)) {
        // Bisect on re-integrated half segments from the left bracket state.
        double tl = t, tr = t2;
        Eigen::VectorXd yl = y;
        double gl = gprev[e];
        long sub_steps = 0;
        while (tr - tl > opt.event_tol) {
          const double tm = 0.5 * (tl + tr);
          OdeOptions sub = opt;
          sub.h_init = std::max((tr - tl) * 0.5, 1e-14);
          const Eigen::VectorXd ym = integrate_plain(f, tl, yl, tm, sub, sub_steps);
          const double gm = events[e].g(tm, ym);
          if (crossed(gl, gm, events[e].direction)) {
            tr = tm;
          } else {
            tl = tm;
            yl = ym;
            gl = gm;
          }
        }
        out.event_t.push_back(0.5 * (tl + tr));
        out.event_y.push_back(yl);
        out.event_index.push_back(static_cast<int>(e));
        if (events[e].terminal) {
          out.terminated_by_event = true;
          stop = true;
        }
      }
      gprev[e] = g2;
    }
    if (stop) return out;

    t = t2;
    y.swap(y5);
    st.k1.swap(st.k7);
    h = hcap * std::clamp(0.9 * std::pow(std::max(err, 1e-16), -0.2), 1.0, 5.0);

    if (t >= target) {
      out.t.push_back(target);
      out.y.push_back(y);
      ++next_sample;
    }
  }
  return out;
}

OdeResult integrate_uniform(const OdeRhs& f, const Eigen::VectorXd& y0, double t0, double t1,
                            int n, const OdeOptions& options, const std::vector<OdeEvent>& events) {
  require(n >= 1 && t1 > t0, ErrorCode::InvalidParameter, "bad uniform sample range");
  std::vector<double> samples(n + 1);
  for (int i = 0; i <= n; ++i) samples[i] = t0 + (t1 - t0) * i / n;
  samples[n] = t1;
  return integrate_sampled(f, y0, samples, options, events);
}

}  // namespace cmcwb
