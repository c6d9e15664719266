#pragma once

// Adaptive Runge-Kutta-Fehlberg 7(8) driver with output at requested times.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>

#include "finsler/errors.hpp"

namespace finsler {

using OdeState = std::vector<double>;
using OdeRhs = std::function<void(const OdeState&, OdeState&, double)>;
using OdeObserver = std::function<void(double, const OdeState&)>;

struct OdeOptions {
  double rtol = 1e-11;
  double atol = 1e-13;
  double initial_step = 0.05;
  double min_step = 1e-12;
  int max_steps = 200000;
};

struct OdeStats {
  int steps = 0;
  int rejected = 0;
  double max_error = 0.0;  ///< largest accepted scaled local error estimate
  double t_end = 0.0;
  bool truncated = false;  ///< stopped early because the solution left the domain
  std::string reason;
};

/// Integrates x' = f(x, t) from t0 through the increasing output times, calling obs at each.
/// A DomainError from f rejects the step; if the step cannot shrink further the run stops
/// with truncated = true. Other failures raise IntegratorError.
inline OdeStats integrate_ode(const OdeRhs& f, OdeState& x, double t0, std::span<const double> times,
                              const OdeObserver& obs, const OdeOptions& opt = {}) {
  namespace odeint = boost::numeric::odeint;
  odeint::runge_kutta_fehlberg78<OdeState> stepper;
  OdeStats st;
  double t = t0;
  double dt = opt.initial_step;
  OdeState out(x.size()), err(x.size());
  auto sys = [&f](const OdeState& s, OdeState& d, double tt) { f(s, d, tt); };
  for (double target : times) {
    if (target < t - 1e-15 * std::max(1.0, std::abs(t))) throw ConfigError("output times must be increasing");
    while (t < target) {
      if (st.steps + st.rejected >= opt.max_steps) throw IntegratorError("step limit exceeded");
      const bool last = dt >= target - t;
      const double h = last ? target - t : dt;
      bool ok = true;
      double e = 0.0;
      try {
        stepper.do_step(sys, x, t, out, h, err);
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double sc = opt.atol + opt.rtol * std::max(std::abs(x[i]), std::abs(out[i]));
          e = std::max(e, std::abs(err[i]) / sc);
        }
        if (!std::isfinite(e)) ok = false;
      } catch (const DomainError&) {
        ok = false;
      }
      if (!ok) {
        ++st.rejected;
        dt = h * 0.25;
        if (dt < opt.min_step) {
          st.truncated = true;
          st.reason = "solution left the domain";
          st.t_end = t;
          return st;
        }
        continue;
      }
      if (e <= 1.0) {
        t = last ? target : t + h;
        x.swap(out);
        ++st.steps;
        st.max_error = std::max(st.max_error, e);
        const double grow = e > 0.0 ? 0.9 * std::pow(e, -1.0 / 8.0) : 5.0;
        // Keep the regular step when this one was shortened to hit an output time.
        dt = std::max(last ? dt : 0.0, h * std::clamp(grow, 0.2, 5.0));
      } else {
        ++st.rejected;
        dt = h * std::clamp(0.9 * std::pow(e, -1.0 / 8.0), 0.2, 1.0);
        if (dt < opt.min_step) throw IntegratorError("step size underflow");
      }
    }
    if (obs) obs(target, x);
  }
  st.t_end = t;
  return st;
}

}  // namespace finsler
