#pragma once

#include <Eigen/Dense>
#include <functional>

namespace heatflow {

/// Right-hand side evaluated into `out` (pre-sized).
using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& out)>;

/// Called after every accepted step with the new state and its RHS.
/// Returning false stops the integration (EarlyExit).
using OdeCallback = std::function<bool(double t, const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& f)>;

enum class OdeStatus { ReachedEnd, EarlyExit, StepUnderflow, MaxSteps, NonFinite };

struct OdeOptions {
  double rel_tol = 1e-7;
  double abs_tol = 1e-9;
  long max_steps = 2'000'000;   // accepted + rejected
  double initial_step = 0.0;    // 0 = pick automatically
  int max_stages = 512;         // RKC stage cap
};

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
};

/// Classic Dormand-Prince 5(4) embedded pair with FSAL.
OdeStatus integrate_dopri5(const OdeRhs& rhs, Eigen::VectorXd& y, double t0, double t1,
                           const OdeOptions& opts, const OdeCallback& on_step,
                           OdeStats& stats);

/// RKC2: second-order stabilized explicit Runge-Kutta-Chebyshev scheme with
/// an embedded error estimate. The stage count per step is chosen from a
/// power-iteration estimate of the Jacobian spectral radius so the stability
/// interval covers h*rho; suited to the mildly stiff parabolic systems the
/// method of lines produces.
OdeStatus integrate_rkc2(const OdeRhs& rhs, Eigen::VectorXd& y, double t0, double t1,
                         const OdeOptions& opts, const OdeCallback& on_step,
                         OdeStats& stats);

}  // namespace heatflow
