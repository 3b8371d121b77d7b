#include "heatflow/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace heatflow {

namespace {

double error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& y0,
                  const Eigen::VectorXd& y1, const OdeOptions& opts) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = opts.abs_tol + opts.rel_tol * std::max(std::abs(y0(i)), std::abs(y1(i)));
    const double e = err(i) / sc;
    acc += e * e;
  }
  return std::sqrt(acc / double(err.size()));
}

double min_step(double t0, double t1) {
  return 1e-14 * std::max(1.0, std::abs(t1 - t0));
}

}  // namespace

OdeStatus integrate_dopri5(const OdeRhs& rhs, Eigen::VectorXd& y, double t0, double t1,
                           const OdeOptions& opts, const OdeCallback& on_step,
                           OdeStats& stats) {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const Eigen::Index n = y.size();
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), yt(n), ynew(n);

  double t = t0;
  double h = opts.initial_step > 0 ? opts.initial_step : (t1 - t0) * 1e-6;
  const double hmin = min_step(t0, t1);
  bool just_rejected = false;

  rhs(t, y, k1);
  ++stats.rhs_evals;
  if (!k1.allFinite()) return OdeStatus::NonFinite;

  while (t < t1) {
    if (stats.accepted + stats.rejected >= opts.max_steps) return OdeStatus::MaxSteps;
    h = std::min(h, t1 - t);
    if (h < hmin) return OdeStatus::StepUnderflow;

    yt = y + h * a21 * k1;
    rhs(t + c2 * h, yt, k2);
    yt = y + h * (a31 * k1 + a32 * k2);
    rhs(t + c3 * h, yt, k3);
    yt = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * h, yt, k4);
    yt = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * h, yt, k5);
    yt = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + h, yt, k6);
    ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    rhs(t + h, ynew, k7);
    stats.rhs_evals += 6;

    const Eigen::VectorXd err =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = ynew.allFinite() ? error_norm(err, y, ynew, opts)
                                 : std::numeric_limits<double>::infinity();
    if (!std::isfinite(en)) en = std::numeric_limits<double>::infinity();

    if (en <= 1.0) {
      t += h;
      y.swap(ynew);
      k1.swap(k7);  // FSAL
      ++stats.accepted;
      if (on_step && !on_step(t, y, k1)) return OdeStatus::EarlyExit;
      const double fac = std::isinf(en) ? 0.2
                                        : std::clamp(0.9 * std::pow(std::max(en, 1e-10), -0.2),
                                                     0.2, just_rejected ? 1.0 : 5.0);
      h *= fac;
      just_rejected = false;
    } else {
      ++stats.rejected;
      just_rejected = true;
      const double fac =
          std::isinf(en) ? 0.2 : std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9);
      h *= fac;
    }
  }
  return OdeStatus::ReachedEnd;
}

namespace {

// Chebyshev recurrence data for one RKC2 stage count
struct RkcCoeffs {
  double w0 = 0, w1 = 0;
  std::vector<double> b, a;
  double beta = 0;  // stability interval on the negative real axis
};

RkcCoeffs rkc_coeffs(int s) {
  constexpr double damping = 2.0 / 13.0;
  RkcCoeffs c;
  c.w0 = 1.0 + damping / (double(s) * s);
  std::vector<double> T(s + 1), Tp(s + 1), Tpp(s + 1);
  T[0] = 1;
  T[1] = c.w0;
  Tp[0] = 0;
  Tp[1] = 1;
  Tpp[0] = 0;
  Tpp[1] = 0;
  for (int j = 2; j <= s; ++j) {
    T[j] = 2 * c.w0 * T[j - 1] - T[j - 2];
    Tp[j] = 2 * T[j - 1] + 2 * c.w0 * Tp[j - 1] - Tp[j - 2];
    Tpp[j] = 4 * Tp[j - 1] + 2 * c.w0 * Tpp[j - 1] - Tpp[j - 2];
  }
  c.w1 = Tp[s] / Tpp[s];
  c.b.assign(s + 1, 0.0);
  for (int j = 2; j <= s; ++j) c.b[j] = Tpp[j] / (Tp[j] * Tp[j]);
  c.b[0] = c.b[1] = c.b[2];
  c.a.assign(s + 1, 0.0);
  for (int j = 0; j <= s; ++j) c.a[j] = 1.0 - c.b[j] * T[j];
  c.beta = (c.w0 + 1.0) / c.w1;
  return c;
}

double rkc_beta(int s) {
  // (w0 + 1)/w1 without building the full tables
  constexpr double damping = 2.0 / 13.0;
  const double w0 = 1.0 + damping / (double(s) * s);
  double tm2 = 1, tm1 = w0, tpm2 = 0, tpm1 = 1, tppm2 = 0, tppm1 = 0;
  for (int j = 2; j <= s; ++j) {
    const double t = 2 * w0 * tm1 - tm2;
    const double tp = 2 * tm1 + 2 * w0 * tpm1 - tpm2;
    const double tpp = 4 * tpm1 + 2 * w0 * tppm1 - tppm2;
    tm2 = tm1; tm1 = t;
    tpm2 = tpm1; tpm1 = tp;
    tppm2 = tppm1; tppm1 = tpp;
  }
  return (w0 + 1.0) * tppm1 / tpm1;
}

int pick_stages(double h_rho, int cap) {
  // beta(s) ~ 0.653 s^2 with the standard damping; start near the answer
  int s = std::max(2, int(std::ceil(std::sqrt(std::max(h_rho, 0.0) / 0.653))));
  if (s > cap) return cap;
  while (s > 2 && rkc_beta(s - 1) >= h_rho) --s;
  while (s < cap && rkc_beta(s) < h_rho) ++s;
  return s;
}

// nonlinear power iteration for the Jacobian spectral radius, as used by
// classic RKC codes; deterministic for identical inputs
double estimate_rho(const OdeRhs& rhs, double t, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& fy, OdeStats& stats) {
  Eigen::VectorXd v = fy;
  if (v.norm() < 1e-30) {
    v = Eigen::VectorXd::Ones(y.size());
    for (Eigen::Index i = 1; i < v.size(); i += 2) v(i) = -1.0;
  }
  const double delta = std::sqrt(std::numeric_limits<double>::epsilon()) * (y.norm() + 1.0);
  Eigen::VectorXd yp(y.size()), w(y.size());
  double lam = 0.0;
  for (int it = 0; it < 50; ++it) {
    const double nv = v.norm();
    if (nv == 0.0) break;
    yp = y + (delta / nv) * v;
    rhs(t, yp, w);
    ++stats.rhs_evals;
    w = (w - fy) / delta;
    const double nl = w.norm();
    if (!std::isfinite(nl)) break;
    if (std::abs(nl - lam) <= 0.005 * nl) {
      lam = nl;
      break;
    }
    lam = nl;
    v = w;
  }
  return 1.2 * lam;
}

}  // namespace

OdeStatus integrate_rkc2(const OdeRhs& rhs, Eigen::VectorXd& y, double t0, double t1,
                         const OdeOptions& opts, const OdeCallback& on_step,
                         OdeStats& stats) {
  const Eigen::Index n = y.size();
  Eigen::VectorXd f0(n), fnew(n), yjm2(n), yjm1(n), yj(n), ftmp(n), ynew(n);

  double t = t0;
  double h = opts.initial_step > 0 ? opts.initial_step : (t1 - t0) * 1e-6;
  const double hmin = min_step(t0, t1);

  rhs(t, y, f0);
  ++stats.rhs_evals;
  if (!f0.allFinite()) return OdeStatus::NonFinite;

  double rho = estimate_rho(rhs, t, y, f0, stats);
  long steps_since_rho = 0;
  bool just_rejected = false;

  while (t < t1) {
    if (stats.accepted + stats.rejected >= opts.max_steps) return OdeStatus::MaxSteps;
    h = std::min(h, t1 - t);
    if (h < hmin) return OdeStatus::StepUnderflow;

    int s = pick_stages(h * rho, opts.max_stages);
    if (rkc_beta(s) < h * rho) {
      h = 0.95 * rkc_beta(s) / rho;
      if (h < hmin) return OdeStatus::StepUnderflow;
    }
    const RkcCoeffs co = rkc_coeffs(s);

    yjm2 = y;
    yjm1 = y + co.b[1] * co.w1 * h * f0;
    for (int j = 2; j <= s; ++j) {
      const double mu = 2 * co.b[j] * co.w0 / co.b[j - 1];
      const double nu = -co.b[j] / co.b[j - 2];
      const double mut = 2 * co.b[j] * co.w1 / co.b[j - 1];
      const double gt = -co.a[j - 1] * mut;
      rhs(t, yjm1, ftmp);
      yj = (1.0 - mu - nu) * y + mu * yjm1 + nu * yjm2 + mut * h * ftmp + gt * h * f0;
      yjm2.swap(yjm1);
      yjm1.swap(yj);
    }
    ynew.swap(yjm1);
    stats.rhs_evals += s - 1;

    rhs(t, ynew, fnew);
    ++stats.rhs_evals;

    double en;
    if (!ynew.allFinite() || !fnew.allFinite()) {
      en = std::numeric_limits<double>::infinity();
    } else {
      const Eigen::VectorXd err = 0.8 * (y - ynew) + 0.4 * h * (f0 + fnew);
      en = error_norm(err, y, ynew, opts);
      if (!std::isfinite(en)) en = std::numeric_limits<double>::infinity();
    }

    if (en <= 1.0) {
      t += h;
      y.swap(ynew);
      f0.swap(fnew);
      ++stats.accepted;
      ++steps_since_rho;
      if (on_step && !on_step(t, y, f0)) return OdeStatus::EarlyExit;
      if (steps_since_rho >= 25) {
        rho = estimate_rho(rhs, t, y, f0, stats);
        steps_since_rho = 0;
      }
      const double fac = std::clamp(0.8 * std::pow(std::max(en, 1e-10), -1.0 / 3.0), 0.2,
                                    just_rejected ? 1.0 : 5.0);
      h *= fac;
      just_rejected = false;
    } else {
      ++stats.rejected;
      just_rejected = true;
      const double fac =
          std::isinf(en) ? 0.2 : std::clamp(0.8 * std::pow(en, -1.0 / 3.0), 0.1, 0.9);
      h *= fac;
      rho = estimate_rho(rhs, t, y, f0, stats);
      steps_since_rho = 0;
    }
  }
  return OdeStatus::ReachedEnd;
}

}  // namespace heatflow
