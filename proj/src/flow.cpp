#include "heatflow/flow.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "heatflow/ode.hpp"

namespace heatflow {

namespace {

void check_trajectory(const Trajectory& traj) {
  const int n = traj.grid.num_nodes();
  if (traj.values.rows() != n)
    throw std::invalid_argument("trajectory: one row per grid node required");
  if (!traj.values.allFinite())
    throw std::invalid_argument("trajectory: non-finite values");
  if ((traj.values.row(0).transpose() - traj.x0).lpNorm<Eigen::Infinity>() != 0.0 ||
      (traj.values.row(n - 1).transpose() - traj.xf).lpNorm<Eigen::Infinity>() != 0.0)
    throw std::invalid_argument("trajectory: boundary rows must equal x0 and xf");
}

// splits [1, n-2] across threads; per-node work is pure and rows are disjoint
void for_interior_nodes(int n, bool parallel, const std::function<void(int)>& fn) {
  if (!parallel || n < 16) {
    for (int j = 1; j < n - 1; ++j) fn(j);
    return;
  }
  const unsigned hw = std::max(2u, std::thread::hardware_concurrency());
  const int workers = std::min<int>(hw, n - 2);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int j = 1 + w; j < n - 1; j += workers) fn(j);
    });
  }
  for (auto& th : pool) th.join();
}

struct RhsWorkspace {
  Eigen::MatrixXd adjoint_diff;  // -diag(1/w) D^T diag(w)
  Eigen::MatrixXd xdot, dldx, dldxd, rhs;
};

RhsWorkspace make_workspace(const SpectralGrid& grid, int state_dim) {
  RhsWorkspace ws;
  const int n = grid.num_nodes();
  ws.adjoint_diff = -(grid.quad_weights.cwiseInverse().asDiagonal() *
                      grid.diff_matrix.transpose() * grid.quad_weights.asDiagonal());
  ws.xdot.resize(n, state_dim);
  ws.dldx.resize(n, state_dim);
  ws.dldxd.resize(n, state_dim);
  ws.rhs.resize(n, state_dim);
  return ws;
}

void aghf_rhs_into(const LagrangianSpec& spec, const RobotModel& model,
                   const SpectralGrid& grid, const Eigen::MatrixXd& values,
                   RhsWorkspace& ws, bool parallel) {
  const int n = grid.num_nodes();
  ws.xdot.noalias() = grid.diff_matrix * values;
  for_interior_nodes(n, parallel, [&](int j) {
    const Gradients g = el_gradients(spec, model, values.row(j), ws.xdot.row(j));
    ws.dldx.row(j) = g.dx;
    ws.dldxd.row(j) = g.dxdot;
  });
  // boundary rows participate in the adjoint derivative of dL/dxdot
  for (int j : {0, n - 1}) {
    const Gradients g = el_gradients(spec, model, values.row(j), ws.xdot.row(j));
    ws.dldx.row(j) = g.dx;
    ws.dldxd.row(j) = g.dxdot;
  }
  ws.rhs.noalias() = ws.adjoint_diff * ws.dldxd;
  ws.rhs -= ws.dldx;
  if (spec.mode == FlowMode::Legacy) {
    const int nd = model.dof;
    for (int j = 1; j < n - 1; ++j) {
      // M = G = diag(kd I, H^T H)
      ws.rhs.row(j).head(nd) /= spec.kd;
      const Eigen::MatrixXd h = mass_matrix(model, values.row(j).head(nd));
      ws.rhs.row(j).tail(nd) =
          (h.transpose() * h).ldlt().solve(ws.rhs.row(j).tail(nd).transpose()).transpose();
    }
  }
  ws.rhs.row(0).setZero();
  ws.rhs.row(n - 1).setZero();
}

}  // namespace

Eigen::MatrixXd aghf_rhs(const LagrangianSpec& spec, const RobotModel& model,
                         const Trajectory& traj) {
  check_trajectory(traj);
  RhsWorkspace ws = make_workspace(traj.grid, int(traj.values.cols()));
  aghf_rhs_into(spec, model, traj.grid, traj.values, ws, false);
  if (!ws.rhs.allFinite()) throw std::runtime_error("aghf_rhs: non-finite right-hand side");
  return ws.rhs;
}

double action_functional(const LagrangianSpec& spec, const RobotModel& model,
                         const Trajectory& traj) {
  const int n = traj.grid.num_nodes();
  const Eigen::MatrixXd xdot = traj.grid.diff_matrix * traj.values;
  Eigen::VectorXd integrand(n);
  for (int j = 0; j < n; ++j)
    integrand(j) = lagrangian_value(spec, model, traj.values.row(j), xdot.row(j));
  return quadrature(traj.grid, integrand);
}

double trajectory_violation(const LagrangianSpec& spec, const RobotModel& model,
                            const Trajectory& traj) {
  if (spec.constraints.empty()) return 0.0;
  const int n = traj.grid.num_nodes();
  const Eigen::MatrixXd xdot = traj.grid.diff_matrix * traj.values;
  double worst = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j)
    worst = std::max(worst,
                     max_constraint_violation(spec, model, traj.values.row(j), xdot.row(j)));
  return worst;
}

double trajectory_defect(const RobotModel& model, const Trajectory& traj) {
  const int nd = model.dof;
  const Eigen::MatrixXd xdot = traj.grid.diff_matrix * traj.values;
  return (xdot.leftCols(nd) - traj.values.rightCols(nd)).lpNorm<Eigen::Infinity>();
}

namespace {

double defect_l2sq(const RobotModel& model, const SpectralGrid& grid,
                   const Eigen::MatrixXd& values, const Eigen::MatrixXd& xdot) {
  const int nd = model.dof;
  const Eigen::MatrixXd d = xdot.leftCols(nd) - values.rightCols(nd);
  return quadrature(grid, d.rowwise().squaredNorm());
}

}  // namespace

std::pair<Trajectory, FlowTrace> flow(const LagrangianSpec& spec, const RobotModel& model,
                                      const Trajectory& initial, const SolverConfig& config) {
  check_trajectory(initial);
  if (!(config.s_max > 0.0)) throw std::invalid_argument("flow: s_max must be > 0");

  const auto t_start = std::chrono::steady_clock::now();
  const int n = initial.grid.num_nodes();
  const int sd = int(initial.values.cols());

  Trajectory traj = initial;
  FlowTrace trace;
  RhsWorkspace ws = make_workspace(initial.grid, sd);

  auto record = [&](double s, const Eigen::MatrixXd& values, double rhs_norm) {
    Trajectory tmp{traj.grid, values, traj.x0, traj.xf};
    FlowRecord rec;
    rec.s = s;
    rec.action = action_functional(spec, model, tmp);
    rec.rhs_norm = rhs_norm;
    rec.violation = trajectory_violation(spec, model, tmp);
    rec.defect_l2sq = defect_l2sq(model, traj.grid, values, traj.grid.diff_matrix * values);
    if (!trace.records.empty()) {
      const double prev = trace.records.back().action;
      const double bound = prev * (1.0 + 1e-8) + 1e-10;
      const double rel = (rec.action - bound) / std::max(std::abs(prev), 1e-30);
      trace.max_action_increase = std::max(trace.max_action_increase, rel);
    }
    trace.records.push_back(rec);
  };

  aghf_rhs_into(spec, model, traj.grid, traj.values, ws, config.parallel_nodes);
  if (!ws.rhs.allFinite()) {
    trace.status = FlowStatus::NonFinite;
    return {traj, trace};
  }
  const double rhs0 = ws.rhs.lpNorm<Eigen::Infinity>();
  record(0.0, traj.values, rhs0);
  if (config.steady_state_tol > 0.0 && rhs0 <= config.steady_state_tol) {
    trace.status = FlowStatus::SteadyState;
    return {traj, trace};
  }

  Eigen::VectorXd y = traj.values.reshaped();
  Eigen::MatrixXd vm(n, sd);

  OdeRhs rhs_fn = [&](double, const Eigen::VectorXd& yy, Eigen::VectorXd& out) {
    vm = yy.reshaped(n, sd);
    aghf_rhs_into(spec, model, traj.grid, vm, ws, config.parallel_nodes);
    out = ws.rhs.reshaped();
  };

  bool steady = false;
  bool nonfinite = false;
  OdeCallback on_step = [&](double s, const Eigen::VectorXd& yy, const Eigen::VectorXd& ff) {
    if (!yy.allFinite()) {
      nonfinite = true;
      return false;
    }
    const Eigen::MatrixXd values = yy.reshaped(n, sd);
    const double rn = ff.lpNorm<Eigen::Infinity>();
    record(s, values, rn);
    if (config.steady_state_tol > 0.0 && rn <= config.steady_state_tol) {
      steady = true;
      return false;
    }
    return true;
  };

  OdeOptions opts;
  opts.rel_tol = config.rel_tol;
  opts.abs_tol = config.abs_tol;
  opts.max_steps = config.max_steps;
  opts.initial_step = config.initial_step;
  opts.max_stages = config.max_stages;

  OdeStats stats;
  const OdeStatus st =
      (config.stepper == Stepper::Rkc2)
          ? integrate_rkc2(rhs_fn, y, 0.0, config.s_max, opts, on_step, stats)
          : integrate_dopri5(rhs_fn, y, 0.0, config.s_max, opts, on_step, stats);

  traj.values = y.reshaped(n, sd);
  trace.accepted = stats.accepted;
  trace.rejected = stats.rejected;
  trace.rhs_evals = stats.rhs_evals;
  switch (st) {
    case OdeStatus::ReachedEnd: trace.status = FlowStatus::ReachedSMax; break;
    case OdeStatus::EarlyExit:
      trace.status = nonfinite ? FlowStatus::NonFinite : FlowStatus::SteadyState;
      break;
    case OdeStatus::StepUnderflow: trace.status = FlowStatus::StepUnderflow; break;
    case OdeStatus::MaxSteps: trace.status = FlowStatus::MaxSteps; break;
    case OdeStatus::NonFinite: trace.status = FlowStatus::NonFinite; break;
  }
  (void)steady;
  trace.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return {traj, trace};
}

Trajectory straight_line_guess(const SpectralGrid& grid, const Eigen::VectorXd& x0,
                               const Eigen::VectorXd& xf) {
  if (x0.size() != xf.size() || x0.size() % 2 != 0)
    throw std::invalid_argument("straight_line_guess: boundary states must match, even dim");
  const int n = grid.num_nodes();
  const int nd = int(x0.size()) / 2;
  Trajectory traj;
  traj.grid = grid;
  traj.x0 = x0;
  traj.xf = xf;
  traj.values.resize(n, 2 * nd);
  for (int j = 0; j < n; ++j) {
    const double a = grid.nodes(j) / grid.horizon;
    traj.values.row(j).head(nd) = (1.0 - a) * x0.head(nd) + a * xf.head(nd);
  }
  traj.values.rightCols(nd) = grid.diff_matrix * traj.values.leftCols(nd);
  traj.values.row(0) = x0;
  traj.values.row(n - 1) = xf;
  return traj;
}

Trajectory resample(const Trajectory& traj, const SpectralGrid& grid) {
  Trajectory out;
  out.grid = grid;
  out.x0 = traj.x0;
  out.xf = traj.xf;
  const int n = grid.num_nodes();
  out.values.resize(n, traj.values.cols());
  for (int j = 0; j < n; ++j)
    out.values.row(j) = interpolate(traj.grid, traj.values, grid.nodes(j));
  out.values.row(0) = traj.x0;
  out.values.row(n - 1) = traj.xf;
  return out;
}

}  // namespace heatflow
