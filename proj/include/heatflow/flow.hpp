#pragma once

#include <Eigen/Dense>
#include <vector>

#include "heatflow/lagrangian.hpp"
#include "heatflow/robot_model.hpp"
#include "heatflow/spectral.hpp"

namespace heatflow {

/// Homotopy slice: node values of x(t_j, s) at the current flow parameter.
/// Rows 0 and p stay pinned to x0 and xf throughout the evolution.
struct Trajectory {
  SpectralGrid grid;
  Eigen::MatrixXd values;  // (p+1) x 2N
  Eigen::VectorXd x0, xf;  // boundary states, 2N
};

enum class Stepper { Rkc2, Dopri5 };

struct SolverConfig {
  double s_max = 10.0;
  double rel_tol = 1e-7;
  double abs_tol = 1e-9;
  long max_steps = 2'000'000;
  double initial_step = 0.0;      // 0 = automatic
  double steady_state_tol = 0.0;  // 0 = no early exit, integrate to s_max
  bool parallel_nodes = false;
  Stepper stepper = Stepper::Rkc2;
  int max_stages = 512;
};

enum class FlowStatus { ReachedSMax, SteadyState, StepUnderflow, MaxSteps, NonFinite };

struct FlowRecord {
  double s = 0.0;
  double action = 0.0;
  double rhs_norm = 0.0;       // infinity norm of the AGHF RHS
  double violation = 0.0;      // largest constraint value g
  double defect_l2sq = 0.0;    // quadrature of |xdot_P1 - x_P2|^2
};

struct FlowTrace {
  std::vector<FlowRecord> records;  // s strictly increasing, record 0 at s = 0
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
  double wall_time = 0.0;
  FlowStatus status = FlowStatus::ReachedSMax;
  // worst per-step action increase beyond the monotone slack
  // A_next <= A_prev (1 + 1e-8) + 1e-10, relative to A_prev; 0 when monotone
  double max_action_increase = 0.0;
};

/// AGHF right-hand side on the grid: at each node, M^-1 (d/dt[dL/dxdot] - dL/dx),
/// with the time derivative realized through the grid's differentiation
/// matrix in its quadrature-adjoint form so the node system is the exact
/// weighted gradient flow of the discretized action. Rows 0 and p are zero.
Eigen::MatrixXd aghf_rhs(const LagrangianSpec& spec, const RobotModel& model,
                         const Trajectory& traj);

/// Quadrature of the Lagrangian over the trajectory nodes.
double action_functional(const LagrangianSpec& spec, const RobotModel& model,
                         const Trajectory& traj);

/// Largest constraint value over all nodes.
double trajectory_violation(const LagrangianSpec& spec, const RobotModel& model,
                            const Trajectory& traj);

/// Infinity norm of the node feasibility defect xdot_P1 - x_P2.
double trajectory_defect(const RobotModel& model, const Trajectory& traj);

/// Evolves the trajectory in s from 0 to s_max (or steady state).
std::pair<Trajectory, FlowTrace> flow(const LagrangianSpec& spec, const RobotModel& model,
                                      const Trajectory& initial, const SolverConfig& config);

/// Default initial guess: straight line in configuration with spectral
/// velocities; rows 0 and p are overwritten with the exact boundary states.
Trajectory straight_line_guess(const SpectralGrid& grid, const Eigen::VectorXd& x0,
                               const Eigen::VectorXd& xf);

/// Re-samples a trajectory onto another grid (barycentric interpolation,
/// boundary rows pinned).
Trajectory resample(const Trajectory& traj, const SpectralGrid& grid);

}  // namespace heatflow
