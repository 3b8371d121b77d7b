#pragma once

#include <optional>

#include "heatflow/flow.hpp"

namespace heatflow {

struct PhaseConfig {
  LagrangianSpec spec;
  SolverConfig solver;
  int degree = 12;  // collocation degree for this phase
};

enum class SolveStatus {
  Ok,
  Phase1Failed,     // post-Phase-1 violation still above feasibility_tol
  Phase2Stalled,    // steady state required but s_max exhausted
  StepUnderflow,    // stiffness: step size collapsed
  MaxSteps,
  NonFinite,
};

struct SolveOutcome {
  Trajectory trajectory;            // final (Phase-2 output)
  FlowTrace phase1_trace;           // empty records if Phase 1 was skipped
  FlowTrace phase2_trace;
  bool phase1_skipped = false;
  SolveStatus status = SolveStatus::Ok;
  double initial_violation = 0.0;
  double post_phase1_violation = 0.0;
  double final_violation = 0.0;
  double final_action = 0.0;        // Phase-2 functional on the final trajectory
  double final_defect = 0.0;        // infinity norm of xdot_P1 - x_P2 at nodes
  double wall_phase1 = 0.0;
  double wall_phase2 = 0.0;
};

struct SolveProblem {
  RobotModel model;
  Eigen::VectorXd x0, xf;
  double horizon = 1.0;
  PhaseConfig phase1;
  PhaseConfig phase2;
  double feasibility_tol = 1e-3;
  bool require_steady_state = false;
  std::optional<Trajectory> initial_guess;
};

/// Runs the two-phase schedule: skips Phase 1 when the guess already
/// satisfies all constraints within feasibility_tol, otherwise flows the
/// Phase-1 functional first and asserts feasibility before starting Phase 2.
SolveOutcome solve_phase1_phase2(const SolveProblem& problem);

const char* to_string(SolveStatus status);
const char* to_string(FlowStatus status);

}  // namespace heatflow
