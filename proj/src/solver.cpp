#include "heatflow/solver.hpp"

namespace heatflow {

namespace {

SolveStatus from_flow(FlowStatus st, bool require_steady) {
  switch (st) {
    case FlowStatus::SteadyState: return SolveStatus::Ok;
    case FlowStatus::ReachedSMax:
      return require_steady ? SolveStatus::Phase2Stalled : SolveStatus::Ok;
    case FlowStatus::StepUnderflow: return SolveStatus::StepUnderflow;
    case FlowStatus::MaxSteps: return SolveStatus::MaxSteps;
    case FlowStatus::NonFinite: return SolveStatus::NonFinite;
  }
  return SolveStatus::NonFinite;
}

}  // namespace

SolveOutcome solve_phase1_phase2(const SolveProblem& problem) {
  SolveOutcome out;

  const SpectralGrid grid1 = build_grid(problem.phase1.degree, problem.horizon);
  const SpectralGrid grid2 = build_grid(problem.phase2.degree, problem.horizon);

  Trajectory guess = problem.initial_guess
                         ? resample(*problem.initial_guess, grid1)
                         : straight_line_guess(grid1, problem.x0, problem.xf);

  out.initial_violation = trajectory_violation(problem.phase1.spec, problem.model, guess);

  Trajectory phase2_start = guess;
  if (out.initial_violation <= problem.feasibility_tol) {
    out.phase1_skipped = true;
    out.post_phase1_violation = out.initial_violation;
  } else {
    auto [traj1, trace1] = flow(problem.phase1.spec, problem.model, guess, problem.phase1.solver);
    out.phase1_trace = std::move(trace1);
    out.wall_phase1 = out.phase1_trace.wall_time;
    phase2_start = std::move(traj1);
    const SolveStatus st1 = from_flow(out.phase1_trace.status, false);
    if (st1 != SolveStatus::Ok) {
      out.status = st1;
      out.trajectory = phase2_start;
      return out;
    }
    out.post_phase1_violation =
        trajectory_violation(problem.phase1.spec, problem.model, phase2_start);
    if (out.post_phase1_violation > problem.feasibility_tol) {
      out.status = SolveStatus::Phase1Failed;
      out.trajectory = phase2_start;
      return out;
    }
  }

  if (problem.phase2.degree != problem.phase1.degree)
    phase2_start = resample(phase2_start, grid2);

  auto [traj2, trace2] =
      flow(problem.phase2.spec, problem.model, phase2_start, problem.phase2.solver);
  out.phase2_trace = std::move(trace2);
  out.wall_phase2 = out.phase2_trace.wall_time;
  out.trajectory = std::move(traj2);
  out.status = from_flow(out.phase2_trace.status, problem.require_steady_state);
  if (!out.trajectory.values.allFinite()) out.status = SolveStatus::NonFinite;

  out.final_violation = trajectory_violation(problem.phase2.spec, problem.model, out.trajectory);
  out.final_action = action_functional(problem.phase2.spec, problem.model, out.trajectory);
  out.final_defect = trajectory_defect(problem.model, out.trajectory);
  return out;
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Ok: return "ok";
    case SolveStatus::Phase1Failed: return "phase1_failed";
    case SolveStatus::Phase2Stalled: return "phase2_stalled";
    case SolveStatus::StepUnderflow: return "step_underflow";
    case SolveStatus::MaxSteps: return "max_steps";
    case SolveStatus::NonFinite: return "non_finite";
  }
  return "unknown";
}

const char* to_string(FlowStatus status) {
  switch (status) {
    case FlowStatus::ReachedSMax: return "reached_s_max";
    case FlowStatus::SteadyState: return "steady_state";
    case FlowStatus::StepUnderflow: return "step_underflow";
    case FlowStatus::MaxSteps: return "max_steps";
    case FlowStatus::NonFinite: return "non_finite";
  }
  return "unknown";
}

}  // namespace heatflow
