#pragma once

#include <Eigen/Dense>
#include <vector>

#include "heatflow/robot_model.hpp"

namespace heatflow {

enum class CostKind { SquaredControl, WeightedSquaredControl, CustomStateCost };

struct CostSpec {
  CostKind kind = CostKind::SquaredControl;
  Eigen::VectorXd control_weights;  // m, strictly positive (weighted variant)
  Eigen::VectorXd state_weights;    // 2N (custom state cost)
  Eigen::VectorXd state_ref;        // 2N (custom state cost)
};

enum class ConstraintKind { StateBox, VelocityBox, InputBox, CircleObstacle };

/// One inequality family g <= 0 with penalty b(g) = k_cons g^2 S(c_cons g).
/// Boxes expand to two one-sided inequalities per coordinate with a finite
/// bound; circle obstacles contribute g = r_infl^2 - |p_frame(q) - center|^2
/// per attached frame, with r_infl = radius + clearance.
struct ConstraintSpec {
  ConstraintKind kind = ConstraintKind::StateBox;
  Eigen::VectorXd lower;  // boxes; +-inf marks an absent side
  Eigen::VectorXd upper;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;
  double clearance = 0.0;
  std::vector<int> frames;
  double k_cons = 1e4;
  double c_cons = 100.0;
};

enum class FlowMode { Phase1, Phase2, Legacy };

struct LagrangianSpec {
  CostSpec cost;
  double kd = 1e4;
  std::vector<ConstraintSpec> constraints;
  FlowMode mode = FlowMode::Phase2;
};

/// Smooth switch S(g) = 1/2 + 1/2 tanh(c_cons g), strictly increasing, (0,1).
double activation(double g, double c_cons);

/// Penalty b(g) = k_cons g^2 S(g).
double penalty(double g, const ConstraintSpec& spec);

/// Lagrangian at one state/state-derivative pair (2N vectors).
double lagrangian_value(const LagrangianSpec& spec, const RobotModel& model,
                        const Eigen::VectorXd& x, const Eigen::VectorXd& xdot);

struct Gradients {
  Eigen::VectorXd dx;     // dL/dx, 2N
  Eigen::VectorXd dxdot;  // dL/dxdot, 2N
};

/// Analytic partial derivatives of lagrangian_value.
Gradients el_gradients(const LagrangianSpec& spec, const RobotModel& model,
                       const Eigen::VectorXd& x, const Eigen::VectorXd& xdot);

/// Central finite-difference fallback, step 1e-6 (1 + |entry|).
Gradients el_gradients_fd(const LagrangianSpec& spec, const RobotModel& model,
                          const Eigen::VectorXd& x, const Eigen::VectorXd& xdot);

/// Largest constraint value g (signed); 0 when the spec has no constraints.
double max_constraint_violation(const LagrangianSpec& spec, const RobotModel& model,
                                const Eigen::VectorXd& x, const Eigen::VectorXd& xdot);

}  // namespace heatflow
