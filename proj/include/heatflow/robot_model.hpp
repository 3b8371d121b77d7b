#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace heatflow {

enum class SystemKind { DoubleIntegrator, PlanarChain };

/// Rigid-body model with the control-affine structure
///   H(q) qdd + C(q, qd) = B u.
///
/// The planar chain is a serial pendulum with a point mass at the distal end
/// of each link; joint angle 0 points straight down and is measured relative
/// to the previous link, so q = 0 is the hanging equilibrium. The double
/// integrator has H = diag(masses) and C = 0.
struct RobotModel {
  SystemKind kind = SystemKind::DoubleIntegrator;
  int dof = 1;                 // N
  Eigen::VectorXd masses;      // kg, length N
  Eigen::VectorXd lengths;     // m, length N (chain only)
  double gravity = 9.81;       // m/s^2
  Eigen::MatrixXd actuation;   // B, N x m (identity by default)

  static RobotModel double_integrator(int dof, double mass = 1.0);
  static RobotModel planar_chain(const Eigen::VectorXd& masses,
                                 const Eigen::VectorXd& lengths,
                                 double gravity = 9.81);

  int inputs() const { return static_cast<int>(actuation.cols()); }
  int state_dim() const { return 2 * dof; }
  bool fully_actuated() const;  // B == I
};

/// State split into configuration and velocity halves.
struct StatePoint {
  Eigen::VectorXd position;  // x_P1
  Eigen::VectorXd velocity;  // x_P2

  static StatePoint from_state(const Eigen::VectorXd& x);
  Eigen::VectorXd to_state() const;
};

/// Control-affine pieces xdot = drift + input_map u, with the square
/// augmentation fbar = [complement | input_map] used for control extraction.
struct AffineDecomposition {
  Eigen::VectorXd drift;       // fd, 2N
  Eigen::MatrixXd input_map;   // F, 2N x m
  Eigen::MatrixXd complement;  // Fc, 2N x (2N - m)
  Eigen::MatrixXd fbar;        // [Fc | F], 2N x 2N
};

struct DecompositionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExtractedControl {
  Eigen::VectorXd u;   // m
  Eigen::VectorXd uc;  // 2N - m, infeasibility coordinate
};

struct ControlDerivatives {
  Eigen::MatrixXd du_dx;     // m x 2N
  Eigen::MatrixXd du_dxdot;  // m x 2N
};

struct InverseDynamicsDerivatives {
  Eigen::MatrixXd dtau_dq;    // N x N
  Eigen::MatrixXd dtau_dqd;   // N x N
  Eigen::MatrixXd dtau_dqdd;  // N x N, equals H(q)
};

Eigen::MatrixXd mass_matrix(const RobotModel& model, const Eigen::VectorXd& q);

/// u = H(q) qdd + C(q, qd) by recursive Newton-Euler on the planar chain.
Eigen::VectorXd inverse_dynamics(const RobotModel& model, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qd, const Eigen::VectorXd& qdd);

/// C(q, qd) = inverse_dynamics(q, qd, 0).
Eigen::VectorXd bias_term(const RobotModel& model, const Eigen::VectorXd& q,
                          const Eigen::VectorXd& qd);

/// Analytic Jacobians of inverse dynamics via the sensitivity recursion.
InverseDynamicsDerivatives inverse_dynamics_derivatives(const RobotModel& model,
                                                        const Eigen::VectorXd& q,
                                                        const Eigen::VectorXd& qd,
                                                        const Eigen::VectorXd& qdd);

/// Throws DecompositionError if fbar's reciprocal condition number < 1e-12.
AffineDecomposition affine_decomposition(const RobotModel& model, const StatePoint& x);

/// Extracted control for a state/state-derivative pair. Fully actuated
/// models take the inverse-dynamics shortcut; otherwise the fbar system
/// is solved.
ExtractedControl extract_control(const RobotModel& model, const StatePoint& x,
                                 const Eigen::VectorXd& xdot);

/// Always solves fbar [uc; u] = xdot - fd, regardless of actuation.
ExtractedControl extract_control_generic(const RobotModel& model, const StatePoint& x,
                                         const Eigen::VectorXd& xdot);

/// Partial derivatives of the extracted control with respect to x and xdot.
/// Only the fully actuated path (B = I) is supported.
ControlDerivatives control_derivatives(const RobotModel& model, const StatePoint& x,
                                       const Eigen::VectorXd& xdot);

/// World positions of each joint frame's distal endpoint. The double
/// integrator maps coordinate i to the point (q_i, 0).
std::vector<Eigen::Vector2d> forward_kinematics(const RobotModel& model,
                                                const Eigen::VectorXd& q);

/// 2 x N Jacobian of forward_kinematics(model, q)[frame] with respect to q.
Eigen::MatrixXd frame_jacobian(const RobotModel& model, const Eigen::VectorXd& q,
                               int frame);

}  // namespace heatflow
