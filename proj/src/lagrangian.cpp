#include "heatflow/lagrangian.hpp"

#include <cmath>
#include <limits>

namespace heatflow {

namespace {

double activation_slope(double g, double c) {
  const double t = std::tanh(c * g);
  return 0.5 * c * (1.0 - t * t);
}

double penalty_slope(double g, double k, double c) {
  return k * (2.0 * g * activation(g, c) + g * g * activation_slope(g, c));
}

bool uses_control_cost(const LagrangianSpec& spec) {
  if (spec.mode == FlowMode::Phase1) return false;
  if (spec.mode == FlowMode::Legacy) return true;
  return spec.cost.kind == CostKind::SquaredControl ||
         spec.cost.kind == CostKind::WeightedSquaredControl;
}

bool has_input_constraints(const LagrangianSpec& spec) {
  for (const auto& c : spec.constraints)
    if (c.kind == ConstraintKind::InputBox) return true;
  return false;
}

// accumulates the penalty value and, when grads is non-null, its gradient
// contribution for a box over the vector `v` whose sensitivity w.r.t. the
// (x, xdot) pair is encoded by dv_dx/dv_dxdot (null for direct coordinates)
struct Accum {
  double value = 0.0;
  Gradients* grads = nullptr;
};

void box_penalty_direct(Accum& acc, const ConstraintSpec& c, const Eigen::VectorXd& v,
                        int offset) {
  const double inf = std::numeric_limits<double>::infinity();
  for (int i = 0; i < v.size(); ++i) {
    const double up = (c.upper.size() > i) ? c.upper(i) : inf;
    const double lo = (c.lower.size() > i) ? c.lower(i) : -inf;
    if (std::isfinite(up)) {
      const double g = v(i) - up;
      acc.value += penalty(g, c);
      if (acc.grads) acc.grads->dx(offset + i) += penalty_slope(g, c.k_cons, c.c_cons);
    }
    if (std::isfinite(lo)) {
      const double g = lo - v(i);
      acc.value += penalty(g, c);
      if (acc.grads) acc.grads->dx(offset + i) -= penalty_slope(g, c.k_cons, c.c_cons);
    }
  }
}

}  // namespace

double activation(double g, double c_cons) { return 0.5 + 0.5 * std::tanh(c_cons * g); }

double penalty(double g, const ConstraintSpec& spec) {
  return spec.k_cons * g * g * activation(g, spec.c_cons);
}

namespace {

// single pass computing the Lagrangian and optionally its gradients
double evaluate(const LagrangianSpec& spec, const RobotModel& model,
                const Eigen::VectorXd& x, const Eigen::VectorXd& xdot, Gradients* grads) {
  const int n = model.dof;
  if (x.size() != 2 * n || xdot.size() != 2 * n)
    throw std::invalid_argument("lagrangian: state dimension mismatch");
  if (grads) {
    grads->dx = Eigen::VectorXd::Zero(2 * n);
    grads->dxdot = Eigen::VectorXd::Zero(2 * n);
  }
  const StatePoint sp = StatePoint::from_state(x);
  double value = 0.0;

  // kd |xdot_P1 - x_P2|^2 (in legacy mode this is the k-weighted top block
  // of the Remark-6 quadratic form)
  const Eigen::VectorXd defect = xdot.head(n) - sp.velocity;
  value += spec.kd * defect.squaredNorm();
  if (grads) {
    grads->dxdot.head(n) += 2.0 * spec.kd * defect;
    grads->dx.tail(n) -= 2.0 * spec.kd * defect;
  }

  const bool need_u = uses_control_cost(spec) || has_input_constraints(spec);
  Eigen::VectorXd u;
  ControlDerivatives cd;
  if (need_u) {
    if (grads && !model.fully_actuated())
      throw std::invalid_argument("el_gradients: control-dependent terms need B = I");
    if (model.fully_actuated()) {
      u = inverse_dynamics(model, sp.position, sp.velocity, xdot.tail(n));
    } else {
      u = extract_control_generic(model, sp, xdot).u;
    }
    if (grads) cd = control_derivatives(model, sp, xdot);
  }

  if (spec.mode == FlowMode::Legacy) {
    // Remark-6 quadratic form (xdot - fd)^T G (xdot - fd) with
    // G = diag(kd I, H^T H); the top block was added above, the bottom block
    // equals |H xdot_P2 + C|^2. The value is computed through the affine
    // decomposition as an independent route; the gradient uses the
    // inverse-dynamics identity H xdot_P2 + C = u (B = I).
    const AffineDecomposition d = affine_decomposition(model, sp);
    const Eigen::MatrixXd h = mass_matrix(model, sp.position);
    const Eigen::VectorXd resid = xdot.tail(n) - d.drift.tail(n);
    value += (h * resid).squaredNorm();
    if (grads) {
      grads->dx += 2.0 * (u.transpose() * cd.du_dx).transpose();
      grads->dxdot += 2.0 * (u.transpose() * cd.du_dxdot).transpose();
    }
  } else if (spec.mode == FlowMode::Phase2) {
    switch (spec.cost.kind) {
      case CostKind::SquaredControl:
        value += u.squaredNorm();
        if (grads) {
          grads->dx += 2.0 * (u.transpose() * cd.du_dx).transpose();
          grads->dxdot += 2.0 * (u.transpose() * cd.du_dxdot).transpose();
        }
        break;
      case CostKind::WeightedSquaredControl: {
        const Eigen::VectorXd wu = spec.cost.control_weights.cwiseProduct(u);
        value += wu.dot(u);
        if (grads) {
          grads->dx += 2.0 * (wu.transpose() * cd.du_dx).transpose();
          grads->dxdot += 2.0 * (wu.transpose() * cd.du_dxdot).transpose();
        }
        break;
      }
      case CostKind::CustomStateCost: {
        const Eigen::VectorXd dev = x - spec.cost.state_ref;
        value += spec.cost.state_weights.cwiseProduct(dev).dot(dev);
        if (grads) grads->dx += 2.0 * spec.cost.state_weights.cwiseProduct(dev);
        break;
      }
    }
  }

  Accum acc{0.0, grads};
  for (const auto& c : spec.constraints) {
    switch (c.kind) {
      case ConstraintKind::StateBox:
        box_penalty_direct(acc, c, sp.position, 0);
        break;
      case ConstraintKind::VelocityBox:
        box_penalty_direct(acc, c, sp.velocity, n);
        break;
      case ConstraintKind::InputBox: {
        const double inf = std::numeric_limits<double>::infinity();
        for (int i = 0; i < u.size(); ++i) {
          const double up = (c.upper.size() > i) ? c.upper(i) : inf;
          const double lo = (c.lower.size() > i) ? c.lower(i) : -inf;
          for (int side = 0; side < 2; ++side) {
            const double bound = side ? lo : up;
            if (!std::isfinite(bound)) continue;
            const double sign = side ? -1.0 : 1.0;
            const double g = sign * (u(i) - bound);
            acc.value += penalty(g, c);
            if (grads) {
              const double d = sign * penalty_slope(g, c.k_cons, c.c_cons);
              grads->dx += d * cd.du_dx.row(i).transpose();
              grads->dxdot += d * cd.du_dxdot.row(i).transpose();
            }
          }
        }
        break;
      }
      case ConstraintKind::CircleObstacle: {
        const auto pts = forward_kinematics(model, sp.position);
        const double rinfl = c.radius + c.clearance;
        for (int fr : c.frames) {
          const Eigen::Vector2d diff = pts.at(fr) - c.center;
          const double g = rinfl * rinfl - diff.squaredNorm();
          acc.value += penalty(g, c);
          if (grads) {
            const double d = penalty_slope(g, c.k_cons, c.c_cons);
            const Eigen::MatrixXd jac = frame_jacobian(model, sp.position, fr);
            grads->dx.head(n) += d * (-2.0 * (diff.transpose() * jac)).transpose();
          }
        }
        break;
      }
    }
  }
  return value + acc.value;
}

}  // namespace

double lagrangian_value(const LagrangianSpec& spec, const RobotModel& model,
                        const Eigen::VectorXd& x, const Eigen::VectorXd& xdot) {
  return evaluate(spec, model, x, xdot, nullptr);
}

Gradients el_gradients(const LagrangianSpec& spec, const RobotModel& model,
                       const Eigen::VectorXd& x, const Eigen::VectorXd& xdot) {
  Gradients g;
  evaluate(spec, model, x, xdot, &g);
  return g;
}

Gradients el_gradients_fd(const LagrangianSpec& spec, const RobotModel& model,
                          const Eigen::VectorXd& x, const Eigen::VectorXd& xdot) {
  Gradients g;
  g.dx.resize(x.size());
  g.dxdot.resize(xdot.size());
  Eigen::VectorXd xp = x, xd = xdot;
  for (int i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * (1.0 + std::abs(x(i)));
    xp(i) = x(i) + h;
    const double fp = lagrangian_value(spec, model, xp, xdot);
    xp(i) = x(i) - h;
    const double fm = lagrangian_value(spec, model, xp, xdot);
    xp(i) = x(i);
    g.dx(i) = (fp - fm) / (2.0 * h);
  }
  for (int i = 0; i < xdot.size(); ++i) {
    const double h = 1e-6 * (1.0 + std::abs(xdot(i)));
    xd(i) = xdot(i) + h;
    const double fp = lagrangian_value(spec, model, x, xd);
    xd(i) = xdot(i) - h;
    const double fm = lagrangian_value(spec, model, x, xd);
    xd(i) = xdot(i);
    g.dxdot(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

double max_constraint_violation(const LagrangianSpec& spec, const RobotModel& model,
                                const Eigen::VectorXd& x, const Eigen::VectorXd& xdot) {
  if (spec.constraints.empty()) return 0.0;
  const int n = model.dof;
  const StatePoint sp = StatePoint::from_state(x);
  double worst = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd u;
  if (has_input_constraints(spec)) u = extract_control(model, sp, xdot).u;
  const double inf = std::numeric_limits<double>::infinity();
  for (const auto& c : spec.constraints) {
    const Eigen::VectorXd* v = nullptr;
    switch (c.kind) {
      case ConstraintKind::StateBox: v = &sp.position; break;
      case ConstraintKind::VelocityBox: v = &sp.velocity; break;
      case ConstraintKind::InputBox: v = &u; break;
      case ConstraintKind::CircleObstacle: {
        const auto pts = forward_kinematics(model, sp.position);
        const double rinfl = c.radius + c.clearance;
        for (int fr : c.frames) {
          const double g = rinfl * rinfl - (pts.at(fr) - c.center).squaredNorm();
          worst = std::max(worst, g);
        }
        continue;
      }
    }
    for (int i = 0; i < v->size(); ++i) {
      const double up = (c.upper.size() > i) ? c.upper(i) : inf;
      const double lo = (c.lower.size() > i) ? c.lower(i) : -inf;
      if (std::isfinite(up)) worst = std::max(worst, (*v)(i) - up);
      if (std::isfinite(lo)) worst = std::max(worst, lo - (*v)(i));
    }
  }
  return worst;
}

}  // namespace heatflow
