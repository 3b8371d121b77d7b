#include "heatflow/robot_model.hpp"

#include <cmath>

namespace heatflow {

namespace {

void check_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

}  // namespace

RobotModel RobotModel::double_integrator(int dof, double mass) {
  if (dof < 1) throw std::invalid_argument("double_integrator: dof must be >= 1");
  RobotModel m;
  m.kind = SystemKind::DoubleIntegrator;
  m.dof = dof;
  m.masses = Eigen::VectorXd::Constant(dof, mass);
  m.lengths = Eigen::VectorXd::Zero(dof);
  m.gravity = 0.0;
  m.actuation = Eigen::MatrixXd::Identity(dof, dof);
  return m;
}

RobotModel RobotModel::planar_chain(const Eigen::VectorXd& masses,
                                    const Eigen::VectorXd& lengths, double gravity) {
  if (masses.size() < 1 || masses.size() != lengths.size())
    throw std::invalid_argument("planar_chain: masses and lengths must match and be non-empty");
  if ((masses.array() <= 0).any() || (lengths.array() <= 0).any())
    throw std::invalid_argument("planar_chain: masses and lengths must be positive");
  RobotModel m;
  m.kind = SystemKind::PlanarChain;
  m.dof = static_cast<int>(masses.size());
  m.masses = masses;
  m.lengths = lengths;
  m.gravity = gravity;
  m.actuation = Eigen::MatrixXd::Identity(m.dof, m.dof);
  return m;
}

bool RobotModel::fully_actuated() const {
  return actuation.rows() == actuation.cols() &&
         actuation.isApprox(Eigen::MatrixXd::Identity(dof, dof), 1e-14);
}

StatePoint StatePoint::from_state(const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size()) / 2;
  return {x.head(n), x.tail(n)};
}

Eigen::VectorXd StatePoint::to_state() const {
  Eigen::VectorXd x(position.size() + velocity.size());
  x << position, velocity;
  return x;
}

Eigen::VectorXd inverse_dynamics(const RobotModel& model, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qd, const Eigen::VectorXd& qdd) {
  check_finite(q, "inverse_dynamics");
  check_finite(qd, "inverse_dynamics");
  check_finite(qdd, "inverse_dynamics");
  const int n = model.dof;
  if (model.kind == SystemKind::DoubleIntegrator)
    return model.masses.cwiseProduct(qdd);

  // forward pass: absolute angle/rate/acceleration and tip accelerations,
  // with the base accelerated by (0, g) to fold gravity in
  Eigen::VectorXd th(n), om(n), al(n);
  double sth = 0, som = 0, sal = 0;
  for (int i = 0; i < n; ++i) {
    sth += q(i); som += qd(i); sal += qdd(i);
    th(i) = sth; om(i) = som; al(i) = sal;
  }
  std::vector<Eigen::Vector2d> r(n), acc(n);
  Eigen::Vector2d a(0.0, model.gravity);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d e(std::sin(th(i)), -std::cos(th(i)));
    const Eigen::Vector2d je(std::cos(th(i)), std::sin(th(i)));
    r[i] = model.lengths(i) * e;
    a += al(i) * model.lengths(i) * je - om(i) * om(i) * r[i];
    acc[i] = a;
  }
  // backward pass: accumulate force and moment about each joint
  Eigen::VectorXd tau(n);
  Eigen::Vector2d f = Eigen::Vector2d::Zero();
  double moment = 0.0;
  for (int i = n - 1; i >= 0; --i) {
    f += model.masses(i) * acc[i];
    moment += cross2(r[i], f);
    tau(i) = moment;
  }
  return tau;
}

Eigen::VectorXd bias_term(const RobotModel& model, const Eigen::VectorXd& q,
                          const Eigen::VectorXd& qd) {
  return inverse_dynamics(model, q, qd, Eigen::VectorXd::Zero(model.dof));
}

Eigen::MatrixXd mass_matrix(const RobotModel& model, const Eigen::VectorXd& q) {
  check_finite(q, "mass_matrix");
  const int n = model.dof;
  if (model.kind == SystemKind::DoubleIntegrator)
    return model.masses.asDiagonal();
  // unit-acceleration columns through the same recursion keeps H and the
  // inverse dynamics bit-consistent
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd grav = inverse_dynamics(model, q, zero, zero);
  Eigen::MatrixXd h(n, n);
  for (int j = 0; j < n; ++j)
    h.col(j) = inverse_dynamics(model, q, zero, Eigen::VectorXd::Unit(n, j)) - grav;
  return h;
}

InverseDynamicsDerivatives inverse_dynamics_derivatives(const RobotModel& model,
                                                        const Eigen::VectorXd& q,
                                                        const Eigen::VectorXd& qd,
                                                        const Eigen::VectorXd& qdd) {
  const int n = model.dof;
  InverseDynamicsDerivatives out{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n),
                                 Eigen::MatrixXd::Zero(n, n)};
  if (model.kind == SystemKind::DoubleIntegrator) {
    out.dtau_dqdd = model.masses.asDiagonal();
    return out;
  }
  check_finite(q, "inverse_dynamics_derivatives");
  check_finite(qd, "inverse_dynamics_derivatives");
  check_finite(qdd, "inverse_dynamics_derivatives");

  Eigen::VectorXd th(n), om(n), al(n);
  double sth = 0, som = 0, sal = 0;
  for (int i = 0; i < n; ++i) {
    sth += q(i); som += qd(i); sal += qdd(i);
    th(i) = sth; om(i) = som; al(i) = sal;
  }
  std::vector<Eigen::Vector2d> e(n), je(n), r(n), acc(n), fsum(n);
  Eigen::Vector2d a(0.0, model.gravity);
  for (int i = 0; i < n; ++i) {
    e[i] = {std::sin(th(i)), -std::cos(th(i))};
    je[i] = {std::cos(th(i)), std::sin(th(i))};
    r[i] = model.lengths(i) * e[i];
    a += al(i) * model.lengths(i) * je[i] - om(i) * om(i) * r[i];
    acc[i] = a;
  }
  Eigen::Vector2d f = Eigen::Vector2d::Zero();
  for (int i = n - 1; i >= 0; --i) {
    f += model.masses(i) * acc[i];
    fsum[i] = f;
  }

  // directional sensitivity of the two passes; kind 0/1/2 = d/dq_a, d/dqd_a, d/dqdd_a
  for (int kind = 0; kind < 3; ++kind) {
    Eigen::MatrixXd& jac = (kind == 0) ? out.dtau_dq : (kind == 1) ? out.dtau_dqd : out.dtau_dqdd;
    for (int col = 0; col < n; ++col) {
      Eigen::Vector2d da = Eigen::Vector2d::Zero();
      std::vector<Eigen::Vector2d> dacc(n), dr(n);
      for (int i = 0; i < n; ++i) {
        const double dth = (kind == 0 && i >= col) ? 1.0 : 0.0;
        const double dom = (kind == 1 && i >= col) ? 1.0 : 0.0;
        const double dal = (kind == 2 && i >= col) ? 1.0 : 0.0;
        const Eigen::Vector2d de = je[i] * dth;
        const Eigen::Vector2d dje = -e[i] * dth;
        dr[i] = model.lengths(i) * de;
        da += dal * model.lengths(i) * je[i] + al(i) * model.lengths(i) * dje -
              2.0 * om(i) * dom * r[i] - om(i) * om(i) * dr[i];
        dacc[i] = da;
      }
      Eigen::Vector2d df = Eigen::Vector2d::Zero();
      double dmoment = 0.0;
      for (int i = n - 1; i >= 0; --i) {
        df += model.masses(i) * dacc[i];
        dmoment += cross2(dr[i], fsum[i]) + cross2(r[i], df);
        jac(i, col) = dmoment;
      }
    }
  }
  return out;
}

AffineDecomposition affine_decomposition(const RobotModel& model, const StatePoint& x) {
  check_finite(x.position, "affine_decomposition");
  check_finite(x.velocity, "affine_decomposition");
  const int n = model.dof;
  const int m = model.inputs();
  const Eigen::MatrixXd h = mass_matrix(model, x.position);
  const Eigen::VectorXd c = bias_term(model, x.position, x.velocity);
  const Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() != Eigen::Success)
    throw DecompositionError("affine_decomposition: mass matrix not positive definite");

  AffineDecomposition d;
  d.drift.resize(2 * n);
  d.drift.head(n) = x.velocity;
  d.drift.tail(n) = -llt.solve(c);

  d.input_map = Eigen::MatrixXd::Zero(2 * n, m);
  d.input_map.bottomRows(n) = llt.solve(model.actuation);

  if (model.fully_actuated()) {
    // Fc = [I; 0] spans the position subspace and keeps uc = xdot_P1 - x_P2
    d.complement = Eigen::MatrixXd::Zero(2 * n, n);
    d.complement.topRows(n) = Eigen::MatrixXd::Identity(n, n);
  } else {
    // orthonormal complement of the input-map columns
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(d.input_map);
    const Eigen::MatrixXd qfull = qr.householderQ() * Eigen::MatrixXd::Identity(2 * n, 2 * n);
    d.complement = qfull.rightCols(2 * n - m);
  }

  d.fbar.resize(2 * n, 2 * n);
  d.fbar << d.complement, d.input_map;

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(d.fbar);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (!(smin > 0.0) || smin / smax < 1e-12)
    throw DecompositionError("affine_decomposition: fbar reciprocal condition below 1e-12");
  return d;
}

ExtractedControl extract_control_generic(const RobotModel& model, const StatePoint& x,
                                         const Eigen::VectorXd& xdot) {
  check_finite(xdot, "extract_control");
  const int n = model.dof;
  const int m = model.inputs();
  const AffineDecomposition d = affine_decomposition(model, x);
  const Eigen::VectorXd w = d.fbar.partialPivLu().solve(xdot - d.drift);
  return {w.tail(m), w.head(2 * n - m)};
}

ExtractedControl extract_control(const RobotModel& model, const StatePoint& x,
                                 const Eigen::VectorXd& xdot) {
  check_finite(xdot, "extract_control");
  const int n = model.dof;
  if (model.fully_actuated()) {
    ExtractedControl ec;
    ec.u = inverse_dynamics(model, x.position, x.velocity, xdot.tail(n));
    ec.uc = xdot.head(n) - x.velocity;
    return ec;
  }
  return extract_control_generic(model, x, xdot);
}

ControlDerivatives control_derivatives(const RobotModel& model, const StatePoint& x,
                                       const Eigen::VectorXd& xdot) {
  if (!model.fully_actuated())
    throw std::invalid_argument("control_derivatives: only supported for B = I");
  const int n = model.dof;
  const auto id = inverse_dynamics_derivatives(model, x.position, x.velocity, xdot.tail(n));
  ControlDerivatives cd;
  cd.du_dx.resize(n, 2 * n);
  cd.du_dx << id.dtau_dq, id.dtau_dqd;
  cd.du_dxdot = Eigen::MatrixXd::Zero(n, 2 * n);
  cd.du_dxdot.rightCols(n) = id.dtau_dqdd;
  return cd;
}

std::vector<Eigen::Vector2d> forward_kinematics(const RobotModel& model,
                                                const Eigen::VectorXd& q) {
  check_finite(q, "forward_kinematics");
  const int n = model.dof;
  std::vector<Eigen::Vector2d> pts(n);
  if (model.kind == SystemKind::DoubleIntegrator) {
    for (int i = 0; i < n; ++i) pts[i] = {q(i), 0.0};
    return pts;
  }
  double th = 0.0;
  Eigen::Vector2d p = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) {
    th += q(i);
    p += model.lengths(i) * Eigen::Vector2d(std::sin(th), -std::cos(th));
    pts[i] = p;
  }
  return pts;
}

Eigen::MatrixXd frame_jacobian(const RobotModel& model, const Eigen::VectorXd& q,
                               int frame) {
  const int n = model.dof;
  if (frame < 0 || frame >= n) throw std::invalid_argument("frame_jacobian: frame out of range");
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2, n);
  if (model.kind == SystemKind::DoubleIntegrator) {
    jac(0, frame) = 1.0;
    return jac;
  }
  double th = 0.0;
  std::vector<Eigen::Vector2d> je(n);
  for (int i = 0; i < n; ++i) {
    th += q(i);
    je[i] = {std::cos(th), std::sin(th)};
  }
  for (int a = 0; a <= frame; ++a) {
    Eigen::Vector2d col = Eigen::Vector2d::Zero();
    for (int k = a; k <= frame; ++k) col += model.lengths(k) * je[k];
    jac.col(a) = col;
  }
  return jac;
}

}  // namespace heatflow
