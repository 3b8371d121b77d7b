#include "heatflow/spectral.hpp"

#include <cmath>
#include <stdexcept>

namespace heatflow {

SpectralGrid build_grid(int degree, double horizon) {
  if (degree < 1) throw std::invalid_argument("build_grid: degree must be >= 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("build_grid: horizon must be > 0");

  const int p = degree;
  const int n = p + 1;
  SpectralGrid grid;
  grid.degree = p;
  grid.horizon = horizon;

  // Chebyshev points x_j = cos(j pi / p) descend on [-1,1]; the map
  // t = (1 - x) T/2 makes t_j ascending with the same index, so no
  // permutation is needed. d/dt = -(2/T) d/dx.
  Eigen::VectorXd x(n);
  for (int j = 0; j < n; ++j) x(j) = std::cos(j * M_PI / p);

  grid.nodes.resize(n);
  for (int j = 0; j < n; ++j) grid.nodes(j) = (1.0 - x(j)) * horizon / 2.0;
  grid.nodes(0) = 0.0;
  grid.nodes(p) = horizon;

  Eigen::VectorXd c(n);
  for (int j = 0; j < n; ++j) c(j) = ((j == 0 || j == p) ? 2.0 : 1.0) * ((j % 2) ? -1.0 : 1.0);

  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      d(i, j) = (c(i) / c(j)) / (x(i) - x(j));
    }
  }
  // negated-sum diagonal: derivative of constants vanishes by construction
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) row += d(i, j);
    d(i, i) = -row;
  }
  grid.diff_matrix = (-2.0 / horizon) * d;

  // Clenshaw-Curtis weights on the same nodes (sum to T, all positive)
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  if (p % 2 == 0) {
    w(0) = w(p) = 1.0 / (double(p) * p - 1.0);
    for (int j = 1; j < p; ++j) {
      double theta = j * M_PI / p;
      double v = 1.0;
      for (int k = 1; k < p / 2; ++k) v -= 2.0 * std::cos(2.0 * k * theta) / (4.0 * k * k - 1.0);
      v -= std::cos(p * theta) / (double(p) * p - 1.0);
      w(j) = 2.0 * v / p;
    }
  } else {
    w(0) = w(p) = 1.0 / (double(p) * p);
    for (int j = 1; j < p; ++j) {
      double theta = j * M_PI / p;
      double v = 1.0;
      for (int k = 1; k <= (p - 1) / 2; ++k) v -= 2.0 * std::cos(2.0 * k * theta) / (4.0 * k * k - 1.0);
      w(j) = 2.0 * v / p;
    }
  }
  grid.quad_weights = w * (horizon / 2.0);
  return grid;
}

Eigen::VectorXd interpolate(const SpectralGrid& grid,
                            const Eigen::MatrixXd& values, double t) {
  const int n = grid.num_nodes();
  if (values.rows() != n)
    throw std::invalid_argument("interpolate: values must have one row per node");
  if (t < 0.0 || t > grid.horizon)
    throw std::invalid_argument("interpolate: t outside [0, T]");

  // exact node hit returns the stored row untouched
  for (int j = 0; j < n; ++j)
    if (t == grid.nodes(j)) return values.row(j);

  // barycentric weights for Lobatto nodes: (-1)^j, halved at the ends
  double num_den = 0.0;
  Eigen::VectorXd num = Eigen::VectorXd::Zero(values.cols());
  for (int j = 0; j < n; ++j) {
    double lam = (j % 2) ? -1.0 : 1.0;
    if (j == 0 || j == n - 1) lam *= 0.5;
    const double cj = lam / (t - grid.nodes(j));
    num += cj * values.row(j).transpose();
    num_den += cj;
  }
  return num / num_den;
}

double quadrature(const SpectralGrid& grid, const Eigen::VectorXd& integrand) {
  if (integrand.size() != grid.num_nodes())
    throw std::invalid_argument("quadrature: integrand length must match node count");
  return grid.quad_weights.dot(integrand);
}

Eigen::MatrixXd fit_and_differentiate(const SpectralGrid& grid,
                                      const Eigen::MatrixXd& samples) {
  if (samples.rows() != grid.num_nodes())
    throw std::invalid_argument("fit_and_differentiate: samples must have one row per node");
  return grid.diff_matrix * samples;
}

}  // namespace heatflow
