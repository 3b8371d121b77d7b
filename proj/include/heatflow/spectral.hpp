#pragma once

#include <Eigen/Dense>

namespace heatflow {

/// Chebyshev-Gauss-Lobatto collocation grid on [0, T].
///
/// Nodes are stored ascending in physical time (the raw Chebyshev ordering
/// is descending); the differentiation matrix is rescaled by the affine map
/// accordingly. Quadrature weights are Clenshaw-Curtis, rescaled to [0, T].
struct SpectralGrid {
  int degree = 0;                 // interpolation degree p; degree+1 nodes
  double horizon = 0.0;           // T
  Eigen::VectorXd nodes;          // (p+1) times, nodes[0]=0, nodes[p]=T
  Eigen::MatrixXd diff_matrix;    // (p+1)x(p+1) spectral derivative at nodes
  Eigen::VectorXd quad_weights;   // (p+1) nonnegative Clenshaw-Curtis weights

  int num_nodes() const { return degree + 1; }
};

/// Builds the degree-p Lobatto grid on [0, T]. Throws std::invalid_argument
/// for p < 1 or T <= 0.
SpectralGrid build_grid(int degree, double horizon);

/// Barycentric Lagrange evaluation of the interpolant of `values`
/// (one row per node) at time t in [0, T]. Exact (bit-for-bit) at nodes.
Eigen::VectorXd interpolate(const SpectralGrid& grid,
                            const Eigen::MatrixXd& values, double t);

/// Clenshaw-Curtis quadrature of node samples over [0, T].
double quadrature(const SpectralGrid& grid, const Eigen::VectorXd& integrand);

/// Spectral derivative of node samples: diff_matrix * samples.
Eigen::MatrixXd fit_and_differentiate(const SpectralGrid& grid,
                                      const Eigen::MatrixXd& samples);

}  // namespace heatflow
