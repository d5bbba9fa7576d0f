#pragma once

#include <Eigen/Core>

#include "funreg/bspline.hpp"
#include "funreg/dataset.hpp"

namespace funreg {

/// Regression design for a functional dataset against a spline basis:
/// X holds the L2 inner products of each curve with each basis function,
/// Z prepends an intercept column, and Dq_star embeds the derivative
/// penalty with a zero row/column for the intercept.
struct DesignMatrices {
    Eigen::MatrixXd X;        // n x (K+p)
    Eigen::MatrixXd Z;        // n x (K+p+1), first column all ones
    Eigen::MatrixXd Dq_star;  // (K+p+1) x (K+p+1), zero first row/column
};

/// Basis functions evaluated on a grid: (k x dimension) matrix with
/// entry (j, l) = B_l(grid[j]).
Eigen::MatrixXd basis_on_grid(const BSplineBasisd& basis, const Eigen::VectorXd& grid);

/// Assembles X by composite trapezoid quadrature of curve-times-basis
/// products on the observation grid, plus Z and Dq_star. Every basis
/// function must be nonzero on at least two grid points.
DesignMatrices inner_products(const FunctionalDataset& data, const BSplineBasisd& basis,
                              const PenaltyMatrixd& penalty);

DesignMatrices inner_products(const FunctionalDataset& data, const BSplineBasisd& basis, int q);

/// Squared empirical covariance semi-norm of a grid-sampled function:
/// n^-1 sum_i [ integral of X_i(t) f(t) dt ]^2 with trapezoid quadrature.
double gamma_n_seminorm_sq(const FunctionalDataset& data, const Eigen::VectorXd& f_on_grid);

}  // namespace funreg
