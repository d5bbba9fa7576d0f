#pragma once

#include <Eigen/Core>

#include <cstdint>

#include "funreg/bspline.hpp"
#include "funreg/dataset.hpp"

namespace funreg {

enum class ScaleMethod { mad, m_scale };

/// Preliminary residual scale used to standardize the loss.
struct ScaleEstimate {
    double sigma = 1.0;
    ScaleMethod method = ScaleMethod::m_scale;
    double breakdown = 0.5;  // target b of the M-scale equation
};

/// Normalized MAD: median absolute deviation from the median, scaled for
/// consistency at the normal.
double mad_scale(const Eigen::VectorXd& r);

/// Bisquare rho rescaled so it saturates at one.
double bisquare_chi(double x, double c);

/// Tuning constant c with E chi_c(Z) = b for standard normal Z, found by
/// quadrature and bisection (b = 0.5 gives the classical 1.5476...).
double bisquare_consistency_constant(double b);

/// M-scale of the residuals: the sigma solving mean chi(r_i/sigma) = b,
/// by fixed-point iteration from a MAD start. Throws a degenerate-scale
/// error when no positive solution exists (e.g. too many zero residuals).
double m_scale(const Eigen::VectorXd& r, double b, double c);

struct InitialFitOptions {
    double breakdown = 0.5;
    int subsamples = 50;       // random elemental starts
    int refine_steps = 2;      // IRLS steps applied to every candidate
    int max_iter = 100;        // full refinement of the winner
    double tol = 1e-8;
    int max_dimension = 10;    // basis dimension cap of the pilot spline fit
    std::uint64_t seed = 20240601;
};

/// Unpenalized pilot S-fit: robust scale plus a warm start for the
/// penalized solver, the start embedded into the full basis.
struct InitialFit {
    ScaleEstimate scale;
    Eigen::VectorXd gamma;      // intercept + full-basis coefficients
    Eigen::VectorXd residuals;  // pilot-fit residuals
};

/// Fits an unpenalized regression spline of dimension min(max_dimension,
/// dim(basis)) by an S-estimator (bisquare score, subsample starts, IRLS
/// refinement with M-scale updates) and returns the M-scale of its residuals
/// together with the pilot coefficients refitted in the full basis. When the
/// design is rank deficient at the pilot dimension, the pilot is shrunk
/// until elemental subsamples become solvable.
InitialFit initial_scale(const FunctionalDataset& data, const BSplineBasisd& basis,
                         const InitialFitOptions& options = {});

/// Scale for the least-squares path: normalized MAD of the residuals of an
/// unpenalized pilot least-squares fit (no standardization is needed to
/// weight a square loss, but the scale still feeds the criterion and the
/// standardized residuals). A zero MAD, as with noise-free data, falls back
/// to one. The returned gamma is the pilot fit embedded in the full basis.
InitialFit least_squares_scale(const FunctionalDataset& data, const BSplineBasisd& basis,
                               int max_dimension = 10);

}  // namespace funreg
