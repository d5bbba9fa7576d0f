#pragma once

#include <Eigen/Core>

#include <string>

#include "funreg/bspline.hpp"
#include "funreg/dataset.hpp"
#include "funreg/irls.hpp"

namespace funreg {

/// Serialized fit: everything needed to evaluate the coefficient function
/// and predict on new curves. Stored as a versioned JSON document.
struct FittedModel {
    int format_version = 1;
    int order = 4;
    int penalty_order = 2;
    Eigen::VectorXd interior_knots;
    double intercept = 0;
    Eigen::VectorXd coefficients;
    double lambda = 0;
    double sigma = 1;
    std::string scale_method = "m_scale";
    double breakdown = 0.5;
    double edf = 0;
    int iterations = 0;
    bool converged = false;
    std::string loss = "huber";
    double tuning = 1.345;
    std::string criterion = "aicc";
    double criterion_value = 0;
    Eigen::VectorXd standardized_residuals;
    double outlier_threshold = 2.5;
    // set when the fit centered the curves; prediction then subtracts this
    // mean curve, which requires the same sampling grid
    Eigen::VectorXd center_grid;
    Eigen::VectorXd center_mean;

    BSplineBasisd basis() const { return BSplineBasisd(order, interior_knots); }
};

void save_model(const FittedModel& model, const std::string& path);
FittedModel load_model(const std::string& path);

/// Coefficient function sampled at m equispaced points in [0, 1].
/// Returns an m x 2 matrix of (t, beta(t)) rows.
Eigen::MatrixXd beta_curve(const FittedModel& model, int m);

/// Plug-in predictions alpha + integral of X_i beta for each curve, using
/// the same trapezoid inner products as fitting.
Eigen::VectorXd predict(const FittedModel& model, const FunctionalDataset& data);

/// Indices with |standardized residual| above the model's outlier threshold.
std::vector<int> flagged_outliers(const FittedModel& model);

}  // namespace funreg
