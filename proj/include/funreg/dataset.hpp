#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <string>

namespace funreg {

/// n predictor curves discretized on a shared grid in [0, 1], with one
/// scalar response per curve. Immutable by convention after construction.
struct FunctionalDataset {
    Eigen::VectorXd grid;       // k sampling points, strictly increasing
    Eigen::MatrixXd curves;     // n x k, row i = curve i on the grid
    Eigen::VectorXd responses;  // length n

    Eigen::Index size() const { return curves.rows(); }
    Eigen::Index grid_size() const { return grid.size(); }
};

/// Validates the dataset invariants (grid sorted within [0,1] with k >= 2,
/// matching row counts, all entries finite) and returns the dataset.
FunctionalDataset make_dataset(Eigen::VectorXd grid, Eigen::MatrixXd curves,
                               Eigen::VectorXd responses);

/// Composite trapezoid quadrature weights for the given grid.
Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& grid);

/// Subtracts the pointwise sample mean curve from every curve in place.
void center_curves(FunctionalDataset& data);

/// Reads the two-file CSV layout: a predictor file whose header row holds the
/// numeric grid values and whose data rows are curves, plus a single-column
/// response file with header "y". Rows are matched by order.
FunctionalDataset load_dataset(const std::string& predictor_path,
                               const std::string& response_path);

/// Reads the combined layout: header "y,<grid values...>", each data row a
/// response followed by the curve values.
FunctionalDataset load_dataset_combined(const std::string& path);

/// Predictor curves without responses (for prediction). Same predictor CSV
/// format as load_dataset; responses are set to zero.
FunctionalDataset load_predictors(const std::string& predictor_path);

void write_dataset(const FunctionalDataset& data, const std::string& predictor_path,
                   const std::string& response_path);
void write_dataset_combined(const FunctionalDataset& data, const std::string& path);

}  // namespace funreg
