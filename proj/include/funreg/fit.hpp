#pragma once

#include <cstdint>
#include <optional>

#include "funreg/dataset.hpp"
#include "funreg/model_io.hpp"
#include "funreg/select.hpp"

namespace funreg {

struct FitOptions {
    RobustLoss loss = RobustLoss::huber();
    int order = 4;             // p
    int penalty_order = 2;     // q
    int basis_dimension = 40;  // K + p
    Criterion criterion = Criterion::aicc;
    std::optional<double> lambda;  // set to skip smoothing selection
    bool center = false;           // subtract the mean curve before fitting
    SelectOptions select;
    InitialFitOptions scale;
};

/// End-to-end fit: basis and penalty construction, preliminary S-scale,
/// smoothing selection (unless lambda is pinned) and the final IRLS fit,
/// packaged as a serializable model.
FittedModel fit_dataset(const FunctionalDataset& data, const FitOptions& options);

struct CVResult {
    double rmspe = 0;
    double rmspe_trimmed = 0;
    double trim = 0;
    int folds = 0;
    Eigen::VectorXd predictions;   // one per observation, from its held-out fold
    std::vector<int> fold_of;      // fold index per observation
};

/// Seeded k-fold cross-validation: a uniform shuffle is cut into contiguous
/// blocks, each fold is refit from scratch (scale and smoothing selection
/// included) and scored on the held-out block. The trimmed statistic drops
/// the ceil(trim * n) largest squared prediction errors before averaging.
CVResult cross_validate(const FunctionalDataset& data, const FitOptions& options, int folds,
                        double trim, std::uint64_t seed);

}  // namespace funreg
