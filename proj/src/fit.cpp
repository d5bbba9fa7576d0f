#include "funreg/fit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "funreg/design.hpp"
#include "funreg/rng.hpp"

namespace funreg {

FittedModel fit_dataset(const FunctionalDataset& data, const FitOptions& options) {
    if (options.basis_dimension <= options.order)
        throw std::invalid_argument("fit: basis dimension must exceed the spline order");

    FunctionalDataset working = data;
    Eigen::VectorXd mean_curve;
    if (options.center) {
        mean_curve = working.curves.colwise().mean();
        center_curves(working);
    }

    const BSplineBasisd basis =
        make_basis(options.order, options.basis_dimension - options.order);
    const DesignMatrices design = inner_products(working, basis, options.penalty_order);
    const InitialFit init = initial_scale(working, basis, options.scale);

    FitResult fit;
    std::string criterion_name;
    double criterion_val = 0;
    if (options.lambda) {
        if (*options.lambda < 0) throw std::invalid_argument("fit: lambda must be >= 0");
        fit = irls_fit(design.Z, design.Dq_star, working.responses, *options.lambda,
                       options.loss, init.scale, init.gamma, options.select.irls);
        criterion_name = "fixed";
    } else {
        SelectOptions sel = options.select;
        sel.criterion = options.criterion;
        const SelectionResult selection =
            select_lambda(design, working.responses, options.loss, init.scale, init.gamma, sel);
        fit = selection.fit;
        criterion_name = options.criterion == Criterion::aicc ? "aicc" : "gcv";
        criterion_val = selection.criterion_value;
    }

    FittedModel model;
    model.order = options.order;
    model.penalty_order = options.penalty_order;
    model.interior_knots = basis.interior_knots();
    model.intercept = fit.intercept;
    model.coefficients = fit.coefficients;
    model.lambda = fit.lambda;
    model.sigma = fit.sigma.sigma;
    model.scale_method = fit.sigma.method == ScaleMethod::m_scale ? "m_scale" : "mad";
    model.breakdown = fit.sigma.breakdown;
    model.edf = fit.edf;
    model.iterations = fit.iterations;
    model.converged = fit.converged;
    model.loss = options.loss.name();
    model.tuning = options.loss.tuning();
    model.criterion = criterion_name;
    model.criterion_value = criterion_val;
    model.standardized_residuals = standardized_residuals(fit);
    if (options.center) {
        model.center_grid = working.grid;
        model.center_mean = mean_curve;
    }
    return model;
}

CVResult cross_validate(const FunctionalDataset& data, const FitOptions& options, int folds,
                        double trim, std::uint64_t seed) {
    const Eigen::Index n = data.size();
    if (folds < 2) throw std::invalid_argument("cv: need at least 2 folds");
    if (n < folds) throw std::invalid_argument("cv: need at least one observation per fold");
    if (!(trim >= 0 && trim < 0.5)) throw std::invalid_argument("cv: trim must lie in [0, 0.5)");

    // seeded shuffle, then contiguous blocks
    std::vector<Eigen::Index> order(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    Rng rng(seed);
    for (Eigen::Index i = n - 1; i > 0; --i) {
        const Eigen::Index j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }

    CVResult result;
    result.trim = trim;
    result.folds = folds;
    result.predictions.resize(n);
    result.fold_of.assign(static_cast<size_t>(n), -1);

    const Eigen::Index base = n / folds;
    const Eigen::Index extra = n % folds;
    Eigen::Index cursor = 0;
    for (int f = 0; f < folds; ++f) {
        const Eigen::Index size = base + (f < extra ? 1 : 0);
        if (size < 2) throw std::invalid_argument("cv: fold with fewer than 2 observations");
        std::vector<Eigen::Index> test(order.begin() + cursor, order.begin() + cursor + size);
        cursor += size;

        std::vector<bool> in_test(static_cast<size_t>(n), false);
        for (const Eigen::Index i : test) in_test[static_cast<size_t>(i)] = true;

        FunctionalDataset train;
        train.grid = data.grid;
        train.curves.resize(n - size, data.grid_size());
        train.responses.resize(n - size);
        Eigen::Index r = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (in_test[static_cast<size_t>(i)]) continue;
            train.curves.row(r) = data.curves.row(i);
            train.responses[r] = data.responses[i];
            ++r;
        }

        FitOptions fold_options = options;
        fold_options.scale.seed = Rng::derive(seed, static_cast<std::uint64_t>(f) + 1);
        const FittedModel model = fit_dataset(train, fold_options);

        FunctionalDataset held;
        held.grid = data.grid;
        held.curves.resize(size, data.grid_size());
        held.responses.resize(size);
        for (Eigen::Index i = 0; i < size; ++i) {
            held.curves.row(i) = data.curves.row(test[static_cast<size_t>(i)]);
            held.responses[i] = data.responses[test[static_cast<size_t>(i)]];
        }
        const Eigen::VectorXd yhat = predict(model, held);
        for (Eigen::Index i = 0; i < size; ++i) {
            result.predictions[test[static_cast<size_t>(i)]] = yhat[i];
            result.fold_of[static_cast<size_t>(test[static_cast<size_t>(i)])] = f;
        }
    }

    std::vector<double> sq(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double e = data.responses[i] - result.predictions[i];
        sq[static_cast<size_t>(i)] = e * e;
    }
    double total = 0;
    for (const double s : sq) total += s;
    result.rmspe = std::sqrt(total / static_cast<double>(n));

    const size_t drop = static_cast<size_t>(std::ceil(trim * static_cast<double>(n)));
    std::sort(sq.begin(), sq.end());
    const size_t keep = sq.size() - drop;
    double kept = 0;
    for (size_t i = 0; i < keep; ++i) kept += sq[i];
    result.rmspe_trimmed = std::sqrt(kept / static_cast<double>(keep));
    return result;
}

}  // namespace funreg
