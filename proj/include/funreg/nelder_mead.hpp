#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace funreg {

struct NelderMeadOptions {
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
    int max_iter = 500;
    double diameter_tol = 1e-4;  // stop when the simplex diameter falls below this
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = std::numeric_limits<double>::infinity();
    int iterations = 0;
    double diameter = 0;
    std::vector<std::pair<Eigen::VectorXd, double>> evaluations;
};

/// Downhill simplex minimization. The initial simplex is x0 plus one vertex
/// per coordinate offset by `step`. Non-finite objective values are treated
/// as +infinity, so a clamped or guarded objective steers the simplex back.
inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& x0, double step,
                                    const NelderMeadOptions& options = {}) {
    const int dim = static_cast<int>(x0.size());
    const int m = dim + 1;

    NelderMeadResult result;
    const auto eval = [&](const Eigen::VectorXd& x) {
        double v = f(x);
        if (!std::isfinite(v)) v = std::numeric_limits<double>::infinity();
        result.evaluations.emplace_back(x, v);
        return v;
    };

    std::vector<Eigen::VectorXd> x(m, x0);
    std::vector<double> fx(m);
    for (int i = 0; i < dim; ++i) x[i + 1][i] += step;
    for (int i = 0; i < m; ++i) fx[i] = eval(x[i]);

    std::vector<int> idx(m);
    std::iota(idx.begin(), idx.end(), 0);

    const auto diameter = [&]() {
        double d = 0;
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) d = std::max(d, (x[i] - x[j]).norm());
        return d;
    };

    int it = 0;
    for (; it < options.max_iter; ++it) {
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fx[a] < fx[b]; });
        result.diameter = diameter();
        if (result.diameter < options.diameter_tol) break;

        const int best = idx[0], second_worst = idx[m - 2], worst = idx[m - 1];
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
        for (int i = 0; i < m - 1; ++i) centroid += x[idx[i]];
        centroid /= static_cast<double>(m - 1);

        const Eigen::VectorXd xr = centroid + options.reflection * (centroid - x[worst]);
        const double fr = eval(xr);

        if (fr < fx[best]) {
            const Eigen::VectorXd xe = centroid + options.expansion * (xr - centroid);
            const double fe = eval(xe);
            if (fe < fr) {
                x[worst] = xe;
                fx[worst] = fe;
            } else {
                x[worst] = xr;
                fx[worst] = fr;
            }
            continue;
        }
        if (fr < fx[second_worst]) {
            x[worst] = xr;
            fx[worst] = fr;
            continue;
        }

        const bool outside = fr < fx[worst];
        const Eigen::VectorXd xc =
            centroid + options.contraction * ((outside ? xr : x[worst]) - centroid);
        const double fc = eval(xc);
        if (fc < (outside ? fr : fx[worst])) {
            x[worst] = xc;
            fx[worst] = fc;
            continue;
        }

        for (int i = 1; i < m; ++i) {
            x[idx[i]] = x[best] + options.shrink * (x[idx[i]] - x[best]);
            fx[idx[i]] = eval(x[idx[i]]);
        }
    }

    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fx[a] < fx[b]; });
    result.x = x[idx[0]];
    result.value = fx[idx[0]];
    result.iterations = it;
    result.diameter = diameter();
    return result;
}

}  // namespace funreg
