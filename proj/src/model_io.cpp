#include "funreg/model_io.hpp"

#include <fstream>
#include <stdexcept>
#include <vector>

#include "funreg/design.hpp"

#include <json.hpp>

namespace funreg {

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    Eigen::Index i = 0;
    for (const auto& x : arr) v[i++] = x.get<double>();
    return v;
}

}  // namespace

void save_model(const FittedModel& model, const std::string& path) {
    nlohmann::json j;
    j["format_version"] = model.format_version;
    j["basis"] = {
        {"order", model.order},
        {"interior_knots", vector_to_json(model.interior_knots)},
        {"dimension", model.interior_knots.size() + model.order},
    };
    j["penalty_order"] = model.penalty_order;
    j["intercept"] = model.intercept;
    j["coefficients"] = vector_to_json(model.coefficients);
    j["lambda"] = model.lambda;
    j["scale"] = {
        {"sigma", model.sigma},
        {"method", model.scale_method},
        {"breakdown", model.breakdown},
    };
    j["edf"] = model.edf;
    j["loss"] = {{"family", model.loss}, {"tuning", model.tuning}};
    j["criterion"] = {{"name", model.criterion}, {"value", model.criterion_value}};
    j["convergence"] = {{"iterations", model.iterations}, {"converged", model.converged}};
    j["diagnostics"] = {
        {"standardized_residuals", vector_to_json(model.standardized_residuals)},
        {"outlier_threshold", model.outlier_threshold},
        {"flagged", flagged_outliers(model)},
    };
    if (model.center_mean.size() > 0) {
        j["centering"] = {
            {"grid", vector_to_json(model.center_grid)},
            {"mean_curve", vector_to_json(model.center_mean)},
        };
    }

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << j.dump(2) << '\n';
}

FittedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("model parse error: " + path + ": " + e.what());
    }

    FittedModel model;
    try {
        model.format_version = j.at("format_version").get<int>();
        if (model.format_version != 1)
            throw std::runtime_error("unsupported model format version " +
                                     std::to_string(model.format_version));
        const auto& basis = j.at("basis");
        model.order = basis.at("order").get<int>();
        model.interior_knots = vector_from_json(basis.at("interior_knots"));
        model.penalty_order = j.at("penalty_order").get<int>();
        model.intercept = j.at("intercept").get<double>();
        model.coefficients = vector_from_json(j.at("coefficients"));
        const auto& scale = j.at("scale");
        model.sigma = scale.at("sigma").get<double>();
        model.scale_method = scale.at("method").get<std::string>();
        model.breakdown = scale.at("breakdown").get<double>();
        model.edf = j.at("edf").get<double>();
        model.loss = j.at("loss").at("family").get<std::string>();
        model.tuning = j.at("loss").at("tuning").get<double>();
        model.criterion = j.at("criterion").at("name").get<std::string>();
        model.criterion_value = j.at("criterion").at("value").get<double>();
        model.iterations = j.at("convergence").at("iterations").get<int>();
        model.converged = j.at("convergence").at("converged").get<bool>();
        model.standardized_residuals =
            vector_from_json(j.at("diagnostics").at("standardized_residuals"));
        model.outlier_threshold = j.at("diagnostics").at("outlier_threshold").get<double>();
        if (j.contains("centering")) {
            model.center_grid = vector_from_json(j.at("centering").at("grid"));
            model.center_mean = vector_from_json(j.at("centering").at("mean_curve"));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("model parse error: " + path + ": " + e.what());
    }
    if (model.coefficients.size() != model.interior_knots.size() + model.order)
        throw std::runtime_error("model parse error: " + path +
                                 ": coefficient count does not match basis dimension");
    return model;
}

Eigen::MatrixXd beta_curve(const FittedModel& model, int m) {
    if (m < 2) throw std::invalid_argument("beta_curve: need at least 2 sample points");
    const BSplineBasisd basis = model.basis();
    Eigen::MatrixXd out(m, 2);
    for (int i = 0; i < m; ++i) {
        const double t = static_cast<double>(i) / (m - 1);
        out(i, 0) = t;
        out(i, 1) = eval_basis(basis, t).dot(model.coefficients);
    }
    return out;
}

Eigen::VectorXd predict(const FittedModel& model, const FunctionalDataset& data) {
    const BSplineBasisd basis = model.basis();
    const Eigen::VectorXd w = trapezoid_weights(data.grid);
    const Eigen::MatrixXd B = basis_on_grid(basis, data.grid);
    for (int l = 0; l < basis.dimension(); ++l) {
        if ((B.col(l).array() != 0.0).count() < 2)
            throw std::runtime_error("grid mismatch: predictor grid under-resolves the model basis");
    }
    Eigen::MatrixXd curves = data.curves;
    if (model.center_mean.size() > 0) {
        if (model.center_grid.size() != data.grid.size() ||
            (model.center_grid - data.grid).cwiseAbs().maxCoeff() > 0)
            throw std::runtime_error("grid mismatch: centered model requires the training grid");
        curves.rowwise() -= model.center_mean.transpose();
    }
    return (curves * (w.asDiagonal() * B) * model.coefficients).array() + model.intercept;
}

std::vector<int> flagged_outliers(const FittedModel& model) {
    std::vector<int> flagged;
    for (Eigen::Index i = 0; i < model.standardized_residuals.size(); ++i)
        if (std::abs(model.standardized_residuals[i]) > model.outlier_threshold)
            flagged.push_back(static_cast<int>(i));
    return flagged;
}

}  // namespace funreg
