#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "funreg/fit.hpp"
#include "funreg/model_io.hpp"
#include "funreg/simulate.hpp"

namespace {

using namespace funreg;

struct EstimatorFlags {
    std::string loss = "huber";
    double tuning = -1;  // <= 0 means family default
    int order = 4;
    int penalty_order = 2;
    int basis_dim = 40;
    std::string criterion = "aicc";
    double lambda = -1;  // >= 0 overrides selection
    bool center = false;
    std::uint64_t seed = 1;
};

void add_estimator_flags(CLI::App* cmd, EstimatorFlags& flags) {
    cmd->add_option("--loss", flags.loss, "loss family: square|huber|bisquare")
        ->check(CLI::IsMember({"square", "huber", "bisquare"}));
    cmd->add_option("--c", flags.tuning, "loss tuning constant (default per family)");
    cmd->add_option("--p", flags.order, "spline order (default 4)");
    cmd->add_option("--q", flags.penalty_order, "penalty derivative order (default 2)");
    cmd->add_option("--basis-dim", flags.basis_dim, "basis dimension K+p (default 40)");
    cmd->add_option("--criterion", flags.criterion, "smoothing criterion: aicc|gcv")
        ->check(CLI::IsMember({"aicc", "gcv"}));
    cmd->add_option("--lambda", flags.lambda, "fixed smoothing parameter, skips selection");
    cmd->add_flag("--center", flags.center, "subtract the mean curve before fitting");
    cmd->add_option("--seed", flags.seed, "seed for the pilot-fit subsampling");
}

FitOptions to_fit_options(const EstimatorFlags& flags) {
    FitOptions options;
    options.loss = make_loss(flags.loss, flags.tuning);
    options.order = flags.order;
    options.penalty_order = flags.penalty_order;
    options.basis_dimension = flags.basis_dim;
    if (flags.criterion == "gcv") {
        if (flags.loss != "square")
            throw CLI::ValidationError("--criterion", "gcv requires --loss square");
        options.criterion = Criterion::gcv;
    }
    if (flags.lambda >= 0) options.lambda = flags.lambda;
    options.center = flags.center;
    options.scale.seed = flags.seed;
    return options;
}

FunctionalDataset load_from_flags(const std::string& predictors, const std::string& responses,
                                  const std::string& combined) {
    if (!combined.empty()) {
        if (!predictors.empty() || !responses.empty())
            throw CLI::ValidationError("--data", "cannot combine --data with --predictors/--responses");
        return load_dataset_combined(combined);
    }
    if (predictors.empty() || responses.empty())
        throw CLI::ValidationError("--predictors", "need --predictors and --responses, or --data");
    return load_dataset(predictors, responses);
}

void write_number(std::ostream& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    return out;
}

int cmd_fit(const EstimatorFlags& flags, const std::string& predictors,
            const std::string& responses, const std::string& combined,
            const std::string& model_path, const std::string& beta_path, int beta_points) {
    const FunctionalDataset data = load_from_flags(predictors, responses, combined);
    const FitOptions options = to_fit_options(flags);
    const FittedModel model = fit_dataset(data, options);
    save_model(model, model_path);
    if (!beta_path.empty()) {
        auto out = open_out(beta_path);
        out << "t,beta\n";
        const Eigen::MatrixXd curve = beta_curve(model, beta_points);
        for (Eigen::Index i = 0; i < curve.rows(); ++i) {
            write_number(out, curve(i, 0));
            out << ',';
            write_number(out, curve(i, 1));
            out << '\n';
        }
    }
    std::cerr << "fit: n=" << data.size() << " lambda=" << model.lambda
              << " edf=" << model.edf << " sigma=" << model.sigma
              << " converged=" << (model.converged ? "yes" : "no") << "\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& predictors,
                const std::string& out_path) {
    const FittedModel model = load_model(model_path);
    const FunctionalDataset data = load_predictors(predictors);
    const Eigen::VectorXd yhat = predict(model, data);
    auto out = open_out(out_path);
    out << "y_hat\n";
    for (Eigen::Index i = 0; i < yhat.size(); ++i) {
        write_number(out, yhat[i]);
        out << '\n';
    }
    return 0;
}

int cmd_cv(const EstimatorFlags& flags, const std::string& predictors,
           const std::string& responses, const std::string& combined, int folds, double trim,
           const std::string& out_path, const std::string& report_path) {
    const FunctionalDataset data = load_from_flags(predictors, responses, combined);
    const FitOptions options = to_fit_options(flags);
    const CVResult cv = cross_validate(data, options, folds, trim, flags.seed);
    if (!out_path.empty()) {
        auto out = open_out(out_path);
        out << "index,fold,y,y_hat\n";
        for (Eigen::Index i = 0; i < data.size(); ++i) {
            out << i << ',' << cv.fold_of[static_cast<size_t>(i)] << ',';
            write_number(out, data.responses[i]);
            out << ',';
            write_number(out, cv.predictions[i]);
            out << '\n';
        }
    }
    std::ostream* rep = &std::cout;
    std::ofstream file;
    if (!report_path.empty()) {
        file = open_out(report_path);
        rep = &file;
    }
    *rep << "{\n  \"folds\": " << folds << ",\n  \"trim\": ";
    write_number(*rep, trim);
    *rep << ",\n  \"rmspe\": ";
    write_number(*rep, cv.rmspe);
    *rep << ",\n  \"rmspe_trimmed\": ";
    write_number(*rep, cv.rmspe_trimmed);
    *rep << "\n}\n";
    return 0;
}

SimulationConfig config_from_flags(const EstimatorFlags& flags, const std::string& process,
                                   const std::string& beta, const std::string& error, int n,
                                   int grid_size, int n_terms, int replications,
                                   const std::string& phi_variant, int threads) {
    SimulationConfig config;
    config.process = process_from_string(process);
    config.beta = beta_from_string(beta);
    config.error = error_from_string(error);
    config.n = n;
    config.grid_size = grid_size;
    config.n_terms = n_terms;
    config.replications = replications;
    config.seed = flags.seed;
    config.threads = threads;
    if (phi_variant == "verbatim")
        config.phi_variant = PhiVariant::verbatim;
    else if (phi_variant == "frequency_j")
        config.phi_variant = PhiVariant::frequency_j;
    else
        throw CLI::ValidationError("--phi-variant", "must be verbatim or frequency_j");

    config.estimator.loss = make_loss(flags.loss, flags.tuning);
    config.estimator.order = flags.order;
    config.estimator.penalty_order = flags.penalty_order;
    config.estimator.basis_dimension = flags.basis_dim;
    config.estimator.criterion = flags.criterion == "gcv" ? Criterion::gcv : Criterion::aicc;
    if (flags.criterion == "gcv" && flags.loss != "square")
        throw CLI::ValidationError("--criterion", "gcv requires --loss square");
    config.estimator.lambda_override = flags.lambda;
    return config;
}

int cmd_simulate(const SimulationConfig& config, const std::string& out_path,
                 const std::string& format) {
    const MCReport report = run_monte_carlo(config);
    auto out = open_out(out_path);
    if (format == "csv")
        write_report_csv(report, out);
    else
        write_report_json(report, config, out);
    std::cerr << "simulate: mean_mse=" << report.mean_mse << " median_mse=" << report.median_mse
              << " failures=" << report.failures << "\n";
    return 0;
}

int cmd_bench(const EstimatorFlags& flags, const std::vector<std::string>& processes,
              const std::vector<std::string>& betas, const std::vector<std::string>& errors,
              const std::vector<std::string>& losses, int n, int grid_size, int n_terms,
              int replications, const std::string& phi_variant, int threads,
              const std::string& out_path) {
    auto out = open_out(out_path);
    out << "process,beta,error,loss,criterion,mean_mse,median_mse,failures\n";
    for (const auto& process : processes) {
        for (const auto& beta : betas) {
            for (const auto& error : errors) {
                for (const auto& loss : losses) {
                    EstimatorFlags run = flags;
                    run.loss = loss;
                    run.tuning = -1;
                    // the least-squares comparator selects by GCV, robust fits by AICc
                    run.criterion = (loss == "square") ? "gcv" : "aicc";
                    const SimulationConfig config = config_from_flags(
                        run, process, beta, error, n, grid_size, n_terms, replications,
                        phi_variant, threads);
                    const MCReport report = run_monte_carlo(config);
                    out << process << ',' << beta << ',' << error << ',' << loss << ','
                        << run.criterion << ',';
                    write_number(out, report.mean_mse);
                    out << ',';
                    write_number(out, report.median_mse);
                    out << ',' << report.failures << '\n';
                    std::cerr << "bench: " << process << ' ' << beta << ' ' << error << ' '
                              << loss << " mean=" << report.mean_mse
                              << " median=" << report.median_mse << "\n";
                }
            }
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust scalar-on-function regression with penalized splines"};
    app.require_subcommand(1);

    EstimatorFlags flags;
    std::string predictors, responses, combined;
    std::string model_path = "model.json", beta_path, out_path, report_path, format = "json";
    int beta_points = 200, folds = 5, n = 100, grid_size = 100, n_terms = 50,
        replications = 100, threads = 1;
    double trim = 0.1;
    std::string process = "well_spaced", beta = "b1", error = "gaussian",
                phi_variant = "verbatim";
    std::vector<std::string> processes = {"well_spaced"}, betas = {"b1"},
                             errors_list = {"gaussian", "mix_gaussian"},
                             losses = {"square", "huber"};

    auto* fit = app.add_subcommand("fit", "fit a model on CSV data");
    add_estimator_flags(fit, flags);
    fit->add_option("--predictors", predictors, "predictor CSV (header = grid values)");
    fit->add_option("--responses", responses, "response CSV (header 'y')");
    fit->add_option("--data", combined, "combined CSV (header 'y,<grid...>')");
    fit->add_option("--model", model_path, "output model JSON path")->required();
    fit->add_option("--beta-out", beta_path, "output CSV of the coefficient function");
    fit->add_option("--beta-points", beta_points, "sample count for --beta-out (default 200)");

    auto* predict = app.add_subcommand("predict", "predict responses for new curves");
    predict->add_option("--model", model_path, "model JSON from fit")->required();
    predict->add_option("--predictors", predictors, "predictor CSV")->required();
    predict->add_option("--out", out_path, "output predictions CSV")->required();

    auto* cv = app.add_subcommand("cv", "k-fold cross-validation");
    add_estimator_flags(cv, flags);
    cv->add_option("--predictors", predictors, "predictor CSV");
    cv->add_option("--responses", responses, "response CSV");
    cv->add_option("--data", combined, "combined CSV");
    cv->add_option("--folds", folds, "number of folds (default 5)");
    cv->add_option("--trim", trim, "upper trim fraction for RMSPE (default 0.1)");
    cv->add_option("--out", out_path, "per-observation predictions CSV");
    cv->add_option("--report", report_path, "report JSON path (default: stdout)");

    auto* simulate = app.add_subcommand("simulate", "run one Monte Carlo scenario");
    add_estimator_flags(simulate, flags);
    simulate->add_option("--process", process, "well_spaced|closely_spaced");
    simulate->add_option("--beta", beta, "b1|b2|b3|b4");
    simulate->add_option("--error", error, "gaussian|t3|mix_gaussian|slash");
    simulate->add_option("--n", n, "sample size per replication");
    simulate->add_option("--grid-size", grid_size, "discretization points");
    simulate->add_option("--n-terms", n_terms, "series truncation");
    simulate->add_option("--replications", replications, "replication count");
    simulate->add_option("--phi-variant", phi_variant, "verbatim|frequency_j");
    simulate->add_option("--threads", threads, "worker threads");
    simulate->add_option("--out", out_path, "report output path")->required();
    simulate->add_option("--format", format, "json|csv")
        ->check(CLI::IsMember({"json", "csv"}));

    auto* bench = app.add_subcommand("bench", "run a scenario grid and tabulate");
    add_estimator_flags(bench, flags);
    bench->add_option("--processes", processes, "process list");
    bench->add_option("--betas", betas, "beta list");
    bench->add_option("--errors", errors_list, "error-law list");
    bench->add_option("--losses", losses, "loss list");
    bench->add_option("--n", n, "sample size per replication");
    bench->add_option("--grid-size", grid_size, "discretization points");
    bench->add_option("--n-terms", n_terms, "series truncation");
    bench->add_option("--replications", replications, "replication count");
    bench->add_option("--phi-variant", phi_variant, "verbatim|frequency_j");
    bench->add_option("--threads", threads, "worker threads");
    bench->add_option("--out", out_path, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit->parsed())
            return cmd_fit(flags, predictors, responses, combined, model_path, beta_path,
                           beta_points);
        if (predict->parsed()) return cmd_predict(model_path, predictors, out_path);
        if (cv->parsed())
            return cmd_cv(flags, predictors, responses, combined, folds, trim, out_path,
                          report_path);
        if (simulate->parsed()) {
            const SimulationConfig config = config_from_flags(
                flags, process, beta, error, n, grid_size, n_terms, replications, phi_variant,
                threads);
            return cmd_simulate(config, out_path, format);
        }
        if (bench->parsed())
            return cmd_bench(flags, processes, betas, errors_list, losses, n, grid_size,
                             n_terms, replications, phi_variant, threads, out_path);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
