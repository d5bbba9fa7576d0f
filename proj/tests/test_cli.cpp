#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "funreg/dataset.hpp"
#include "funreg/design.hpp"
#include "funreg/model_io.hpp"
#include "funreg/rng.hpp"
#include "funreg/simulate.hpp"

using namespace funreg;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int exit_code;
    std::string out;
    std::string err;
};

CliRun run_cli(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "stdout.txt";
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = std::string(FUNREG_CLI_PATH) + " " + args + " > " + out.string() +
                            " 2> " + err.string();
    const int raw = std::system(cmd.c_str());
    const auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    CliRun run;
    run.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    run.out = slurp(out);
    run.err = slurp(err);
    return run;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::path("cli_scratch") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// smooth curves with a spline-representable signal
FunctionalDataset spline_signal_dataset(int n, int k, unsigned seed, double noise,
                                        int shifted = 0) {
    Eigen::VectorXd grid(k);
    for (int j = 0; j < k; ++j) grid[j] = static_cast<double>(j) / (k - 1);
    Rng rng(seed);
    Eigen::MatrixXd curves(n, k);
    for (int i = 0; i < n; ++i) {
        const double a = rng.gauss(), b = rng.gauss(), c = rng.gauss();
        for (int j = 0; j < k; ++j)
            curves(i, j) = a + b * grid[j] + c * std::sin(5.0 * grid[j]);
    }
    const auto basis = make_basis(4, 4);
    Eigen::VectorXd coef(basis.dimension());
    for (int l = 0; l < basis.dimension(); ++l) coef[l] = std::cos(1.0 + 2.0 * l);
    const Eigen::VectorXd w = trapezoid_weights(grid);
    const Eigen::VectorXd beta = basis_on_grid(basis, grid) * coef;
    Eigen::VectorXd y = curves * w.cwiseProduct(beta);
    y.array() += 0.25;
    for (int i = 0; i < n; ++i) y[i] += noise * rng.gauss();
    for (int i = 0; i < shifted; ++i) y[i] += 10.0;
    return make_dataset(grid, curves, y);
}

std::vector<double> read_single_column(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> values;
    while (std::getline(in, line))
        if (!line.empty()) values.push_back(std::stod(line));
    return values;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("noiseless fit recovers a representable coefficient function") {
    const auto dir = fresh_dir("recover");
    const auto data = spline_signal_dataset(50, 200, 17, 0.0);
    write_dataset(data, (dir / "x.csv").string(), (dir / "y.csv").string());

    const auto run = run_cli("fit --predictors " + (dir / "x.csv").string() + " --responses " +
                                 (dir / "y.csv").string() + " --model " +
                                 (dir / "model.json").string() + " --beta-out " +
                                 (dir / "beta.csv").string() +
                                 " --loss square --lambda 1e-8 --basis-dim 8",
                             dir);
    REQUIRE(run.exit_code == 0);

    // truth on the output grid
    const auto basis = make_basis(4, 4);
    Eigen::VectorXd coef(basis.dimension());
    for (int l = 0; l < basis.dimension(); ++l) coef[l] = std::cos(1.0 + 2.0 * l);

    std::ifstream beta_csv(dir / "beta.csv");
    std::string line;
    std::getline(beta_csv, line);
    CHECK(line == "t,beta");
    int rows = 0;
    double worst = 0;
    while (std::getline(beta_csv, line)) {
        const auto comma = line.find(',');
        const double t = std::stod(line.substr(0, comma));
        const double value = std::stod(line.substr(comma + 1));
        worst = std::max(worst, std::abs(value - eval_basis(basis, t).dot(coef)));
        ++rows;
    }
    CHECK(rows == 200);
    CHECK(worst < 1e-4);
}

TEST_CASE("fit output is byte-identical across runs") {
    const auto dir = fresh_dir("determinism");
    const auto data = spline_signal_dataset(40, 80, 23, 0.4);
    write_dataset_combined(data, (dir / "data.csv").string());
    const std::string args = "fit --data " + (dir / "data.csv").string() + " --seed 11 --model ";
    REQUIRE(run_cli(args + (dir / "a.json").string() + " --basis-dim 12", dir).exit_code == 0);
    REQUIRE(run_cli(args + (dir / "b.json").string() + " --basis-dim 12", dir).exit_code == 0);
    CHECK(read_file(dir / "a.json") == read_file(dir / "b.json"));
}

TEST_CASE("predictions round-trip the training fit") {
    const auto dir = fresh_dir("roundtrip");
    const auto data = spline_signal_dataset(45, 90, 29, 0.5);
    write_dataset(data, (dir / "x.csv").string(), (dir / "y.csv").string());
    REQUIRE(run_cli("fit --predictors " + (dir / "x.csv").string() + " --responses " +
                        (dir / "y.csv").string() + " --model " + (dir / "model.json").string() +
                        " --basis-dim 12 --seed 3",
                    dir)
                .exit_code == 0);
    REQUIRE(run_cli("predict --model " + (dir / "model.json").string() + " --predictors " +
                        (dir / "x.csv").string() + " --out " + (dir / "pred.csv").string(),
                    dir)
                .exit_code == 0);

    const auto model = load_model((dir / "model.json").string());
    const auto yhat = read_single_column(dir / "pred.csv");
    REQUIRE(static_cast<Eigen::Index>(yhat.size()) == data.size());
    // fitted values reconstructed from the stored standardized residuals
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        const double fitted = data.responses[i] - model.standardized_residuals[i] * model.sigma;
        CHECK(yhat[static_cast<size_t>(i)] == doctest::Approx(fitted).epsilon(1e-10));
    }

    // a zero curve predicts the intercept alone
    FunctionalDataset zero;
    zero.grid = data.grid;
    zero.curves = Eigen::MatrixXd::Zero(1, data.grid_size());
    zero.responses = Eigen::VectorXd::Zero(1);
    write_dataset(zero, (dir / "zero.csv").string(), (dir / "zero_y.csv").string());
    REQUIRE(run_cli("predict --model " + (dir / "model.json").string() + " --predictors " +
                        (dir / "zero.csv").string() + " --out " + (dir / "zero_pred.csv").string(),
                    dir)
                .exit_code == 0);
    const auto zero_pred = read_single_column(dir / "zero_pred.csv");
    CHECK(zero_pred.at(0) == doctest::Approx(model.intercept).epsilon(1e-12));
}

TEST_CASE("huber fit flags shifted responses in the model diagnostics") {
    const auto dir = fresh_dir("outliers");
    const auto data = spline_signal_dataset(100, 80, 37, 1.0, 10);
    write_dataset_combined(data, (dir / "data.csv").string());
    REQUIRE(run_cli("fit --data " + (dir / "data.csv").string() + " --model " +
                        (dir / "model.json").string() + " --basis-dim 14 --seed 5",
                    dir)
                .exit_code == 0);
    nlohmann::json j;
    std::ifstream(dir / "model.json") >> j;
    const auto flagged = j["diagnostics"]["flagged"].get<std::vector<int>>();
    int hits = 0;
    for (const int idx : flagged)
        if (idx < 10) ++hits;
    CHECK(hits >= 9);
}

TEST_CASE("malformed csv rows name the offending line") {
    const auto dir = fresh_dir("malformed");
    {
        std::ofstream x(dir / "x.csv");
        x << "0,0.5,1\n1,2,3\n4,bad,6\n";
        std::ofstream y(dir / "y.csv");
        y << "y\n1\n2\n";
    }
    const auto run = run_cli("fit --predictors " + (dir / "x.csv").string() + " --responses " +
                                 (dir / "y.csv").string() + " --model " +
                                 (dir / "model.json").string(),
                             dir);
    CHECK(run.exit_code != 0);
    CHECK(run.err.find("line 3") != std::string::npos);
}

TEST_CASE("unknown flags and values exit with usage errors") {
    const auto dir = fresh_dir("usage");
    CHECK(run_cli("simulate --beta b9 --out " + (dir / "r.json").string(), dir).exit_code != 0);
    CHECK(run_cli("fit --loss cauchy --model m.json", dir).exit_code != 0);
    CHECK(run_cli("cv --criterion gcv --loss huber --data none.csv", dir).exit_code != 0);
    CHECK(run_cli("nonsense", dir).exit_code != 0);
}

TEST_CASE("cross-validation reports exact equality at zero trim") {
    const auto dir = fresh_dir("cv");
    const auto data = spline_signal_dataset(40, 60, 41, 0.3);
    write_dataset_combined(data, (dir / "data.csv").string());
    const auto run = run_cli("cv --data " + (dir / "data.csv").string() +
                                 " --folds 4 --trim 0 --basis-dim 10 --seed 2 --out " +
                                 (dir / "pred.csv").string() + " --report " +
                                 (dir / "report.json").string(),
                             dir);
    REQUIRE(run.exit_code == 0);
    nlohmann::json report;
    std::ifstream(dir / "report.json") >> report;
    CHECK(report["rmspe"].get<double>() == report["rmspe_trimmed"].get<double>());
    CHECK(report["folds"].get<int>() == 4);

    // noise-free data predicts almost perfectly
    const auto clean = spline_signal_dataset(40, 60, 43, 0.0);
    write_dataset_combined(clean, (dir / "clean.csv").string());
    const auto clean_run = run_cli("cv --data " + (dir / "clean.csv").string() +
                                       " --folds 4 --trim 0 --basis-dim 8 --loss square --seed 2",
                                   dir);
    REQUIRE(clean_run.exit_code == 0);
    nlohmann::json clean_report = nlohmann::json::parse(clean_run.out);
    CHECK(clean_report["rmspe"].get<double>() < 1e-4);
}

TEST_CASE("simulate writes single-row csv for one replication") {
    const auto dir = fresh_dir("simulate");
    const auto run = run_cli(
        "simulate --n 40 --grid-size 40 --replications 1 --basis-dim 12 --seed 4 --format csv "
        "--out " +
            (dir / "mc.csv").string(),
        dir);
    REQUIRE(run.exit_code == 0);
    const std::string text = read_file(dir / "mc.csv");
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}

TEST_CASE("bench grid preserves the robustness ordering") {
    const auto dir = fresh_dir("bench");
    const auto run = run_cli(
        "bench --processes well_spaced --betas b1 --errors gaussian mix_gaussian "
        "--losses square huber --n 60 --grid-size 60 --replications 30 --basis-dim 16 "
        "--seed 10 --out " +
            (dir / "bench.csv").string(),
        dir);
    REQUIRE(run.exit_code == 0);

    std::ifstream csv(dir / "bench.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "process,beta,error,loss,criterion,mean_mse,median_mse,failures");
    double square_mix = -1, huber_mix = -1;
    int rows = 0;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        ++rows;
        std::stringstream ss(line);
        std::vector<std::string> cells;
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        REQUIRE(cells.size() == 8);
        if (cells[2] == "mix_gaussian" && cells[3] == "square") square_mix = std::stod(cells[6]);
        if (cells[2] == "mix_gaussian" && cells[3] == "huber") huber_mix = std::stod(cells[6]);
    }
    CHECK(rows == 4);
    REQUIRE(square_mix > 0);
    REQUIRE(huber_mix > 0);
    CHECK(huber_mix < square_mix);
}

TEST_CASE("model json validates on load") {
    const auto dir = fresh_dir("badmodel");
    { std::ofstream(dir / "m.json") << "{\"format_version\": 1}"; }
    const auto run = run_cli("predict --model " + (dir / "m.json").string() +
                                 " --predictors x.csv --out p.csv",
                             dir);
    CHECK(run.exit_code != 0);
    CHECK(run.err.find("model parse error") != std::string::npos);
}

}  // TEST_SUITE
