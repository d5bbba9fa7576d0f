#include "funreg/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace funreg {

FunctionalDataset make_dataset(Eigen::VectorXd grid, Eigen::MatrixXd curves,
                               Eigen::VectorXd responses) {
    if (grid.size() < 2)
        throw std::invalid_argument("dataset: grid needs at least 2 points");
    for (Eigen::Index j = 0; j < grid.size(); ++j) {
        if (!(grid[j] >= 0.0 && grid[j] <= 1.0))
            throw std::invalid_argument("dataset: grid points must lie in [0, 1]");
        if (j > 0 && !(grid[j] > grid[j - 1]))
            throw std::invalid_argument("dataset: grid must be strictly increasing");
    }
    if (curves.cols() != grid.size())
        throw std::invalid_argument("dataset: curve columns must match grid size");
    if (curves.rows() != responses.size())
        throw std::invalid_argument("row count mismatch: curves vs responses");
    if (!curves.allFinite() || !responses.allFinite() )
        throw std::invalid_argument("dataset: non-finite entries");
    return {std::move(grid), std::move(curves), std::move(responses)};
}

Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& grid) {
    const Eigen::Index k = grid.size();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
    for (Eigen::Index j = 0; j + 1 < k; ++j) {
        const double h = 0.5 * (grid[j + 1] - grid[j]);
        w[j] += h;
        w[j + 1] += h;
    }
    return w;
}

void center_curves(FunctionalDataset& data) {
    const Eigen::RowVectorXd mean = data.curves.colwise().mean();
    data.curves.rowwise() -= mean;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

double parse_number(const std::string& cell, const std::string& file, int line_no) {
    try {
        size_t pos = 0;
        const double v = std::stod(cell, &pos);
        while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
        if (pos != cell.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("parse error: " + file + " line " + std::to_string(line_no) +
                                 ": not a number: '" + cell + "'");
    }
}

// Reads all lines, dropping a trailing \r and skipping fully empty lines at EOF.
std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

struct CurveTable {
    Eigen::VectorXd grid;
    Eigen::MatrixXd curves;
};

CurveTable read_predictor_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw std::runtime_error("empty input: " + path);
    const auto header = split_csv_line(lines[0]);
    const size_t k = header.size();
    if (k < 2) throw std::runtime_error("parse error: " + path + " line 1: need at least 2 grid columns");

    Eigen::VectorXd grid(static_cast<Eigen::Index>(k));
    for (size_t j = 0; j < k; ++j) grid[static_cast<Eigen::Index>(j)] = parse_number(header[j], path, 1);

    const size_t n = lines.size() - 1;
    if (n == 0) throw std::runtime_error("empty input: " + path + ": no curve rows");
    Eigen::MatrixXd curves(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    for (size_t i = 0; i < n; ++i) {
        const int line_no = static_cast<int>(i) + 2;
        const auto cells = split_csv_line(lines[i + 1]);
        if (cells.size() != k)
            throw std::runtime_error("parse error: " + path + " line " + std::to_string(line_no) +
                                     ": expected " + std::to_string(k) + " fields, got " +
                                     std::to_string(cells.size()));
        for (size_t j = 0; j < k; ++j)
            curves(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                parse_number(cells[j], path, line_no);
    }
    return {std::move(grid), std::move(curves)};
}

Eigen::VectorXd read_response_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw std::runtime_error("empty input: " + path);
    if (lines[0] != "y" && lines[0] != "Y")
        throw std::runtime_error("parse error: " + path + " line 1: expected header 'y'");
    const size_t start = 1;
    const size_t n = lines.size() - start;
    if (n == 0) throw std::runtime_error("empty input: " + path + ": no response rows");
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < n; ++i) {
        const int line_no = static_cast<int>(i + start) + 1;
        const auto cells = split_csv_line(lines[i + start]);
        if (cells.size() != 1)
            throw std::runtime_error("parse error: " + path + " line " + std::to_string(line_no) +
                                     ": expected a single response column");
        y[static_cast<Eigen::Index>(i)] = parse_number(cells[0], path, line_no);
    }
    return y;
}

}  // namespace

FunctionalDataset load_dataset(const std::string& predictor_path,
                               const std::string& response_path) {
    auto table = read_predictor_csv(predictor_path);
    auto y = read_response_csv(response_path);
    if (table.curves.rows() != y.size())
        throw std::runtime_error("row count mismatch: " + std::to_string(table.curves.rows()) +
                                 " curves vs " + std::to_string(y.size()) + " responses");
    return make_dataset(std::move(table.grid), std::move(table.curves), std::move(y));
}

FunctionalDataset load_dataset_combined(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw std::runtime_error("empty input: " + path);
    const auto header = split_csv_line(lines[0]);
    if (header.size() < 3 || (header[0] != "y" && header[0] != "Y"))
        throw std::runtime_error("parse error: " + path +
                                 " line 1: combined format needs header 'y,<grid...>'");
    const size_t k = header.size() - 1;
    Eigen::VectorXd grid(static_cast<Eigen::Index>(k));
    for (size_t j = 0; j < k; ++j) grid[static_cast<Eigen::Index>(j)] = parse_number(header[j + 1], path, 1);

    const size_t n = lines.size() - 1;
    if (n == 0) throw std::runtime_error("empty input: " + path + ": no data rows");
    Eigen::MatrixXd curves(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < n; ++i) {
        const int line_no = static_cast<int>(i) + 2;
        const auto cells = split_csv_line(lines[i + 1]);
        if (cells.size() != k + 1)
            throw std::runtime_error("parse error: " + path + " line " + std::to_string(line_no) +
                                     ": expected " + std::to_string(k + 1) + " fields, got " +
                                     std::to_string(cells.size()));
        y[static_cast<Eigen::Index>(i)] = parse_number(cells[0], path, line_no);
        for (size_t j = 0; j < k; ++j)
            curves(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                parse_number(cells[j + 1], path, line_no);
    }
    return make_dataset(std::move(grid), std::move(curves), std::move(y));
}

FunctionalDataset load_predictors(const std::string& predictor_path) {
    auto table = read_predictor_csv(predictor_path);
    Eigen::VectorXd zeros = Eigen::VectorXd::Zero(table.curves.rows());
    return make_dataset(std::move(table.grid), std::move(table.curves), std::move(zeros));
}

namespace {

void write_number(std::ostream& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
}

}  // namespace

void write_dataset(const FunctionalDataset& data, const std::string& predictor_path,
                   const std::string& response_path) {
    std::ofstream pf(predictor_path);
    if (!pf) throw std::runtime_error("cannot open file for writing: " + predictor_path);
    for (Eigen::Index j = 0; j < data.grid.size(); ++j) {
        if (j) pf << ',';
        write_number(pf, data.grid[j]);
    }
    pf << '\n';
    for (Eigen::Index i = 0; i < data.curves.rows(); ++i) {
        for (Eigen::Index j = 0; j < data.curves.cols(); ++j) {
            if (j) pf << ',';
            write_number(pf, data.curves(i, j));
        }
        pf << '\n';
    }
    std::ofstream rf(response_path);
    if (!rf) throw std::runtime_error("cannot open file for writing: " + response_path);
    rf << "y\n";
    for (Eigen::Index i = 0; i < data.responses.size(); ++i) {
        write_number(rf, data.responses[i]);
        rf << '\n';
    }
}

void write_dataset_combined(const FunctionalDataset& data, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open file for writing: " + path);
    f << "y";
    for (Eigen::Index j = 0; j < data.grid.size(); ++j) {
        f << ',';
        write_number(f, data.grid[j]);
    }
    f << '\n';
    for (Eigen::Index i = 0; i < data.curves.rows(); ++i) {
        write_number(f, data.responses[i]);
        for (Eigen::Index j = 0; j < data.curves.cols(); ++j) {
            f << ',';
            write_number(f, data.curves(i, j));
        }
        f << '\n';
    }
}

}  // namespace funreg
