#include "funreg/design.hpp"

#include <stdexcept>
#include <string>

namespace funreg {

Eigen::MatrixXd basis_on_grid(const BSplineBasisd& basis, const Eigen::VectorXd& grid) {
    Eigen::MatrixXd B(grid.size(), basis.dimension());
    for (Eigen::Index j = 0; j < grid.size(); ++j)
        B.row(j) = eval_basis(basis, grid[j]).transpose();
    return B;
}

DesignMatrices inner_products(const FunctionalDataset& data, const BSplineBasisd& basis,
                              const PenaltyMatrixd& penalty) {
    const Eigen::Index n = data.size();
    const int dim = basis.dimension();
    if (penalty.entries.rows() != dim)
        throw std::invalid_argument("inner_products: penalty dimension does not match basis");

    const Eigen::MatrixXd B = basis_on_grid(basis, data.grid);
    for (int l = 0; l < dim; ++l) {
        const Eigen::Index overlap = (B.col(l).array() != 0.0).count();
        if (overlap < 2)
            throw std::runtime_error("insufficient resolution: basis function " + std::to_string(l) +
                                     " overlaps fewer than 2 grid points");
    }

    const Eigen::VectorXd w = trapezoid_weights(data.grid);
    DesignMatrices dm;
    dm.X = data.curves * (w.asDiagonal() * B);
    dm.Z.resize(n, dim + 1);
    dm.Z.col(0).setOnes();
    dm.Z.rightCols(dim) = dm.X;
    dm.Dq_star = Eigen::MatrixXd::Zero(dim + 1, dim + 1);
    dm.Dq_star.bottomRightCorner(dim, dim) = penalty.entries;
    return dm;
}

DesignMatrices inner_products(const FunctionalDataset& data, const BSplineBasisd& basis, int q) {
    return inner_products(data, basis, penalty_matrix(basis, q));
}

double gamma_n_seminorm_sq(const FunctionalDataset& data, const Eigen::VectorXd& f_on_grid) {
    if (f_on_grid.size() != data.grid.size())
        throw std::invalid_argument("grid mismatch: function must be sampled on the dataset grid");
    const Eigen::VectorXd w = trapezoid_weights(data.grid);
    const Eigen::VectorXd integrals = data.curves * w.cwiseProduct(f_on_grid);
    return integrals.squaredNorm() / static_cast<double>(data.size());
}

}  // namespace funreg
