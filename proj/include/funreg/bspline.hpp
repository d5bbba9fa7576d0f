#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <utility>

namespace funreg {

/// Gauss-Legendre nodes and weights on [-1, 1], exact for polynomials of
/// degree 2n-1. Nodes found by Newton iteration on the Legendre recurrence.
template <typename Scalar = double>
std::pair<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>
gauss_legendre(int n) {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
    Vector nodes(n), weights(n);
    const Scalar pi = Scalar(3.14159265358979323846L);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        Scalar x = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
        Scalar dp = 0;
        for (int it = 0; it < 100; ++it) {
            // Legendre polynomial P_n(x) and derivative via three-term recurrence
            Scalar p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / Scalar(k);
                p0 = p1;
                p1 = p2;
            }
            dp = Scalar(n) * (x * p1 - p0) / (x * x - 1);
            Scalar dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < Scalar(1e-15)) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        Scalar w = 2 / ((1 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    return {std::move(nodes), std::move(weights)};
}

/// B-spline basis of order p (degree p-1) on [0, 1] with clamped boundary
/// knots: the knot vector carries p copies of 0 and of 1 around the interior
/// knots, so the basis has dimension K + p for K interior knots and
/// interpolates function values at the endpoints.
///
/// Evaluation at t = 1 is assigned to the last nontrivial knot span
/// (right-closed), so the last basis function is 1 there.
template <typename Scalar = double>
class BSplineBasis {
public:
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    BSplineBasis(int order, Vector interior_knots)
        : order_(order), interior_(std::move(interior_knots)) {
        if (order_ < 1) throw std::invalid_argument("invalid order: B-spline order must be >= 1");
        for (Eigen::Index i = 0; i < interior_.size(); ++i) {
            const Scalar t = interior_[i];
            if (!(t > 0 && t < 1))
                throw std::invalid_argument("invalid knots: interior knots must lie in (0, 1)");
            if (i > 0 && !(t > interior_[i - 1]))
                throw std::invalid_argument("invalid knots: interior knots must be strictly increasing");
        }
        const int K = static_cast<int>(interior_.size());
        knots_.resize(2 * order_ + K);
        knots_.head(order_).setZero();
        knots_.segment(order_, K) = interior_;
        knots_.tail(order_).setOnes();
    }

    /// Equispaced interior knots: i/(K+1), i = 1..K.
    static BSplineBasis equispaced(int order, int num_interior_knots) {
        if (num_interior_knots < 0)
            throw std::invalid_argument("invalid knots: number of interior knots must be >= 0");
        Vector interior(num_interior_knots);
        for (int i = 0; i < num_interior_knots; ++i)
            interior[i] = Scalar(i + 1) / Scalar(num_interior_knots + 1);
        return BSplineBasis(order, std::move(interior));
    }

    int order() const { return order_; }
    int num_interior_knots() const { return static_cast<int>(interior_.size()); }
    int dimension() const { return num_interior_knots() + order_; }
    const Vector& interior_knots() const { return interior_; }
    const Vector& knots() const { return knots_; }

    /// Index mu of the knot span containing t, clamped so that
    /// knots[mu] <= t < knots[mu+1] (t = 1 maps to the last nontrivial span).
    int find_span(Scalar t) const {
        const int lo = order_ - 1;                // first nontrivial span
        const int hi = dimension() - 1;           // last nontrivial span
        int mu = lo;
        while (mu < hi && !(t < knots_[mu + 1])) ++mu;
        return mu;
    }

private:
    int order_;
    Vector interior_;
    Vector knots_;  // length 2p + K, nondecreasing, clamped
};

using BSplineBasisd = BSplineBasis<double>;

/// Banded Gram matrix of q-th basis derivatives, entries
/// integral of B_i^(q) B_j^(q) over [0, 1].
template <typename Scalar = double>
struct PenaltyMatrix {
    int derivative_order = 0;  // q
    int bandwidth = 0;         // entries vanish for |i - j| >= order
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> entries;
};

using PenaltyMatrixd = PenaltyMatrix<double>;

template <typename Scalar>
BSplineBasis<Scalar> make_basis(int order, int num_interior_knots) {
    return BSplineBasis<Scalar>::equispaced(order, num_interior_knots);
}

inline BSplineBasisd make_basis(int order, int num_interior_knots) {
    return BSplineBasisd::equispaced(order, num_interior_knots);
}

namespace detail {

// Cox-de Boor values of all basis functions of the given order on the full
// knot vector of `basis` (the lower-order families share that knot vector and
// have dimension knots.size() - order). Zero-width spans contribute nothing
// through the 0/0 -> 0 convention.
template <typename Scalar>
typename BSplineBasis<Scalar>::Vector
all_orders_eval(const BSplineBasis<Scalar>& basis, Scalar t, int target_order) {
    using Vector = typename BSplineBasis<Scalar>::Vector;
    const auto& knots = basis.knots();
    const int num_knots = static_cast<int>(knots.size());
    const int mu = basis.find_span(t);

    Vector vals = Vector::Zero(num_knots - 1);
    vals[mu] = 1;  // order-1 indicators
    for (int m = 2; m <= target_order; ++m) {
        const int count = num_knots - m;
        Vector next = Vector::Zero(count);
        for (int i = std::max(0, mu - m + 1); i <= std::min(mu, count - 1); ++i) {
            Scalar acc = 0;
            const Scalar den_l = knots[i + m - 1] - knots[i];
            if (den_l > 0) acc += (t - knots[i]) / den_l * vals[i];
            const Scalar den_r = knots[i + m] - knots[i + 1];
            if (den_r > 0) acc += (knots[i + m] - t) / den_r * vals[i + 1];
            next[i] = acc;
        }
        vals = std::move(next);
    }
    return vals;
}

}  // namespace detail

/// Values of all K+p basis functions at t in [0, 1]. At most p entries are
/// nonzero and they sum to one.
template <typename Scalar>
typename BSplineBasis<Scalar>::Vector
eval_basis(const BSplineBasis<Scalar>& basis, Scalar t) {
    if (!(t >= 0 && t <= 1))
        throw std::invalid_argument("out of domain: basis evaluation requires t in [0, 1]");
    return detail::all_orders_eval(basis, t, basis.order());
}

/// d-th derivative of every basis function at t, via the rescaled
/// lower-order B-spline recurrence (exact, no finite differences).
/// Requires d < order; derivatives of order >= p vanish almost everywhere
/// and are rejected rather than silently returned as zeros.
template <typename Scalar>
typename BSplineBasis<Scalar>::Vector
eval_basis_deriv(const BSplineBasis<Scalar>& basis, Scalar t, int d) {
    if (!(t >= 0 && t <= 1))
        throw std::invalid_argument("out of domain: basis evaluation requires t in [0, 1]");
    if (d < 0) throw std::invalid_argument("derivative order: d must be >= 0");
    const int p = basis.order();
    if (d >= p)
        throw std::invalid_argument("derivative order: need d < order (higher derivatives vanish a.e.)");
    if (d == 0) return eval_basis(basis, t);

    using Vector = typename BSplineBasis<Scalar>::Vector;
    const auto& knots = basis.knots();
    const int num_knots = static_cast<int>(knots.size());

    // start from order p-d values, then differentiate back up to order p:
    // D^s B_{i,m} = (m-1) [ D^{s-1} B_{i,m-1} / (t_{i+m-1} - t_i)
    //                     - D^{s-1} B_{i+1,m-1} / (t_{i+m} - t_{i+1}) ]
    Vector vals = detail::all_orders_eval(basis, t, p - d);
    for (int m = p - d + 1; m <= p; ++m) {
        const int count = num_knots - m;
        Vector next(count);
        for (int i = 0; i < count; ++i) {
            Scalar acc = 0;
            const Scalar den_l = knots[i + m - 1] - knots[i];
            if (den_l > 0) acc += vals[i] / den_l;
            const Scalar den_r = knots[i + m] - knots[i + 1];
            if (den_r > 0) acc -= vals[i + 1] / den_r;
            next[i] = Scalar(m - 1) * acc;
        }
        vals = std::move(next);
    }
    return vals;
}

/// Exact derivative penalty D_q, assembled span by span with Gauss-Legendre
/// quadrature using p-q nodes -- exact for the piecewise-polynomial integrand
/// of degree 2(p-1-q). Requires 1 <= q < order.
template <typename Scalar>
PenaltyMatrix<Scalar> penalty_matrix(const BSplineBasis<Scalar>& basis, int q) {
    const int p = basis.order();
    if (q < 1 || q >= p)
        throw std::invalid_argument("invalid penalty order: need 1 <= q < order");

    const int dim = basis.dimension();
    const auto& knots = basis.knots();
    PenaltyMatrix<Scalar> penalty;
    penalty.derivative_order = q;
    penalty.bandwidth = p - 1;
    penalty.entries.setZero(dim, dim);

    const auto [nodes, weights] = gauss_legendre<Scalar>(p - q);
    for (int span = p - 1; span < dim; ++span) {
        const Scalar a = knots[span], b = knots[span + 1];
        if (!(b > a)) continue;
        const Scalar half = (b - a) / 2, mid = (a + b) / 2;
        for (int g = 0; g < nodes.size(); ++g) {
            const Scalar t = mid + half * nodes[g];
            const auto dvals = eval_basis_deriv(basis, t, q);
            const Scalar w = half * weights[g];
            // only the p functions alive on this span contribute
            for (int i = span - p + 1; i <= span; ++i)
                for (int j = span - p + 1; j <= span; ++j)
                    penalty.entries(i, j) += w * dvals[i] * dvals[j];
        }
    }
    return penalty;
}

}  // namespace funreg
