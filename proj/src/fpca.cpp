#include "fpnsd/fpca.hpp"

#include <cmath>

namespace fpnsd::fpca {

namespace {

constexpr double kRankTolerance = 1e-12;
constexpr double kZeroVarianceTolerance = 1e-24;

// Columns of `components` get their largest-magnitude entry positive; ties
// resolve to the smallest row index. `scores` columns flip along.
void fix_signs(Eigen::MatrixXd& components, Eigen::MatrixXd& scores) {
    for (Eigen::Index k = 0; k < components.cols(); ++k) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index j = 0; j < components.rows(); ++j) {
            const double mag = std::abs(components(j, k));
            if (mag > best) {
                best = mag;
                arg = j;
            }
        }
        if (components(arg, k) < 0.0) {
            components.col(k) = -components.col(k);
            scores.col(k) = -scores.col(k);
        }
    }
}

struct EigenPairs {
    Eigen::VectorXd values;   // descending
    Eigen::MatrixXd vectors;  // matching columns
};

EigenPairs sorted_eig(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) {
        throw numeric_error("eigendecomposition failed to converge");
    }
    const Eigen::Index m = sym.rows();
    EigenPairs out;
    out.values.resize(m);
    out.vectors.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        out.values[i] = solver.eigenvalues()[m - 1 - i];
        out.vectors.col(i) = solver.eigenvectors().col(m - 1 - i);
    }
    return out;
}

// scale_hint guards the all-curves-identical sample: centring leaves
// round-off residue whose eigenvalues are ~eps^2 of the sample's weighted
// second moment, so those count as rank zero while genuine small variance
// (anything above eps^2 of the data scale) survives.
int numerical_rank(const Eigen::VectorXd& descending, double scale_hint) {
    if (descending.size() == 0 || descending[0] <= 0.0) {
        return 0;
    }
    const double floor =
        std::max(descending[0] * kRankTolerance, scale_hint * kZeroVarianceTolerance);
    int r = 0;
    while (r < descending.size() && descending[r] > floor) {
        ++r;
    }
    return r;
}

}  // namespace

FpcaBasis fit(const Eigen::MatrixXd& curves, const Eigen::VectorXd& weights, int K,
              Warnings* warnings) {
    const Eigen::Index n = curves.rows();
    const Eigen::Index p = curves.cols();
    if (n < 2) {
        throw data_error("FPCA needs at least two curves");
    }
    if (weights.size() != p) {
        throw data_error("quadrature weights must match the grid length");
    }
    if ((weights.array() < 0.0).any() || weights.sum() <= 0.0) {
        throw data_error("quadrature weights must be non-negative with positive sum");
    }
    if ((weights.array() == 0.0).any()) {
        throw data_error("zero quadrature weights are not supported");
    }
    if (K < 0) {
        throw config_error("FPCA order must be non-negative");
    }
    if (!curves.allFinite()) {
        throw data_error("FPCA input has non-finite values");
    }

    FpcaBasis basis;
    basis.weights = weights;
    basis.mean = curves.colwise().mean();

    const Eigen::MatrixXd centred = curves.rowwise() - basis.mean.transpose();
    const Eigen::VectorXd sqrt_w = weights.array().sqrt();
    // Half-weighted data: covariance of A columns equals W^1/2 C W^1/2.
    const Eigen::MatrixXd A = centred * sqrt_w.asDiagonal();

    const double second_moment =
        (curves.array().square().matrix() * weights).sum() / static_cast<double>(n);

    EigenPairs pairs;
    Eigen::MatrixXd psi;  // p x r, orthonormal in the plain inner product
    if (n < p) {
        const Eigen::MatrixXd gram = (A * A.transpose()) / static_cast<double>(n);
        pairs = sorted_eig(gram);
        const int r = numerical_rank(pairs.values, second_moment);
        psi.resize(p, r);
        for (int i = 0; i < r; ++i) {
            psi.col(i) = A.transpose() * pairs.vectors.col(i) /
                         std::sqrt(static_cast<double>(n) * pairs.values[i]);
        }
        pairs.values.conservativeResize(r);
    } else {
        const Eigen::MatrixXd cov = (A.transpose() * A) / static_cast<double>(n);
        pairs = sorted_eig(cov);
        const int r = numerical_rank(pairs.values, second_moment);
        psi = pairs.vectors.leftCols(r);
        pairs.values.conservativeResize(r);
    }

    const int rank = static_cast<int>(psi.cols());
    const int keep = std::min(K, rank);
    if (keep < K) {
        basis.truncated = true;
        warn(warnings, "FPCA order reduced from " + std::to_string(K) + " to " +
                           std::to_string(keep) + " (numerical rank)");
    }

    psi = psi.leftCols(keep).eval();
    basis.eigenvalues = pairs.values.head(keep);
    basis.components = psi.array().colwise() / sqrt_w.array();
    basis.scores = A * psi;
    fix_signs(basis.components, basis.scores);
    return basis;
}

Eigen::VectorXd reconstruct(const FpcaBasis& basis, int t, std::optional<int> components) {
    const int n = static_cast<int>(basis.scores.rows());
    if (t < 0 || t >= n) {
        throw data_error("reconstruct: curve index out of range");
    }
    const int k = components.value_or(basis.order());
    if (k < 0 || k > basis.order()) {
        throw config_error("reconstruct: component count out of range");
    }
    return basis.mean + basis.components.leftCols(k) * basis.scores.row(t).head(k).transpose();
}

Eigen::MatrixXd StackedBasis::size_block(int s) const {
    if (s < 0 || s >= sizes) {
        throw data_error("size_block: size index out of range");
    }
    return components.middleRows(static_cast<Eigen::Index>(s) * points, points);
}

Eigen::VectorXd StackedBasis::size_mean(int s) const {
    if (s < 0 || s >= sizes) {
        throw data_error("size_mean: size index out of range");
    }
    return mean.segment(static_cast<Eigen::Index>(s) * points, points);
}

StackedBasis fit_stacked(const FunctionalPanel& panel, int N, Warnings* warnings) {
    const int S = panel.sizes();
    const int n = panel.days();
    const int p = panel.points();
    if (S < 1 || n < 2) {
        throw data_error("stacked FPCA needs at least one size and two days");
    }

    Eigen::MatrixXd stacked(n, static_cast<Eigen::Index>(S) * p);
    for (int s = 0; s < S; ++s) {
        stacked.middleCols(static_cast<Eigen::Index>(s) * p, p) = panel.values[s];
    }
    Eigen::VectorXd tiled(static_cast<Eigen::Index>(S) * p);
    for (int s = 0; s < S; ++s) {
        tiled.segment(static_cast<Eigen::Index>(s) * p, p) = panel.quad_weights;
    }

    const FpcaBasis flat = fit(stacked, tiled, N, warnings);
    StackedBasis out;
    out.mean = flat.mean;
    out.components = flat.components;
    out.eigenvalues = flat.eigenvalues;
    out.scores = flat.scores.transpose();
    out.sizes = S;
    out.points = p;
    out.truncated = flat.truncated;
    return out;
}

}  // namespace fpnsd::fpca
