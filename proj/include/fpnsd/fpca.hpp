#pragma once

#include <Eigen/Dense>
#include <optional>

#include "fpnsd/common.hpp"
#include "fpnsd/panel.hpp"

namespace fpnsd::fpca {

// Truncated weighted Karhunen-Loeve basis of a sample of discretised curves.
// Components are orthonormal under the quadrature weights and signed so the
// largest-magnitude entry of each component is positive.
struct FpcaBasis {
    Eigen::VectorXd mean;          // p
    Eigen::MatrixXd components;    // p x K
    Eigen::VectorXd eigenvalues;   // K, non-increasing, non-negative
    Eigen::MatrixXd scores;        // n x K, columns have zero mean
    Eigen::VectorXd weights;       // quadrature weights used for the fit
    bool truncated = false;        // K was reduced to the numerical rank

    int order() const { return static_cast<int>(components.cols()); }
};

// curves: n-by-p sample matrix, one curve per row. The covariance uses
// divisor n. When n < p the eigenproblem is solved through the n-by-n Gram
// matrix, otherwise through the weighted p-by-p covariance; both routes give
// the same basis. K larger than the numerical rank is truncated with a
// warning.
FpcaBasis fit(const Eigen::MatrixXd& curves, const Eigen::VectorXd& weights, int K,
              Warnings* warnings = nullptr);

// Rank-k reconstruction of curve t (defaults to the full fitted order).
Eigen::VectorXd reconstruct(const FpcaBasis& basis, int t,
                            std::optional<int> components = std::nullopt);

// FPCA of day-curves stacked across sizes: each observation is the length
// S*p concatenation of one day's curves, weights tiled per size block.
struct StackedBasis {
    Eigen::VectorXd mean;          // S*p
    Eigen::MatrixXd components;    // (S*p) x N
    Eigen::VectorXd eigenvalues;   // N
    Eigen::MatrixXd scores;        // N x n, one row per component
    int sizes = 0;
    int points = 0;
    bool truncated = false;

    int order() const { return static_cast<int>(components.cols()); }
    Eigen::MatrixXd size_block(int s) const;   // p x N slice of the components
    Eigen::VectorXd size_mean(int s) const;    // p slice of the mean
};

StackedBasis fit_stacked(const FunctionalPanel& panel, int N, Warnings* warnings = nullptr);

}  // namespace fpnsd::fpca
