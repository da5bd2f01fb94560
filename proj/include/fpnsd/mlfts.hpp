#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fpnsd/common.hpp"
#include "fpnsd/fpca.hpp"
#include "fpnsd/panel.hpp"
#include "fpnsd/scorets.hpp"

namespace fpnsd::mlfts {

// Additive two-level decomposition of a panel: per-size mean, a common
// component shared by all sizes, and a size-specific remainder. Curves are
// centred per size first; the common component is the cross-size average of
// the centred curves, so common and specific components both have zero mean
// over time.
struct Decomposition {
    Eigen::MatrixXd means;                         // S x p
    Eigen::MatrixXd common_curves;                 // n x p
    std::vector<Eigen::MatrixXd> specific_curves;  // S matrices, n x p
};

Decomposition decompose(const FunctionalPanel& panel);

struct Model {
    Eigen::MatrixXd means;                    // S x p
    fpca::FpcaBasis common;                   // K components fitted to the common level
    std::vector<fpca::FpcaBasis> specific;    // S bases with L components each
    std::vector<Eigen::MatrixXd> residuals;   // S matrices, n x p
    Eigen::VectorXd grid;
    Eigen::VectorXd quad_weights;
    std::vector<double> size_labels;

    int sizes() const { return static_cast<int>(specific.size()); }
    int days() const { return static_cast<int>(common.scores.rows()); }
    int points() const { return static_cast<int>(grid.size()); }
};

Model fit(const FunctionalPanel& panel, int K, int L, Warnings* warnings = nullptr,
          Execution exec = Execution::parallel);

// Share of retained variance attributed to the common level for one size.
// Returns 1 when the specific part is zero and the common part positive;
// a fully degenerate denominator returns 0.5 and sets `degenerate`.
double variance_proportion(const Model& model, int size, bool* degenerate = nullptr);

// One-step-ahead curves on the log scale, one row per size. Score series of
// both levels are extrapolated with `forecaster` (default exponential
// smoothing chosen by AICc).
Eigen::MatrixXd forecast_one_step(const Model& model, const ScoreForecaster& forecaster = {});

}  // namespace fpnsd::mlfts
