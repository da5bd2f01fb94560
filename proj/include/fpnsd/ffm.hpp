#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fpnsd/common.hpp"
#include "fpnsd/panel.hpp"
#include "fpnsd/scorets.hpp"

namespace fpnsd::ffm {

// n-by-n matrix of cross-size average inner products of uncentred curves:
// entry (t, t') averages the quadrature inner product of day t and day t'
// over sizes. Symmetric positive semi-definite.
Eigen::MatrixXd gram_matrix(const FunctionalPanel& panel,
                            Execution exec = Execution::parallel);

// Factor model extracted from the Gram eigenstructure. Factors satisfy
// (1/n) F^T F = I_q; loadings are per-size curves so the common part of day
// t at size s is loadings[s] * factors.row(t)^T.
struct FactorModel {
    Eigen::MatrixXd factors;                 // n x q
    std::vector<Eigen::MatrixXd> loadings;   // S matrices, p x q
    Eigen::VectorXd eigenvalues;             // all n, non-increasing, non-negative
    int q = 0;
    bool truncated = false;
};

FactorModel fit_factors(const FunctionalPanel& panel, int q, Warnings* warnings = nullptr,
                        Execution exec = Execution::parallel);

// Panel of idiosyncratic remainders X - common part; same grid and labels.
FunctionalPanel residual_panel(const FactorModel& model, const FunctionalPanel& panel);

// Eigenvalue-ratio choice of the factor count over 1..q_max. Ratios with a
// vanishing denominator use the floor 1e-15 * lambda_1; a spectrum without a
// meaningful gap (max ratio below 1.5) falls back to q = 1 with a warning,
// as does an all-zero spectrum.
int select_q(const FunctionalPanel& panel, int q_max, Warnings* warnings = nullptr,
             Execution exec = Execution::parallel);

// One-step forecast of the factor model with an MLFTS fit on its residual
// panel: factor scores and residual scores are extrapolated with
// `forecaster`. q == 0 drops the factor part entirely.
Eigen::MatrixXd forecast_factor_mlfts(const FunctionalPanel& panel, int q, int K, int L,
                                      const ScoreForecaster& forecaster = {},
                                      Warnings* warnings = nullptr,
                                      Execution exec = Execution::parallel);

}  // namespace fpnsd::ffm
