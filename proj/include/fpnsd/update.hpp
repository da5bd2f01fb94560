#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fpnsd/common.hpp"
#include "fpnsd/fpca.hpp"
#include "fpnsd/model.hpp"
#include "fpnsd/panel.hpp"
#include "fpnsd/scorets.hpp"

namespace fpnsd::update {

// Regression view of the dynamic-updating problem for one size: the first
// m0 grid points of the most recent day are observed, the basis restricted
// to those points explains them, and the remaining points are predicted
// from the estimated coefficients.
struct UpdateProblem {
    Eigen::MatrixXd basis;     // p x N, component curves restricted to one size
    Eigen::VectorXd mean;      // p, mean curve for that size
    Eigen::VectorXd observed;  // first m0 log-scale values of the partial day
    Eigen::VectorXd ts_scores; // N one-step score forecasts (penalty target)
    double lambda = 0.0;

    int m0() const { return static_cast<int>(observed.size()); }
    int order() const { return static_cast<int>(basis.cols()); }
    int points() const { return static_cast<int>(basis.rows()); }
};

struct UpdateResult {
    Eigen::VectorXd coefficients;  // N
    Eigen::VectorXd forecast;      // p - m0 log-scale values
};

// Slices one size out of a stacked basis into an UpdateProblem.
UpdateProblem make_problem(const fpca::StackedBasis& basis, int size,
                           const Eigen::VectorXd& observed, const Eigen::VectorXd& ts_scores,
                           double lambda = 0.0);

// Least squares on the observed block; requires m0 >= N and a numerically
// full-rank design, otherwise a numeric_error suggests ridge_update.
UpdateResult ols_update(const UpdateProblem& problem);

// Ridge penalty towards zero; lambda == 0 reduces to ols_update.
UpdateResult ridge_update(const UpdateProblem& problem);

// Ridge penalty towards the time-series score forecasts; lambda == 0
// reduces to ols_update, lambda -> infinity reproduces them.
UpdateResult pls_update(const UpdateProblem& problem);

// Rebuilds the panel on a grid rotated by m0 points: curves start at grid
// point m0 and wrap into the next day, the first partial day is discarded,
// and the final curve combines the last full day's tail with the newly
// observed block. partial is sizes-by-m0 on the log scale.
FunctionalPanel reblock(const FunctionalPanel& panel, const Eigen::MatrixXd& partial);

// Forecast of the remaining points of the current day from the re-blocked
// panel: fit the model on the rotated curves and read the first p - m0
// coordinates of its one-step forecast.
Eigen::MatrixXd block_moving_forecast(const FunctionalPanel& panel,
                                      const Eigen::MatrixXd& partial, const ModelSpec& spec,
                                      const ScoreForecaster& forecaster = {},
                                      Warnings* warnings = nullptr,
                                      Execution exec = Execution::parallel);

enum class PenaltyMethod { ols, ridge, pls };

std::string to_string(PenaltyMethod method);
PenaltyMethod parse_penalty_method(const std::string& name);

// Penalty weight per intraday cut point, selected on a validation split.
struct LambdaSchedule {
    PenaltyMethod method = PenaltyMethod::ridge;
    std::vector<double> lambdas;  // index m0 - 1 holds the weight for cut m0

    double at(int m0) const;
};

// {0} followed by 33 log-spaced points from 1e-4 to 1e4.
std::vector<double> default_lambda_grid();

struct LambdaSelection {
    LambdaSchedule schedule;
    Eigen::MatrixXd validation_mape;  // (p - 1) x grid, percent on the count scale
    std::vector<double> grid;
};

// Chooses lambda per cut point by count-scale MAPE of the updated forecasts
// over the validation days [train_days, train_days + validation_days). The
// stacked basis and score models are fitted on the first train_days curves
// only; validation scores come from projecting later days onto that basis.
// Ties prefer the smaller lambda; candidates that fail numerically are
// skipped.
LambdaSelection select_lambda(const FunctionalPanel& panel, int train_days,
                              int validation_days, PenaltyMethod method,
                              const std::vector<double>& grid, int N,
                              Warnings* warnings = nullptr,
                              Execution exec = Execution::parallel);

void write_schedule_csv(const std::vector<std::pair<Weekday, LambdaSchedule>>& schedules,
                        const std::string& path);
std::vector<std::pair<Weekday, LambdaSchedule>> read_schedule_csv(const std::string& path);

}  // namespace fpnsd::update
