#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "fpnsd/common.hpp"
#include "fpnsd/panel.hpp"

namespace fpnsd::eval {

// 50/25/25 chronological split; the validation boundary rounds down.
// Train covers days [0, train_end), validation [train_end, validation_end),
// test [validation_end, n).
struct SplitPlan {
    int train_end = 0;
    int validation_end = 0;
    int n = 0;

    int train_days() const { return train_end; }
    int validation_days() const { return validation_end - train_end; }
    int test_days() const { return n - validation_end; }

    static SplitPlan make(int n);
};

// Fits on panel.first_days(w) and returns a sizes-by-points log-scale
// forecast of day w.
using WindowForecaster = std::function<Eigen::MatrixXd(const FunctionalPanel&)>;

struct BacktestResult {
    int start = 0;                             // first forecast target day
    std::vector<Eigen::MatrixXd> forecasts;    // log scale, one per target day
};

// Expanding-window one-step backtest: target days start..n-1, each forecast
// fitted on all prior days. Exceptions from a window are rethrown with the
// window index attached (the earliest failing window wins).
BacktestResult expanding_window(const FunctionalPanel& panel,
                                const WindowForecaster& forecaster, int start,
                                Execution exec = Execution::parallel);

struct MapeResult {
    Eigen::MatrixXd by_cell;     // S x p percent, NaN where no valid day exists
    long excluded_cells = 0;     // zero-actual (day, size, point) triples skipped
    Eigen::VectorXd by_hour;     // p, average over sizes of cell MAPEs
    Eigen::VectorXd by_size;     // S, average over hours
};

// Count-scale MAPE per (size, point) over the forecast days. Zero actuals
// are excluded and counted; throws numeric_error when nothing remains.
MapeResult mape(const std::vector<Eigen::MatrixXd>& actual_counts,
                const std::vector<Eigen::MatrixXd>& forecast_counts);

struct CoverageResult {
    Eigen::MatrixXd ecp;  // S x p empirical coverage
    Eigen::MatrixXd cpd;  // S x p |ecp - (1 - alpha)|
};

CoverageResult ecp_cpd(const std::vector<Eigen::MatrixXd>& actual_counts,
                       const std::vector<Eigen::MatrixXd>& lower,
                       const std::vector<Eigen::MatrixXd>& upper, double alpha);

// Mean interval score per (size, point): width plus 2/alpha times the
// distance outside the band.
Eigen::MatrixXd mean_interval_score(const std::vector<Eigen::MatrixXd>& actual_counts,
                                    const std::vector<Eigen::MatrixXd>& lower,
                                    const std::vector<Eigen::MatrixXd>& upper, double alpha);

double interval_score(double lower, double upper, double actual, double alpha);

enum class Loss { squared, absolute };

// Per-window loss on the count scale, averaged over all (size, point)
// cells: the input series for dm_test.
Eigen::VectorXd loss_series(const std::vector<Eigen::MatrixXd>& actual_counts,
                            const std::vector<Eigen::MatrixXd>& forecast_counts,
                            Loss loss = Loss::squared);

struct DmResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool degenerate = false;  // zero long-run variance with a non-zero mean
};

// Two-sided Diebold-Mariano test on per-window losses with a Bartlett
// long-run variance at lag floor(W^(1/3)). Identical losses give p = 1.
DmResult dm_test(const Eigen::VectorXd& loss_a, const Eigen::VectorXd& loss_b);

struct WinCounts {
    std::vector<std::string> methods;        // as supplied
    std::vector<std::string> groups;         // weekday names
    Eigen::MatrixXd counts;                  // groups x methods
    Eigen::VectorXi ties;                    // per group
};

// Per weekday, credits each grid column's lowest average MAPE to one
// method; exact ties go to the lexicographically first name and are
// counted. Entries are S-by-p MAPE matrices indexed [group][method].
WinCounts win_counts(const std::vector<std::string>& methods,
                     const std::vector<std::string>& groups,
                     const std::vector<std::vector<Eigen::MatrixXd>>& mape_by_group);

}  // namespace fpnsd::eval
