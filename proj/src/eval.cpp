#include "fpnsd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fpnsd/parallel.hpp"

namespace fpnsd::eval {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void validate_tracks(const std::vector<Eigen::MatrixXd>& actual,
                     const std::vector<Eigen::MatrixXd>& other, const char* what) {
    if (actual.empty() || actual.size() != other.size()) {
        throw data_error(std::string(what) + ": need matching non-empty forecast tracks");
    }
    for (std::size_t w = 0; w < actual.size(); ++w) {
        if (actual[w].rows() != actual[0].rows() || actual[w].cols() != actual[0].cols() ||
            other[w].rows() != actual[0].rows() || other[w].cols() != actual[0].cols()) {
            throw data_error(std::string(what) + ": matrices must share one shape");
        }
    }
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

SplitPlan SplitPlan::make(int n) {
    if (n < 4) {
        throw data_error("split needs at least four days");
    }
    SplitPlan plan;
    plan.n = n;
    plan.train_end = n / 2;
    plan.validation_end = (3 * n) / 4;
    return plan;
}

BacktestResult expanding_window(const FunctionalPanel& panel,
                                const WindowForecaster& forecaster, int start,
                                Execution exec) {
    const int n = panel.days();
    if (start < 3 || start >= n) {
        throw config_error("expanding window start must lie in [3, n)");
    }
    if (!forecaster) {
        throw config_error("expanding window needs a forecaster");
    }
    BacktestResult out;
    out.start = start;
    const int windows = n - start;
    out.forecasts.resize(windows);

    std::vector<std::exception_ptr> failures(windows);
    const bool use_parallel = exec == Execution::parallel && windows > 1;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(fpnsd::parallel::max_threads()) \
    if (use_parallel)
#endif
    for (int w = 0; w < windows; ++w) {
        try {
            out.forecasts[w] = forecaster(panel.first_days(start + w));
        } catch (...) {
            failures[w] = std::current_exception();
        }
    }
    for (int w = 0; w < windows; ++w) {
        if (failures[w]) {
            try {
                std::rethrow_exception(failures[w]);
            } catch (const std::exception& e) {
                throw numeric_error("window " + std::to_string(start + w) +
                                    " failed: " + e.what());
            }
        }
    }
    for (int w = 0; w < windows; ++w) {
        if (out.forecasts[w].rows() != panel.sizes() ||
            out.forecasts[w].cols() != panel.points()) {
            throw data_error("forecaster returned a wrong shape at window " +
                             std::to_string(start + w));
        }
    }
    return out;
}

MapeResult mape(const std::vector<Eigen::MatrixXd>& actual_counts,
                const std::vector<Eigen::MatrixXd>& forecast_counts) {
    validate_tracks(actual_counts, forecast_counts, "mape");
    const Eigen::Index S = actual_counts[0].rows();
    const Eigen::Index p = actual_counts[0].cols();

    MapeResult out;
    out.by_cell.setConstant(S, p, kNaN);
    long total_valid = 0;
    for (Eigen::Index s = 0; s < S; ++s) {
        for (Eigen::Index j = 0; j < p; ++j) {
            double acc = 0.0;
            long valid = 0;
            for (const auto& w : actual_counts) {
                if (w(s, j) > 0.0) {
                    ++valid;
                } else {
                    ++out.excluded_cells;
                }
            }
            for (std::size_t k = 0; k < actual_counts.size(); ++k) {
                const double a = actual_counts[k](s, j);
                if (a > 0.0) {
                    acc += std::abs(a - forecast_counts[k](s, j)) / a;
                }
            }
            if (valid > 0) {
                out.by_cell(s, j) = 100.0 * acc / static_cast<double>(valid);
                total_valid += valid;
            }
        }
    }
    if (total_valid == 0) {
        throw numeric_error("MAPE undefined: every actual count is zero");
    }

    out.by_hour.setConstant(p, kNaN);
    for (Eigen::Index j = 0; j < p; ++j) {
        double acc = 0.0;
        int cnt = 0;
        for (Eigen::Index s = 0; s < S; ++s) {
            if (!std::isnan(out.by_cell(s, j))) {
                acc += out.by_cell(s, j);
                ++cnt;
            }
        }
        if (cnt > 0) {
            out.by_hour[j] = acc / cnt;
        }
    }
    out.by_size.setConstant(S, kNaN);
    for (Eigen::Index s = 0; s < S; ++s) {
        double acc = 0.0;
        int cnt = 0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (!std::isnan(out.by_cell(s, j))) {
                acc += out.by_cell(s, j);
                ++cnt;
            }
        }
        if (cnt > 0) {
            out.by_size[s] = acc / cnt;
        }
    }
    return out;
}

CoverageResult ecp_cpd(const std::vector<Eigen::MatrixXd>& actual_counts,
                       const std::vector<Eigen::MatrixXd>& lower,
                       const std::vector<Eigen::MatrixXd>& upper, double alpha) {
    validate_tracks(actual_counts, lower, "ecp");
    validate_tracks(actual_counts, upper, "ecp");
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw config_error("alpha must lie strictly between 0 and 1");
    }
    const Eigen::Index S = actual_counts[0].rows();
    const Eigen::Index p = actual_counts[0].cols();
    const double W = static_cast<double>(actual_counts.size());

    CoverageResult out;
    out.ecp = Eigen::MatrixXd::Zero(S, p);
    for (std::size_t w = 0; w < actual_counts.size(); ++w) {
        for (Eigen::Index s = 0; s < S; ++s) {
            for (Eigen::Index j = 0; j < p; ++j) {
                const double a = actual_counts[w](s, j);
                if (a >= lower[w](s, j) && a <= upper[w](s, j)) {
                    out.ecp(s, j) += 1.0;
                }
            }
        }
    }
    out.ecp /= W;
    out.cpd = (out.ecp.array() - (1.0 - alpha)).abs();
    return out;
}

double interval_score(double lower, double upper, double actual, double alpha) {
    if (upper < lower) {
        throw data_error("interval score needs lower <= upper");
    }
    double score = upper - lower;
    if (actual < lower) {
        score += (2.0 / alpha) * (lower - actual);
    }
    if (actual > upper) {
        score += (2.0 / alpha) * (actual - upper);
    }
    return score;
}

Eigen::MatrixXd mean_interval_score(const std::vector<Eigen::MatrixXd>& actual_counts,
                                    const std::vector<Eigen::MatrixXd>& lower,
                                    const std::vector<Eigen::MatrixXd>& upper, double alpha) {
    validate_tracks(actual_counts, lower, "interval_score");
    validate_tracks(actual_counts, upper, "interval_score");
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw config_error("alpha must lie strictly between 0 and 1");
    }
    const Eigen::Index S = actual_counts[0].rows();
    const Eigen::Index p = actual_counts[0].cols();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(S, p);
    for (std::size_t w = 0; w < actual_counts.size(); ++w) {
        for (Eigen::Index s = 0; s < S; ++s) {
            for (Eigen::Index j = 0; j < p; ++j) {
                out(s, j) +=
                    interval_score(lower[w](s, j), upper[w](s, j), actual_counts[w](s, j),
                                   alpha);
            }
        }
    }
    return out / static_cast<double>(actual_counts.size());
}

Eigen::VectorXd loss_series(const std::vector<Eigen::MatrixXd>& actual_counts,
                            const std::vector<Eigen::MatrixXd>& forecast_counts, Loss loss) {
    validate_tracks(actual_counts, forecast_counts, "loss_series");
    Eigen::VectorXd out(static_cast<Eigen::Index>(actual_counts.size()));
    for (std::size_t w = 0; w < actual_counts.size(); ++w) {
        const Eigen::MatrixXd err = actual_counts[w] - forecast_counts[w];
        out[static_cast<Eigen::Index>(w)] = loss == Loss::squared
                                                ? err.array().square().mean()
                                                : err.array().abs().mean();
    }
    return out;
}

DmResult dm_test(const Eigen::VectorXd& loss_a, const Eigen::VectorXd& loss_b) {
    const Eigen::Index W = loss_a.size();
    if (W != loss_b.size()) {
        throw data_error("loss series must have equal length");
    }
    if (W < 10) {
        throw data_error("DM test needs at least 10 loss pairs");
    }
    if (!loss_a.allFinite() || !loss_b.allFinite()) {
        throw data_error("loss series must be finite");
    }

    const Eigen::VectorXd d = loss_a - loss_b;
    DmResult out;
    if (d.cwiseAbs().maxCoeff() == 0.0) {
        out.statistic = 0.0;
        out.p_value = 1.0;
        return out;
    }

    const double mean = d.mean();
    const Eigen::VectorXd centred = d.array() - mean;
    const int lag = static_cast<int>(std::floor(std::cbrt(static_cast<double>(W))));
    double lrv = centred.squaredNorm() / static_cast<double>(W);
    for (int k = 1; k <= lag; ++k) {
        double gamma = 0.0;
        for (Eigen::Index t = k; t < W; ++t) {
            gamma += centred[t] * centred[t - k];
        }
        gamma /= static_cast<double>(W);
        lrv += 2.0 * (1.0 - static_cast<double>(k) / (lag + 1.0)) * gamma;
    }
    lrv = std::max(lrv, 0.0);

    if (lrv <= 0.0) {
        out.degenerate = true;
        out.statistic = mean > 0.0 ? std::numeric_limits<double>::infinity()
                                   : -std::numeric_limits<double>::infinity();
        out.p_value = 0.0;
        return out;
    }
    out.statistic = mean / std::sqrt(lrv / static_cast<double>(W));
    out.p_value = 2.0 * normal_cdf(-std::abs(out.statistic));
    return out;
}

WinCounts win_counts(const std::vector<std::string>& methods,
                     const std::vector<std::string>& groups,
                     const std::vector<std::vector<Eigen::MatrixXd>>& mape_by_group) {
    const int M = static_cast<int>(methods.size());
    const int G = static_cast<int>(groups.size());
    if (M < 2) {
        throw data_error("win counts need at least two methods");
    }
    if (G < 1 || static_cast<int>(mape_by_group.size()) != G) {
        throw data_error("win counts need one MAPE set per group");
    }

    WinCounts out;
    out.methods = methods;
    out.groups = groups;
    out.counts = Eigen::MatrixXd::Zero(G, M);
    out.ties = Eigen::VectorXi::Zero(G);

    for (int g = 0; g < G; ++g) {
        const auto& per_method = mape_by_group[g];
        if (static_cast<int>(per_method.size()) != M) {
            throw data_error("group " + groups[g] + " is missing method MAPEs");
        }
        const Eigen::Index S = per_method[0].rows();
        const Eigen::Index p = per_method[0].cols();
        for (int m = 1; m < M; ++m) {
            if (per_method[m].rows() != S || per_method[m].cols() != p) {
                throw data_error("MAPE matrices must share one shape");
            }
        }
        for (Eigen::Index j = 0; j < p; ++j) {
            // Column average over sizes, skipping undefined cells.
            std::vector<double> column_mape(M, kNaN);
            for (int m = 0; m < M; ++m) {
                double acc = 0.0;
                int cnt = 0;
                for (Eigen::Index s = 0; s < S; ++s) {
                    const double v = per_method[m](s, j);
                    if (!std::isnan(v)) {
                        acc += v;
                        ++cnt;
                    }
                }
                if (cnt > 0) {
                    column_mape[m] = acc / cnt;
                }
            }
            double best = std::numeric_limits<double>::infinity();
            int n_best = 0;
            for (int m = 0; m < M; ++m) {
                if (std::isnan(column_mape[m])) {
                    continue;
                }
                if (column_mape[m] < best) {
                    best = column_mape[m];
                    n_best = 1;
                } else if (column_mape[m] == best) {
                    ++n_best;
                }
            }
            if (!std::isfinite(best)) {
                continue;
            }
            int winner = -1;
            for (int m = 0; m < M; ++m) {
                if (!std::isnan(column_mape[m]) && column_mape[m] == best &&
                    (winner < 0 || methods[m] < methods[winner])) {
                    winner = m;
                }
            }
            out.counts(g, winner) += 1.0;
            if (n_best > 1) {
                out.ties[g] += 1;
            }
        }
    }
    return out;
}

}  // namespace fpnsd::eval
