#include "fpnsd/intervals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fpnsd/detail/csv.hpp"

namespace fpnsd::intervals {

namespace {

void validate_store(const ResidualStore& store) {
    if (store.sizes() < 1) {
        throw data_error("residual store is empty");
    }
    const int V = store.draws();
    const int m = store.points();
    if (V < 2 || m < 1) {
        throw data_error("residual store needs at least two days and one point");
    }
    for (const auto& mat : store.residuals) {
        if (mat.rows() != V || mat.cols() != m) {
            throw data_error("residual matrices must share one shape");
        }
        if (!mat.allFinite()) {
            throw data_error("residual store has non-finite values");
        }
    }
}

void validate_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw config_error("alpha must lie strictly between 0 and 1");
    }
}

// Smallest grid theta whose empirical coverage is closest to the target.
// The grid is multiples of grid_step up to grid_max, doubling the ceiling
// while the target stays out of reach. Coverage is a step function jumping
// only at the ratios, so the argmin over the full grid equals the argmin
// over zero plus the first grid point at or above each distinct ratio.
double theta_argmin(const std::vector<double>& sorted_ratios, double target,
                    const ThetaOptions& options) {
    const double total = static_cast<double>(sorted_ratios.size());
    auto coverage = [&](double theta) {
        const auto it =
            std::upper_bound(sorted_ratios.begin(), sorted_ratios.end(), theta);
        return static_cast<double>(it - sorted_ratios.begin()) / total;
    };
    const bool reachable = !std::isinf(sorted_ratios.back()) || coverage(1e300) >= target;
    double grid_max = options.grid_max;
    for (int i = 0; i < 64 && reachable && coverage(grid_max) < target; ++i) {
        grid_max *= 2.0;
    }

    std::vector<double> candidates;
    candidates.push_back(0.0);
    for (double ratio : sorted_ratios) {
        if (!std::isfinite(ratio) || ratio <= 0.0) {
            continue;
        }
        double k = std::ceil(ratio / options.grid_step);
        while (k > 0.0 && (k - 1.0) * options.grid_step >= ratio) {
            k -= 1.0;
        }
        while (k * options.grid_step < ratio) {
            k += 1.0;
        }
        const double theta = k * options.grid_step;
        if (theta <= grid_max && theta != candidates.back()) {
            candidates.push_back(theta);
        }
    }
    double best_theta = 0.0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (double theta : candidates) {
        const double gap = std::abs(coverage(theta) - target);
        if (gap < best_gap) {
            best_gap = gap;
            best_theta = theta;
        }
    }
    return best_theta;
}

}  // namespace

std::string to_string(Method method) {
    return method == Method::sd ? "sd" : "conformal";
}

Method parse_method(const std::string& name) {
    if (name == "sd") {
        return Method::sd;
    }
    if (name == "conformal") {
        return Method::conformal;
    }
    throw config_error("unknown interval method: " + name);
}

Eigen::MatrixXd pointwise_sd(const ResidualStore& store) {
    validate_store(store);
    const int S = store.sizes();
    const int V = store.draws();
    const int m = store.points();
    Eigen::MatrixXd sd(S, m);
    for (int s = 0; s < S; ++s) {
        const Eigen::RowVectorXd mean = store.residuals[s].colwise().mean();
        const Eigen::MatrixXd centred = store.residuals[s].rowwise() - mean;
        sd.row(s) = (centred.array().square().colwise().sum() / (V - 1)).sqrt();
    }
    return sd;
}

Eigen::VectorXd calibrate_theta(const ResidualStore& store, const Eigen::MatrixXd& delta,
                                double alpha, const ThetaOptions& options,
                                Warnings* warnings) {
    validate_store(store);
    validate_alpha(alpha);
    const int S = store.sizes();
    if (delta.rows() != S || delta.cols() != store.points()) {
        throw data_error("delta shape does not match the residual store");
    }
    if ((delta.array() < 0.0).any()) {
        throw data_error("delta must be non-negative");
    }
    Eigen::VectorXd theta(S);
    for (int s = 0; s < S; ++s) {
        if (delta.row(s).maxCoeff() == 0.0) {
            theta[s] = 0.0;
            warn(warnings, "size " + std::to_string(s) +
                               ": zero spread, theta calibration degenerate");
            continue;
        }
        std::vector<double> ratios;
        ratios.reserve(static_cast<std::size_t>(store.draws()) * store.points());
        for (int j = 0; j < store.points(); ++j) {
            const double d = delta(s, j);
            for (int i = 0; i < store.draws(); ++i) {
                const double abs_err = std::abs(store.residuals[s](i, j));
                if (d > 0.0) {
                    ratios.push_back(abs_err / d);
                } else {
                    ratios.push_back(abs_err == 0.0
                                         ? 0.0
                                         : std::numeric_limits<double>::infinity());
                }
            }
        }
        std::sort(ratios.begin(), ratios.end());
        theta[s] = theta_argmin(ratios, 1.0 - alpha, options);
    }
    return theta;
}

Eigen::MatrixXd calibrate_theta_pointwise(const ResidualStore& store,
                                          const Eigen::MatrixXd& delta, double alpha,
                                          const ThetaOptions& options, Warnings* warnings) {
    validate_store(store);
    validate_alpha(alpha);
    const int S = store.sizes();
    const int m = store.points();
    if (delta.rows() != S || delta.cols() != m) {
        throw data_error("delta shape does not match the residual store");
    }
    Eigen::MatrixXd theta(S, m);
    for (int s = 0; s < S; ++s) {
        for (int j = 0; j < m; ++j) {
            if (delta(s, j) == 0.0) {
                theta(s, j) = 0.0;
                warn(warnings, "size " + std::to_string(s) + " point " + std::to_string(j) +
                                   ": zero spread, theta calibration degenerate");
                continue;
            }
            std::vector<double> ratios;
            ratios.reserve(static_cast<std::size_t>(store.draws()));
            for (int i = 0; i < store.draws(); ++i) {
                ratios.push_back(std::abs(store.residuals[s](i, j)) / delta(s, j));
            }
            std::sort(ratios.begin(), ratios.end());
            theta(s, j) = theta_argmin(ratios, 1.0 - alpha, options);
        }
    }
    return theta;
}

Eigen::MatrixXd conformal_quantile(const ResidualStore& store, double alpha,
                                   Warnings* warnings) {
    validate_store(store);
    validate_alpha(alpha);
    const int S = store.sizes();
    const int V = store.draws();
    const int m = store.points();
    if (static_cast<double>(V) < std::ceil(1.0 / alpha) - 1.0) {
        warn(warnings, "conformal calibration has too few days for level " +
                           csv::format_double(alpha) + "; widths cap at the maximum");
    }
    // Integer-valued products of (1 - alpha)(V + 1) can land a hair above
    // the integer in floating point; nudge before taking the ceiling.
    long rank = static_cast<long>(std::ceil((1.0 - alpha) * (V + 1) - 1e-9));
    rank = std::max(rank, 1L);
    Eigen::MatrixXd q(S, m);
    std::vector<double> column(static_cast<std::size_t>(V));
    for (int s = 0; s < S; ++s) {
        for (int j = 0; j < m; ++j) {
            for (int i = 0; i < V; ++i) {
                column[static_cast<std::size_t>(i)] = std::abs(store.residuals[s](i, j));
            }
            const long k = std::min(rank, static_cast<long>(V));
            std::nth_element(column.begin(), column.begin() + (k - 1), column.end());
            q(s, j) = column[static_cast<std::size_t>(k - 1)];
        }
    }
    return q;
}

Calibration calibrate(const ResidualStore& store, double alpha, const ThetaOptions& options,
                      Warnings* warnings) {
    Calibration cal;
    cal.alpha = alpha;
    cal.delta = pointwise_sd(store);
    cal.per_point = options.per_point;
    if (options.per_point) {
        cal.theta_pointwise =
            calibrate_theta_pointwise(store, cal.delta, alpha, options, warnings);
        cal.theta = Eigen::VectorXd::Zero(store.sizes());
        for (int s = 0; s < store.sizes(); ++s) {
            cal.theta[s] = cal.theta_pointwise.row(s).mean();
        }
    } else {
        cal.theta = calibrate_theta(store, cal.delta, alpha, options, warnings);
    }
    cal.conformal = conformal_quantile(store, alpha, warnings);
    return cal;
}

IntervalPair build_interval(const Eigen::MatrixXd& point_forecast,
                            const Calibration& calibration, Method method, double alpha) {
    validate_alpha(alpha);
    if (alpha != calibration.alpha) {
        throw config_error("interval level does not match the calibration level");
    }
    if (point_forecast.rows() != calibration.delta.rows() ||
        point_forecast.cols() != calibration.delta.cols()) {
        throw data_error("forecast shape does not match the calibration");
    }
    Eigen::MatrixXd half;
    if (method == Method::sd) {
        if (calibration.per_point) {
            half = calibration.theta_pointwise.cwiseProduct(calibration.delta);
        } else {
            half = calibration.theta.asDiagonal() * calibration.delta;
        }
    } else {
        half = calibration.conformal;
    }
    IntervalPair out;
    out.lower = (point_forecast - half).cwiseMax(0.0);
    out.upper = point_forecast + half;
    return out;
}

IntervalPair update_intervals(const Eigen::MatrixXd& updated_forecast,
                              const ResidualStore& updating_residuals, Method method,
                              double alpha, const ThetaOptions& options, Warnings* warnings) {
    if (updating_residuals.sizes() == 0) {
        throw data_error("no residual store for the requested cut point");
    }
    if (updated_forecast.rows() != updating_residuals.sizes() ||
        updated_forecast.cols() != updating_residuals.points()) {
        throw data_error("updated forecast shape does not match its residual store");
    }
    const Calibration cal = calibrate(updating_residuals, alpha, options, warnings);
    return build_interval(updated_forecast, cal, method, alpha);
}

void write_calibration_csv(const Calibration& cal80, const Calibration& cal95,
                           const std::vector<double>& size_labels,
                           const Eigen::VectorXd& grid, const std::string& path) {
    const int S = static_cast<int>(cal80.delta.rows());
    const int m = static_cast<int>(cal80.delta.cols());
    if (cal95.delta.rows() != S || cal95.delta.cols() != m ||
        static_cast<int>(size_labels.size()) != S || static_cast<int>(grid.size()) != m) {
        throw data_error("calibration shapes do not match");
    }
    std::string out = "size,u,delta,q80,q95,theta80,theta95\n";
    for (int s = 0; s < S; ++s) {
        for (int j = 0; j < m; ++j) {
            out += csv::format_double(size_labels[s]);
            out += ',';
            out += csv::format_double(grid[j]);
            out += ',';
            out += csv::format_double(cal80.delta(s, j));
            out += ',';
            out += csv::format_double(cal80.conformal(s, j));
            out += ',';
            out += csv::format_double(cal95.conformal(s, j));
            out += ',';
            out += csv::format_double(cal80.per_point ? cal80.theta_pointwise(s, j)
                                                      : cal80.theta[s]);
            out += ',';
            out += csv::format_double(cal95.per_point ? cal95.theta_pointwise(s, j)
                                                      : cal95.theta[s]);
            out += '\n';
        }
    }
    csv::write_file(path, out);
}

}  // namespace fpnsd::intervals
