#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fpnsd/common.hpp"

namespace fpnsd::intervals {

// In-sample one-step forecast errors on the count scale, one V-by-m matrix
// per size: V held-out days, m grid points (m < p for updated forecasts).
struct ResidualStore {
    std::vector<Eigen::MatrixXd> residuals;

    int sizes() const { return static_cast<int>(residuals.size()); }
    int draws() const {
        return residuals.empty() ? 0 : static_cast<int>(residuals.front().rows());
    }
    int points() const {
        return residuals.empty() ? 0 : static_cast<int>(residuals.front().cols());
    }
};

enum class Method { sd, conformal };

std::string to_string(Method method);
Method parse_method(const std::string& name);

struct ThetaOptions {
    bool per_point = false;   // calibrate theta per grid point instead of pooling
    double grid_step = 0.01;
    double grid_max = 5.0;    // extended by doubling when coverage cannot be reached
};

// Per-size-and-point standard deviation of the residuals (divisor V - 1).
Eigen::MatrixXd pointwise_sd(const ResidualStore& store);

// Multiplier theta per size such that |residual| <= theta * delta covers a
// fraction of the store closest to 1 - alpha, pooling all days and points
// of that size. Ties prefer the smaller theta; an all-zero delta row yields
// theta = 0 with a warning.
Eigen::VectorXd calibrate_theta(const ResidualStore& store, const Eigen::MatrixXd& delta,
                                double alpha, const ThetaOptions& options = {},
                                Warnings* warnings = nullptr);

// Per-point variant: one theta per (size, point) cell calibrated on that
// cell's column of residuals.
Eigen::MatrixXd calibrate_theta_pointwise(const ResidualStore& store,
                                          const Eigen::MatrixXd& delta, double alpha,
                                          const ThetaOptions& options = {},
                                          Warnings* warnings = nullptr);

// Split-conformal half-width per (size, point): the ceil((1-alpha)(V+1))-th
// smallest absolute residual of that cell, capped at the maximum.
Eigen::MatrixXd conformal_quantile(const ResidualStore& store, double alpha,
                                   Warnings* warnings = nullptr);

// Everything needed to turn a point forecast into bands at one level.
struct Calibration {
    double alpha = 0.2;
    Eigen::MatrixXd delta;             // S x m, pointwise sd
    Eigen::VectorXd theta;             // S, pooled multiplier
    Eigen::MatrixXd theta_pointwise;   // S x m, only when per_point
    bool per_point = false;
    Eigen::MatrixXd conformal;         // S x m half-widths
};

Calibration calibrate(const ResidualStore& store, double alpha,
                      const ThetaOptions& options = {}, Warnings* warnings = nullptr);

struct IntervalPair {
    Eigen::MatrixXd lower;  // count scale, clamped at zero
    Eigen::MatrixXd upper;
};

// point_forecast is on the count scale, sizes by points, matching the
// calibration shape.
IntervalPair build_interval(const Eigen::MatrixXd& point_forecast,
                            const Calibration& calibration, Method method, double alpha);

// Bands around an updated forecast from residuals of updated forecasts at
// the same cut point (matrices cover the remaining grid only).
IntervalPair update_intervals(const Eigen::MatrixXd& updated_forecast,
                              const ResidualStore& updating_residuals, Method method,
                              double alpha, const ThetaOptions& options = {},
                              Warnings* warnings = nullptr);

void write_calibration_csv(const Calibration& cal80, const Calibration& cal95,
                           const std::vector<double>& size_labels,
                           const Eigen::VectorXd& grid, const std::string& path);

}  // namespace fpnsd::intervals
