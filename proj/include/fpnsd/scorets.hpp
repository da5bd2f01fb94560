#pragma once

#include <Eigen/Dense>
#include <functional>

#include "fpnsd/common.hpp"

namespace fpnsd {

// One-step forecaster for a univariate score series.
using ScoreForecaster = std::function<double(const Eigen::VectorXd&)>;

namespace scorets {

enum class Method { ses, holt };

struct SmoothingFit {
    Method method = Method::ses;
    double alpha = 0.0;
    double beta = 0.0;   // holt only
    double level = 0.0;  // final state
    double trend = 0.0;  // holt only
    double sse = 0.0;
    double aicc = 0.0;
    int n = 0;
};

struct FitForecast {
    SmoothingFit fit;
    double forecast = 0.0;
};

// Simple exponential smoothing with fixed alpha; returns the one-step
// forecast and optionally the in-sample one-step SSE.
double ses_forecast(const Eigen::VectorXd& series, double alpha, double* sse = nullptr);

// Holt linear trend with fixed parameters; level starts at the first
// observation, trend at the first difference.
double holt_forecast(const Eigen::VectorXd& series, double alpha, double beta,
                     double* sse = nullptr);

// Fits SES and Holt by one-step SSE over an alpha/beta grid of step 0.01
// refined by golden-section search, then picks the method by AICc computed
// from the Gaussian likelihood of the one-step errors (k = 2 for SES, 4 for
// Holt; ties and degenerate likelihoods fall back to SES). Constant series
// short-circuit to SES forecasting the constant.
FitForecast fit_forecast(const Eigen::VectorXd& series);

// AICc of a smoothing fit given its SSE over n - 1 one-step errors.
double aicc(double sse, int n_errors, int n_params);

}  // namespace scorets

// fit_forecast wrapped as a ScoreForecaster.
ScoreForecaster default_score_forecaster();

}  // namespace fpnsd
