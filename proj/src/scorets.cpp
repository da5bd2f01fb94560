#include "fpnsd/scorets.hpp"

#include <cmath>
#include <limits>

namespace fpnsd::scorets {

namespace {

constexpr double kGridStep = 0.01;
constexpr double kPi = 3.14159265358979323846;

struct SesState {
    double level = 0.0;
    double sse = 0.0;
};

SesState ses_run(const Eigen::VectorXd& y, double alpha) {
    SesState st;
    st.level = y[0];
    for (Eigen::Index t = 1; t < y.size(); ++t) {
        const double err = y[t] - st.level;
        st.sse += err * err;
        st.level = alpha * y[t] + (1.0 - alpha) * st.level;
    }
    return st;
}

struct HoltState {
    double level = 0.0;
    double trend = 0.0;
    double sse = 0.0;
};

HoltState holt_run(const Eigen::VectorXd& y, double alpha, double beta) {
    HoltState st;
    st.level = y[0];
    st.trend = y[1] - y[0];
    for (Eigen::Index t = 1; t < y.size(); ++t) {
        const double pred = st.level + st.trend;
        const double err = y[t] - pred;
        st.sse += err * err;
        const double level_new = alpha * y[t] + (1.0 - alpha) * pred;
        st.trend = beta * (level_new - st.level) + (1.0 - beta) * st.trend;
        st.level = level_new;
    }
    return st;
}

// Golden-section refinement of a 1-d objective around a grid minimiser.
// Returns the grid point unless a strictly lower value is found.
double golden_refine(const std::function<double(double)>& f, double centre, double step,
                     double lo_bound, double hi_bound, double f_centre, double* f_out) {
    constexpr double kInvPhi = 0.6180339887498949;
    double a = std::max(lo_bound, centre - step);
    double b = std::min(hi_bound, centre + step);
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < 48; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = f(x2);
        }
    }
    const double x = f1 < f2 ? x1 : x2;
    const double fx = f1 < f2 ? f1 : f2;
    if (fx < f_centre) {
        *f_out = fx;
        return x;
    }
    *f_out = f_centre;
    return centre;
}

void validate(const Eigen::VectorXd& y) {
    if (y.size() < 3) {
        throw data_error("score series needs at least three observations");
    }
    if (!y.allFinite()) {
        throw data_error("score series has non-finite values");
    }
}

}  // namespace

double ses_forecast(const Eigen::VectorXd& series, double alpha, double* sse) {
    validate(series);
    if (alpha < 0.0 || alpha > 1.0) {
        throw config_error("SES alpha must lie in [0, 1]");
    }
    const SesState st = ses_run(series, alpha);
    if (sse != nullptr) {
        *sse = st.sse;
    }
    return st.level;
}

double holt_forecast(const Eigen::VectorXd& series, double alpha, double beta, double* sse) {
    validate(series);
    if (alpha < 0.0 || alpha > 1.0 || beta < 0.0 || beta > 1.0) {
        throw config_error("Holt parameters must lie in [0, 1]");
    }
    const HoltState st = holt_run(series, alpha, beta);
    if (sse != nullptr) {
        *sse = st.sse;
    }
    return st.level + st.trend;
}

double aicc(double sse, int n_errors, int n_params) {
    if (n_errors <= n_params + 1) {
        return std::numeric_limits<double>::infinity();
    }
    const double sigma2 = std::max(sse / n_errors, 1e-300);
    const double loglik = -0.5 * n_errors * (std::log(2.0 * kPi * sigma2) + 1.0);
    const double aic = -2.0 * loglik + 2.0 * n_params;
    return aic + 2.0 * n_params * (n_params + 1.0) / (n_errors - n_params - 1.0);
}

FitForecast fit_forecast(const Eigen::VectorXd& series) {
    validate(series);
    const int n = static_cast<int>(series.size());
    const int n_errors = n - 1;

    FitForecast out;
    out.fit.n = n;

    if (series.maxCoeff() == series.minCoeff()) {
        out.fit.method = Method::ses;
        out.fit.alpha = 0.0;
        out.fit.level = series[0];
        out.fit.sse = 0.0;
        out.fit.aicc = aicc(0.0, n_errors, 2);
        out.forecast = series[0];
        return out;
    }

    // SES: grid then golden refinement.
    double ses_alpha = 0.0;
    double ses_sse = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 100; ++i) {
        const double alpha = i * kGridStep;
        const double sse = ses_run(series, alpha).sse;
        if (sse < ses_sse) {
            ses_sse = sse;
            ses_alpha = alpha;
        }
    }
    ses_alpha = golden_refine([&](double a) { return ses_run(series, a).sse; }, ses_alpha,
                              kGridStep, 0.0, 1.0, ses_sse, &ses_sse);

    // Holt: grid over both parameters, then alternating refinement.
    double holt_alpha = 0.0;
    double holt_beta = 0.0;
    double holt_sse = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 100; ++i) {
        for (int j = 0; j <= 100; ++j) {
            const double sse = holt_run(series, i * kGridStep, j * kGridStep).sse;
            if (sse < holt_sse) {
                holt_sse = sse;
                holt_alpha = i * kGridStep;
                holt_beta = j * kGridStep;
            }
        }
    }
    for (int sweep = 0; sweep < 2; ++sweep) {
        holt_alpha = golden_refine(
            [&](double a) { return holt_run(series, a, holt_beta).sse; }, holt_alpha, kGridStep,
            0.0, 1.0, holt_sse, &holt_sse);
        holt_beta = golden_refine(
            [&](double b) { return holt_run(series, holt_alpha, b).sse; }, holt_beta, kGridStep,
            0.0, 1.0, holt_sse, &holt_sse);
    }

    const double aicc_ses = aicc(ses_sse, n_errors, 2);
    const double aicc_holt = aicc(holt_sse, n_errors, 4);

    if (aicc_holt < aicc_ses) {
        const HoltState st = holt_run(series, holt_alpha, holt_beta);
        out.fit.method = Method::holt;
        out.fit.alpha = holt_alpha;
        out.fit.beta = holt_beta;
        out.fit.level = st.level;
        out.fit.trend = st.trend;
        out.fit.sse = st.sse;
        out.fit.aicc = aicc_holt;
        out.forecast = st.level + st.trend;
    } else {
        const SesState st = ses_run(series, ses_alpha);
        out.fit.method = Method::ses;
        out.fit.alpha = ses_alpha;
        out.fit.level = st.level;
        out.fit.sse = st.sse;
        out.fit.aicc = aicc_ses;
        out.forecast = st.level;
    }
    return out;
}

}  // namespace fpnsd::scorets

namespace fpnsd {

ScoreForecaster default_score_forecaster() {
    return [](const Eigen::VectorXd& series) {
        return scorets::fit_forecast(series).forecast;
    };
}

}  // namespace fpnsd
