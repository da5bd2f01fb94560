#include "fpnsd/ffm.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fpnsd/mlfts.hpp"
#include "fpnsd/parallel.hpp"

namespace fpnsd::ffm {

namespace {

constexpr double kRankTolerance = 1e-12;
constexpr double kRatioFloor = 1e-15;
constexpr double kNoGapRatio = 1.5;

struct Spectrum {
    Eigen::VectorXd values;   // descending, clamped at zero
    Eigen::MatrixXd vectors;  // matching columns
};

Spectrum gram_spectrum(const Eigen::MatrixXd& gram) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success) {
        throw numeric_error("Gram eigendecomposition failed to converge");
    }
    const Eigen::Index n = gram.rows();
    Spectrum out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values[i] = std::max(solver.eigenvalues()[n - 1 - i], 0.0);
        out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    return out;
}

}  // namespace

Eigen::MatrixXd gram_matrix(const FunctionalPanel& panel, Execution exec) {
    const int S = panel.sizes();
    const int n = panel.days();
    if (S < 1 || n < 2) {
        throw data_error("Gram matrix needs at least one size and two days");
    }

    // Per-size curves with quadrature weights folded into one factor.
    std::vector<Eigen::MatrixXd> weighted(S);
    for (int s = 0; s < S; ++s) {
        weighted[s] = panel.values[s] * panel.quad_weights.asDiagonal();
    }

    Eigen::MatrixXd gram(n, n);
    const long pairs = static_cast<long>(n) * (n + 1) / 2;
    const bool use_parallel = exec == Execution::parallel && pairs > 1;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(fpnsd::parallel::max_threads()) \
    if (use_parallel)
#endif
    for (long idx = 0; idx < pairs; ++idx) {
        // Row-major upper triangle: idx -> (t, u) with t <= u.
        long t = static_cast<long>(
            std::floor((2.0 * n + 1.0 - std::sqrt((2.0 * n + 1.0) * (2.0 * n + 1.0) -
                                                  8.0 * static_cast<double>(idx))) /
                       2.0));
        while (t > 0 && t * n - t * (t - 1) / 2 > idx) {
            --t;
        }
        while ((t + 1) * n - (t + 1) * t / 2 <= idx) {
            ++t;
        }
        const long base = t * n - t * (t - 1) / 2;
        const long u = t + (idx - base);
        double acc = 0.0;
        for (int s = 0; s < S; ++s) {
            acc += weighted[s].row(t).dot(panel.values[s].row(u));
        }
        acc /= static_cast<double>(S);
        gram(t, u) = acc;
        gram(u, t) = acc;
    }
    return gram;
}

FactorModel fit_factors(const FunctionalPanel& panel, int q, Warnings* warnings,
                        Execution exec) {
    if (q < 1) {
        throw config_error("factor count q must be positive");
    }
    const int S = panel.sizes();
    const int n = panel.days();

    const Spectrum spec = gram_spectrum(gram_matrix(panel, exec));

    int rank = 0;
    if (spec.values[0] > 0.0) {
        const double floor = spec.values[0] * kRankTolerance;
        while (rank < n && spec.values[rank] > floor) {
            ++rank;
        }
    }
    if (rank == 0) {
        throw numeric_error("Gram matrix is numerically zero; no factors available");
    }
    const int keep = std::min(q, rank);
    FactorModel model;
    model.q = keep;
    model.eigenvalues = spec.values;
    model.truncated = keep < q;
    if (model.truncated) {
        warn(warnings, "factor count reduced from " + std::to_string(q) + " to " +
                           std::to_string(keep) + " (numerical rank)");
    }

    model.factors = std::sqrt(static_cast<double>(n)) * spec.vectors.leftCols(keep);
    for (int k = 0; k < keep; ++k) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index t = 0; t < n; ++t) {
            const double mag = std::abs(model.factors(t, k));
            if (mag > best) {
                best = mag;
                arg = t;
            }
        }
        if (model.factors(arg, k) < 0.0) {
            model.factors.col(k) = -model.factors.col(k);
        }
    }

    model.loadings.resize(S);
    for (int s = 0; s < S; ++s) {
        model.loadings[s] = panel.values[s].transpose() * model.factors /
                            static_cast<double>(n);
    }
    return model;
}

FunctionalPanel residual_panel(const FactorModel& model, const FunctionalPanel& panel) {
    const int S = panel.sizes();
    if (static_cast<int>(model.loadings.size()) != S ||
        model.factors.rows() != panel.days()) {
        throw data_error("factor model does not match the panel shape");
    }
    std::vector<Eigen::MatrixXd> values(S);
    for (int s = 0; s < S; ++s) {
        if (model.loadings[s].rows() != panel.points()) {
            throw data_error("factor loadings do not match the panel grid");
        }
        values[s] = panel.values[s] - model.factors * model.loadings[s].transpose();
    }
    return panel::make_panel(std::move(values), panel.grid, panel.segmentation,
                             panel.size_labels);
}

int select_q(const FunctionalPanel& panel, int q_max, Warnings* warnings, Execution exec) {
    if (q_max < 1) {
        throw config_error("q_max must be positive");
    }
    const int n = panel.days();
    const Spectrum spec = gram_spectrum(gram_matrix(panel, exec));
    if (spec.values[0] <= 0.0) {
        warn(warnings, "zero Gram spectrum; defaulting to one factor");
        return 1;
    }
    const int top = std::min(q_max, n - 1);
    int best_q = 1;
    double best_ratio = -1.0;
    for (int q = 1; q <= top; ++q) {
        const double denom = std::max(spec.values[q], spec.values[0] * kRatioFloor);
        const double ratio = spec.values[q - 1] / denom;
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best_q = q;
        }
    }
    if (best_ratio < kNoGapRatio) {
        warn(warnings, "eigenvalue ratios show no gap; defaulting to one factor");
        return 1;
    }
    return best_q;
}

Eigen::MatrixXd forecast_factor_mlfts(const FunctionalPanel& panel, int q, int K, int L,
                                      const ScoreForecaster& forecaster, Warnings* warnings,
                                      Execution exec) {
    const ScoreForecaster fc = forecaster ? forecaster : default_score_forecaster();
    if (q == 0) {
        const mlfts::Model model = mlfts::fit(panel, K, L, warnings, exec);
        return mlfts::forecast_one_step(model, fc);
    }

    const FactorModel model = fit_factors(panel, q, warnings, exec);
    const FunctionalPanel residuals = residual_panel(model, panel);

    Eigen::VectorXd factor_forecast(model.q);
    for (int k = 0; k < model.q; ++k) {
        factor_forecast[k] = fc(model.factors.col(k));
    }

    const mlfts::Model residual_model = mlfts::fit(residuals, K, L, warnings, exec);
    Eigen::MatrixXd out = mlfts::forecast_one_step(residual_model, fc);
    for (int s = 0; s < panel.sizes(); ++s) {
        out.row(s) += (model.loadings[s] * factor_forecast).transpose();
    }
    return out;
}

}  // namespace fpnsd::ffm
