#include "fpnsd/mlfts.hpp"

#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fpnsd/parallel.hpp"

namespace fpnsd::mlfts {

Decomposition decompose(const FunctionalPanel& panel) {
    const int S = panel.sizes();
    const int n = panel.days();
    const int p = panel.points();
    if (S < 1 || n < 2) {
        throw data_error("decomposition needs at least one size and two days");
    }

    Decomposition dec;
    dec.means.resize(S, p);
    dec.specific_curves.resize(S);
    dec.common_curves = Eigen::MatrixXd::Zero(n, p);

    std::vector<Eigen::MatrixXd> centred(S);
    for (int s = 0; s < S; ++s) {
        dec.means.row(s) = panel.values[s].colwise().mean();
        centred[s] = panel.values[s].rowwise() - dec.means.row(s);
        dec.common_curves += centred[s];
    }
    dec.common_curves /= static_cast<double>(S);
    for (int s = 0; s < S; ++s) {
        dec.specific_curves[s] = centred[s] - dec.common_curves;
    }
    return dec;
}

Model fit(const FunctionalPanel& panel, int K, int L, Warnings* warnings, Execution exec) {
    if (K < 1 || L < 1) {
        throw config_error("MLFTS orders K and L must be positive");
    }
    const Decomposition dec = decompose(panel);
    const int S = panel.sizes();

    Model model;
    model.means = dec.means;
    model.grid = panel.grid;
    model.quad_weights = panel.quad_weights;
    model.size_labels = panel.size_labels;
    model.common = fpca::fit(dec.common_curves, panel.quad_weights, K, warnings);
    model.specific.resize(S);
    model.residuals.resize(S);

    std::vector<Warnings> local(S);
    std::exception_ptr failure;
    const bool use_parallel = exec == Execution::parallel && S > 1;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(fpnsd::parallel::max_threads()) \
    if (use_parallel)
#endif
    for (int s = 0; s < S; ++s) {
        try {
            model.specific[s] = fpca::fit(dec.specific_curves[s], panel.quad_weights, L,
                                          &local[s]);
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
            {
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    for (int s = 0; s < S; ++s) {
        for (auto& msg : local[s].messages) {
            warn(warnings, "size " + std::to_string(s) + ": " + msg);
        }
    }

    const Eigen::MatrixXd common_fit =
        (model.common.scores * model.common.components.transpose()).rowwise() +
        model.common.mean.transpose();
    for (int s = 0; s < S; ++s) {
        const Eigen::MatrixXd specific_fit =
            (model.specific[s].scores * model.specific[s].components.transpose()).rowwise() +
            model.specific[s].mean.transpose();
        model.residuals[s] =
            panel.values[s] - ((common_fit + specific_fit).rowwise() + dec.means.row(s));
    }
    return model;
}

double variance_proportion(const Model& model, int size, bool* degenerate) {
    if (size < 0 || size >= model.sizes()) {
        throw data_error("variance_proportion: size index out of range");
    }
    if (degenerate != nullptr) {
        *degenerate = false;
    }
    const double common = model.common.eigenvalues.size() > 0 ? model.common.eigenvalues.sum()
                                                              : 0.0;
    const double specific = model.specific[size].eigenvalues.size() > 0
                                ? model.specific[size].eigenvalues.sum()
                                : 0.0;
    const double total = common + specific;
    if (total <= 0.0) {
        if (degenerate != nullptr) {
            *degenerate = true;
        }
        return 0.5;
    }
    return common / total;
}

Eigen::MatrixXd forecast_one_step(const Model& model, const ScoreForecaster& forecaster) {
    const ScoreForecaster fc = forecaster ? forecaster : default_score_forecaster();
    const int S = model.sizes();
    const int p = model.points();

    Eigen::VectorXd common_scores(model.common.order());
    for (int k = 0; k < model.common.order(); ++k) {
        common_scores[k] = fc(model.common.scores.col(k));
    }
    const Eigen::VectorXd common_part =
        model.common.mean + model.common.components * common_scores;

    Eigen::MatrixXd out(S, p);
    for (int s = 0; s < S; ++s) {
        const auto& basis = model.specific[s];
        Eigen::VectorXd scores(basis.order());
        for (int l = 0; l < basis.order(); ++l) {
            scores[l] = fc(basis.scores.col(l));
        }
        const Eigen::VectorXd specific_part = basis.mean + basis.components * scores;
        out.row(s) =
            (model.means.row(s).transpose() + common_part + specific_part).transpose();
    }
    return out;
}

}  // namespace fpnsd::mlfts
