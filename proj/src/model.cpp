#include "fpnsd/model.hpp"

#include "fpnsd/ffm.hpp"
#include "fpnsd/mlfts.hpp"

namespace fpnsd {

std::string to_string(ModelKind kind) {
    return kind == ModelKind::mlfts ? "mlfts" : "factor+mlfts";
}

ModelKind parse_model_kind(const std::string& name) {
    if (name == "mlfts") {
        return ModelKind::mlfts;
    }
    if (name == "factor+mlfts" || name == "factor_mlfts") {
        return ModelKind::factor_mlfts;
    }
    throw config_error("unknown model kind: " + name);
}

Eigen::MatrixXd one_step_forecast(const FunctionalPanel& panel, const ModelSpec& spec,
                                  const ScoreForecaster& forecaster, Warnings* warnings,
                                  Execution exec) {
    if (spec.kind == ModelKind::mlfts) {
        const mlfts::Model model = mlfts::fit(panel, spec.K, spec.L, warnings, exec);
        return mlfts::forecast_one_step(model, forecaster ? forecaster
                                                          : default_score_forecaster());
    }
    int q = spec.q;
    if (q < 0) {
        q = ffm::select_q(panel, spec.q_max, warnings, exec);
    }
    return ffm::forecast_factor_mlfts(panel, q, spec.K, spec.L, forecaster, warnings, exec);
}

}  // namespace fpnsd
