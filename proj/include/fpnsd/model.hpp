#pragma once

#include <Eigen/Dense>
#include <string>

#include "fpnsd/common.hpp"
#include "fpnsd/panel.hpp"
#include "fpnsd/scorets.hpp"

namespace fpnsd {

enum class ModelKind { mlfts, factor_mlfts };

// Forecast model selector shared by the backtesting and updating layers.
// q < 0 requests eigenvalue-ratio selection up to q_max at fit time.
struct ModelSpec {
    ModelKind kind = ModelKind::mlfts;
    int K = 6;
    int L = 6;
    int q = -1;
    int q_max = 6;
};

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

// One-step-ahead log-scale forecast (sizes by points) of the chosen model.
Eigen::MatrixXd one_step_forecast(const FunctionalPanel& panel, const ModelSpec& spec,
                                  const ScoreForecaster& forecaster = {},
                                  Warnings* warnings = nullptr,
                                  Execution exec = Execution::parallel);

}  // namespace fpnsd
