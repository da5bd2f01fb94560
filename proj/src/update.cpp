#include "fpnsd/update.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fpnsd/detail/csv.hpp"
#include "fpnsd/parallel.hpp"

namespace fpnsd::update {

namespace {

void validate_problem(const UpdateProblem& problem) {
    const int p = problem.points();
    const int m0 = problem.m0();
    const int N = problem.order();
    if (N < 1) {
        throw data_error("update problem has an empty basis");
    }
    if (m0 < 1 || m0 >= p) {
        throw data_error("observed block must cover 1..p-1 grid points");
    }
    if (problem.mean.size() != p) {
        throw data_error("mean curve length does not match the basis");
    }
    if (problem.ts_scores.size() != N) {
        throw data_error("ts_scores length does not match the basis order");
    }
    if (problem.lambda < 0.0 || !std::isfinite(problem.lambda)) {
        throw config_error("lambda must be finite and non-negative");
    }
}

UpdateResult finish(const UpdateProblem& problem, Eigen::VectorXd beta) {
    const int p = problem.points();
    const int m0 = problem.m0();
    UpdateResult out;
    out.forecast = problem.mean.tail(p - m0) + problem.basis.bottomRows(p - m0) * beta;
    out.coefficients = std::move(beta);
    return out;
}

// Least squares via SVD with an explicit rank check so near-singular
// designs fail loudly instead of returning garbage.
Eigen::VectorXd solve_ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& target) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(design,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double tol = std::max(design.rows(), design.cols()) *
                       std::numeric_limits<double>::epsilon() * sv[0];
    if (sv[0] <= 0.0 || sv[sv.size() - 1] <= tol) {
        throw numeric_error(
            "singular design in least-squares update; use ridge_update with lambda > 0");
    }
    return svd.solve(target);
}

}  // namespace

UpdateProblem make_problem(const fpca::StackedBasis& basis, int size,
                           const Eigen::VectorXd& observed, const Eigen::VectorXd& ts_scores,
                           double lambda) {
    UpdateProblem problem;
    problem.basis = basis.size_block(size);
    problem.mean = basis.size_mean(size);
    problem.observed = observed;
    problem.ts_scores = ts_scores;
    problem.lambda = lambda;
    validate_problem(problem);
    return problem;
}

UpdateResult ols_update(const UpdateProblem& problem) {
    validate_problem(problem);
    const int m0 = problem.m0();
    if (m0 < problem.order()) {
        throw numeric_error("observed block shorter than the basis order; use ridge_update");
    }
    const Eigen::MatrixXd design = problem.basis.topRows(m0);
    const Eigen::VectorXd target = problem.observed - problem.mean.head(m0);
    return finish(problem, solve_ols(design, target));
}

UpdateResult ridge_update(const UpdateProblem& problem) {
    validate_problem(problem);
    if (problem.lambda == 0.0) {
        return ols_update(problem);
    }
    const int m0 = problem.m0();
    const int N = problem.order();
    const Eigen::MatrixXd design = problem.basis.topRows(m0);
    const Eigen::VectorXd target = problem.observed - problem.mean.head(m0);
    const Eigen::MatrixXd normal =
        design.transpose() * design + problem.lambda * Eigen::MatrixXd::Identity(N, N);
    return finish(problem, Eigen::VectorXd(normal.ldlt().solve(design.transpose() * target)));
}

UpdateResult pls_update(const UpdateProblem& problem) {
    validate_problem(problem);
    if (problem.lambda == 0.0) {
        return ols_update(problem);
    }
    const int m0 = problem.m0();
    const int N = problem.order();
    const Eigen::MatrixXd design = problem.basis.topRows(m0);
    const Eigen::VectorXd target = problem.observed - problem.mean.head(m0);
    const Eigen::MatrixXd normal =
        design.transpose() * design + problem.lambda * Eigen::MatrixXd::Identity(N, N);
    const Eigen::VectorXd rhs =
        design.transpose() * target + problem.lambda * problem.ts_scores;
    return finish(problem, Eigen::VectorXd(normal.ldlt().solve(rhs)));
}

FunctionalPanel reblock(const FunctionalPanel& panel, const Eigen::MatrixXd& partial) {
    const int S = panel.sizes();
    const int n = panel.days();
    const int p = panel.points();
    const int m0 = static_cast<int>(partial.cols());
    if (partial.rows() != S) {
        throw data_error("partial day must have one row per size");
    }
    if (m0 < 1 || m0 >= p) {
        throw config_error("re-blocking needs an observed block covering 1..p-1 points");
    }

    // Rotated grid: original tail, then the wrapped head shifted past the
    // span by one leading step.
    Eigen::VectorXd grid(p);
    const double shift = panel.grid[p - 1] - panel.grid[0] + (panel.grid[1] - panel.grid[0]);
    for (int j = 0; j < p - m0; ++j) {
        grid[j] = panel.grid[m0 + j];
    }
    for (int j = 0; j < m0; ++j) {
        grid[p - m0 + j] = panel.grid[j] + shift;
    }

    std::vector<Eigen::MatrixXd> values(S, Eigen::MatrixXd(n, p));
    for (int s = 0; s < S; ++s) {
        for (int t = 0; t < n; ++t) {
            values[s].row(t).head(p - m0) = panel.values[s].row(t).tail(p - m0);
            if (t + 1 < n) {
                values[s].row(t).tail(m0) = panel.values[s].row(t + 1).head(m0);
            } else {
                values[s].row(t).tail(m0) = partial.row(s);
            }
        }
    }
    return panel::make_panel(std::move(values), std::move(grid), panel.segmentation,
                             panel.size_labels);
}

Eigen::MatrixXd block_moving_forecast(const FunctionalPanel& panel,
                                      const Eigen::MatrixXd& partial, const ModelSpec& spec,
                                      const ScoreForecaster& forecaster, Warnings* warnings,
                                      Execution exec) {
    const FunctionalPanel rotated = reblock(panel, partial);
    const int m0 = static_cast<int>(partial.cols());
    const Eigen::MatrixXd forecast = one_step_forecast(rotated, spec, forecaster, warnings,
                                                       exec);
    return forecast.leftCols(panel.points() - m0);
}

std::string to_string(PenaltyMethod method) {
    switch (method) {
        case PenaltyMethod::ols:
            return "ols";
        case PenaltyMethod::ridge:
            return "ridge";
        case PenaltyMethod::pls:
            return "pls";
    }
    throw config_error("invalid penalty method");
}

PenaltyMethod parse_penalty_method(const std::string& name) {
    if (name == "ols") {
        return PenaltyMethod::ols;
    }
    if (name == "ridge") {
        return PenaltyMethod::ridge;
    }
    if (name == "pls") {
        return PenaltyMethod::pls;
    }
    throw config_error("unknown penalty method: " + name);
}

double LambdaSchedule::at(int m0) const {
    if (m0 < 1 || m0 > static_cast<int>(lambdas.size())) {
        throw config_error("lambda schedule has no entry for cut point " +
                           std::to_string(m0));
    }
    return lambdas[static_cast<std::size_t>(m0) - 1];
}

std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    grid.push_back(0.0);
    const int count = 33;
    for (int i = 0; i < count; ++i) {
        const double expo = -4.0 + 8.0 * static_cast<double>(i) / (count - 1);
        grid.push_back(std::pow(10.0, expo));
    }
    return grid;
}

LambdaSelection select_lambda(const FunctionalPanel& panel, int train_days,
                              int validation_days, PenaltyMethod method,
                              const std::vector<double>& grid, int N, Warnings* warnings,
                              Execution exec) {
    const int S = panel.sizes();
    const int p = panel.points();
    if (train_days < 3 || validation_days < 1 ||
        train_days + validation_days > panel.days()) {
        throw config_error("invalid train/validation layout for lambda selection");
    }
    if (method == PenaltyMethod::ols) {
        throw config_error("lambda selection applies to ridge or pls only");
    }
    if (grid.empty()) {
        throw config_error("lambda grid is empty");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i]) || grid[i] < 0.0) {
            throw config_error("lambda grid values must be finite and non-negative");
        }
        if (i > 0 && grid[i] <= grid[i - 1]) {
            throw config_error("lambda grid must be strictly increasing");
        }
    }

    const FunctionalPanel train = panel.first_days(train_days);
    const fpca::StackedBasis basis = fpca::fit_stacked(train, N, warnings);
    const int order = basis.order();
    const int total = train_days + validation_days;

    // Score series across train and validation days on the fixed basis.
    Eigen::VectorXd tiled(static_cast<Eigen::Index>(S) * p);
    for (int s = 0; s < S; ++s) {
        tiled.segment(static_cast<Eigen::Index>(s) * p, p) = panel.quad_weights;
    }
    Eigen::MatrixXd scores(order, total);
    scores.leftCols(train_days) = basis.scores;
    for (int d = train_days; d < total; ++d) {
        const Eigen::VectorXd centred = panel.stacked_day(d) - basis.mean;
        scores.col(d) = basis.components.transpose() * (tiled.asDiagonal() * centred);
    }

    // One-step score forecasts entering the pls penalty, one per validation
    // day, from the expanding score history.
    Eigen::MatrixXd ts_forecasts = Eigen::MatrixXd::Zero(order, validation_days);
    if (method == PenaltyMethod::pls) {
        for (int j = 0; j < validation_days; ++j) {
            const int d = train_days + j;
            for (int k = 0; k < order; ++k) {
                const Eigen::VectorXd history = scores.row(k).head(d).transpose();
                ts_forecasts(k, j) = scorets::fit_forecast(history).forecast;
            }
        }
    }

    std::vector<Eigen::MatrixXd> size_basis(S);
    std::vector<Eigen::VectorXd> size_mean(S);
    for (int s = 0; s < S; ++s) {
        size_basis[s] = basis.size_block(s);
        size_mean[s] = basis.size_mean(s);
    }

    const int n_grid = static_cast<int>(grid.size());
    LambdaSelection out;
    out.grid = grid;
    out.schedule.method = method;
    out.schedule.lambdas.assign(p - 1, std::numeric_limits<double>::quiet_NaN());
    out.validation_mape =
        Eigen::MatrixXd::Constant(p - 1, n_grid, std::numeric_limits<double>::infinity());

    std::exception_ptr failure;
    const bool use_parallel = exec == Execution::parallel && p > 2;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(fpnsd::parallel::max_threads()) \
    if (use_parallel)
#endif
    for (int m0 = 1; m0 < p; ++m0) {
        try {
            std::vector<Eigen::MatrixXd> design(S);
            std::vector<Eigen::MatrixXd> normal(S);
            // rhs(k, j) per size: design^T centred observed block of
            // validation day j.
            std::vector<Eigen::MatrixXd> rhs(S);
            for (int s = 0; s < S; ++s) {
                design[s] = size_basis[s].topRows(m0);
                normal[s] = design[s].transpose() * design[s];
                rhs[s].resize(order, validation_days);
                for (int j = 0; j < validation_days; ++j) {
                    const int d = train_days + j;
                    const Eigen::VectorXd target =
                        panel.values[s].row(d).head(m0).transpose() - size_mean[s].head(m0);
                    rhs[s].col(j) = design[s].transpose() * target;
                }
            }

            for (int g = 0; g < n_grid; ++g) {
                const double lambda = grid[g];
                double abs_sum = 0.0;
                long cells = 0;
                bool feasible = true;

                std::vector<Eigen::LDLT<Eigen::MatrixXd>> solver(S);
                std::vector<Eigen::JacobiSVD<Eigen::MatrixXd>> svd(S);
                if (lambda == 0.0) {
                    if (m0 < order) {
                        feasible = false;
                    } else {
                        for (int s = 0; s < S && feasible; ++s) {
                            svd[s].compute(design[s],
                                           Eigen::ComputeThinU | Eigen::ComputeThinV);
                            const auto& sv = svd[s].singularValues();
                            const double tol = std::max(m0, order) *
                                               std::numeric_limits<double>::epsilon() * sv[0];
                            if (sv[0] <= 0.0 || sv[sv.size() - 1] <= tol) {
                                feasible = false;
                            }
                        }
                    }
                } else {
                    for (int s = 0; s < S; ++s) {
                        solver[s].compute(normal[s] + lambda * Eigen::MatrixXd::Identity(
                                                                   order, order));
                    }
                }
                if (!feasible) {
                    continue;
                }

                for (int j = 0; j < validation_days; ++j) {
                    const int d = train_days + j;
                    for (int s = 0; s < S; ++s) {
                        Eigen::VectorXd beta;
                        if (lambda == 0.0) {
                            const Eigen::VectorXd target =
                                panel.values[s].row(d).head(m0).transpose() -
                                size_mean[s].head(m0);
                            beta = svd[s].solve(target);
                        } else {
                            Eigen::VectorXd b = rhs[s].col(j);
                            if (method == PenaltyMethod::pls) {
                                b += lambda * ts_forecasts.col(j);
                            }
                            beta = solver[s].solve(b);
                        }
                        const Eigen::VectorXd fc_log =
                            size_mean[s].tail(p - m0) +
                            size_basis[s].bottomRows(p - m0) * beta;
                        for (int u = 0; u < p - m0; ++u) {
                            const double actual =
                                panel::inverse_transform(panel.values[s](d, m0 + u));
                            if (actual > 0.0) {
                                const double fc = panel::inverse_transform(fc_log[u]);
                                abs_sum += std::abs(actual - fc) / actual;
                                ++cells;
                            }
                        }
                    }
                }
                if (cells > 0) {
                    out.validation_mape(m0 - 1, g) =
                        100.0 * abs_sum / static_cast<double>(cells);
                }
            }

            int best = -1;
            for (int g = 0; g < n_grid; ++g) {
                if (std::isfinite(out.validation_mape(m0 - 1, g)) &&
                    (best < 0 ||
                     out.validation_mape(m0 - 1, g) < out.validation_mape(m0 - 1, best))) {
                    best = g;
                }
            }
            if (best < 0) {
                throw numeric_error("no feasible lambda for cut point m0=" +
                                    std::to_string(m0));
            }
            out.schedule.lambdas[m0 - 1] = grid[best];
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
    if (basis.truncated) {
        warn(warnings, "stacked basis truncated during lambda selection");
    }
    return out;
}

void write_schedule_csv(const std::vector<std::pair<Weekday, LambdaSchedule>>& schedules,
                        const std::string& path) {
    std::string out = "weekday,m0,method,lambda\n";
    for (const auto& [day, schedule] : schedules) {
        const std::string method = to_string(schedule.method);
        for (std::size_t i = 0; i < schedule.lambdas.size(); ++i) {
            out += fpnsd::to_string(day);
            out += ',';
            out += std::to_string(i + 1);
            out += ',';
            out += method;
            out += ',';
            out += csv::format_double(schedule.lambdas[i]);
            out += '\n';
        }
    }
    csv::write_file(path, out);
}

std::vector<std::pair<Weekday, LambdaSchedule>> read_schedule_csv(const std::string& path) {
    const auto lines = csv::read_lines(path);
    if (lines.empty() || lines.front() != "weekday,m0,method,lambda") {
        throw data_error("expected header 'weekday,m0,method,lambda' in " + path);
    }
    std::map<std::pair<int, int>, std::map<int, double>> grouped;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const auto fields = csv::split_line(lines[i]);
        if (fields.size() != 4) {
            throw data_error("schedule row " + std::to_string(i + 1) + " must have 4 fields");
        }
        const std::string ctx = path + " row " + std::to_string(i + 1);
        const int day = static_cast<int>(parse_weekday(fields[0]));
        const int m0 = static_cast<int>(csv::parse_long(fields[1], ctx));
        if (m0 < 1) {
            throw data_error("schedule cut points must be positive in " + ctx);
        }
        const int method = static_cast<int>(parse_penalty_method(fields[2]));
        const auto [it, inserted] =
            grouped[{day, method}].emplace(m0, csv::parse_double(fields[3], ctx));
        if (!inserted) {
            throw data_error("duplicate schedule entry in " + ctx);
        }
    }
    std::vector<std::pair<Weekday, LambdaSchedule>> out;
    for (const auto& [key, entries] : grouped) {
        LambdaSchedule schedule;
        schedule.method = static_cast<PenaltyMethod>(key.second);
        int expected = 1;
        for (const auto& [m0, lambda] : entries) {
            if (m0 != expected) {
                throw data_error("schedule for " + fpnsd::to_string(static_cast<Weekday>(
                                                       key.first)) +
                                 " is missing cut point " + std::to_string(expected));
            }
            schedule.lambdas.push_back(lambda);
            ++expected;
        }
        out.emplace_back(static_cast<Weekday>(key.first), std::move(schedule));
    }
    return out;
}

}  // namespace fpnsd::update
