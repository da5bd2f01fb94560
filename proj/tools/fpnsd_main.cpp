#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpnsd/detail/csv.hpp"
#include "fpnsd/eval.hpp"
#include "fpnsd/ffm.hpp"
#include "fpnsd/fpca.hpp"
#include "fpnsd/intervals.hpp"
#include "fpnsd/mlfts.hpp"
#include "fpnsd/model.hpp"
#include "fpnsd/panel.hpp"
#include "fpnsd/parallel.hpp"
#include "fpnsd/pipeline.hpp"
#include "fpnsd/scorets.hpp"
#include "fpnsd/update.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fpnsd;

const char* kUsage = R"(fpnsd: forecasting for panels of particle-number-size-distribution curves

usage: fpnsd <command> [options]

commands:
  ingest    --input raw.csv --mode weekday:mon|day|week --out panel.csv
  fit       --panel panel.csv [--model mlfts|factor+mlfts] [--K 6] [--L 6]
            [--q -1] [--q-max 6] --out summary.json
  forecast  --panel panel.csv [--model ...] [orders] --out forecast.csv
  update    --panel panel.csv --method bm|ols|ridge|pls --out updated.csv
            (--observed partial.csv | --m0 H: first H hours of the last day)
            [--lambda auto|X | --schedule sched.csv] [--N 6] [orders for bm]
  intervals --panel panel.csv [--model ...] [orders] [--alpha 0.2]
            [--method sd|conformal] --out intervals.csv
            [--calibration-out cal.csv]
  backtest  --input raw.csv --mode weekday|weekday:mon|day|week
            [--methods mlfts,factor+mlfts] [--alphas 0.2,0.05]
            [--interval-methods sd,conformal] [orders] --out dir
  report    --tracks dir --out dir
  run       --config run.json

global options: --threads N (0 = automatic; FPNSD_THREADS is honoured too)
exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure
)";

class Args {
public:
    Args(int argc, char** argv, const std::set<std::string>& value_options) {
        for (int i = 0; i < argc; ++i) {
            const std::string token = argv[i];
            if (value_options.count(token) == 0) {
                throw config_error("unknown option: " + token);
            }
            if (i + 1 >= argc) {
                throw config_error("option " + token + " needs a value");
            }
            if (values_.count(token) > 0) {
                throw config_error("option " + token + " given twice");
            }
            values_[token] = argv[++i];
        }
    }

    bool has(const std::string& name) const { return values_.count(name) > 0; }

    std::string require(const std::string& name) const {
        const auto it = values_.find(name);
        if (it == values_.end()) {
            throw config_error("missing required option " + name);
        }
        return it->second;
    }

    std::string get(const std::string& name, const std::string& fallback) const {
        const auto it = values_.find(name);
        return it == values_.end() ? fallback : it->second;
    }

    int get_int(const std::string& name, int fallback) const {
        const auto it = values_.find(name);
        if (it == values_.end()) {
            return fallback;
        }
        try {
            std::size_t used = 0;
            const int v = std::stoi(it->second, &used);
            if (used != it->second.size()) {
                throw std::invalid_argument(name);
            }
            return v;
        } catch (const std::exception&) {
            throw config_error("option " + name + " needs an integer, got '" + it->second +
                               "'");
        }
    }

    double get_double(const std::string& name, double fallback) const {
        const auto it = values_.find(name);
        if (it == values_.end()) {
            return fallback;
        }
        return parse_number(name, it->second);
    }

    static double parse_number(const std::string& name, const std::string& text) {
        try {
            std::size_t used = 0;
            const double v = std::stod(text, &used);
            if (used != text.size()) {
                throw std::invalid_argument(name);
            }
            return v;
        } catch (const std::exception&) {
            throw config_error("option " + name + " needs a number, got '" + text + "'");
        }
    }

private:
    std::map<std::string, std::string> values_;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto pos = text.find(',', start);
        if (pos == std::string::npos) {
            if (!text.substr(start).empty()) {
                out.push_back(text.substr(start));
            }
            break;
        }
        if (pos > start) {
            out.push_back(text.substr(start, pos - start));
        }
        start = pos + 1;
    }
    return out;
}

// "weekday:mon", "day", "week"; bare "weekday" means all seven days and is
// only allowed where multi_day is set.
struct ModeChoice {
    SegmentMode mode = SegmentMode::weekday;
    std::vector<Weekday> weekdays;
};

ModeChoice parse_mode(const std::string& text, bool multi_day) {
    ModeChoice choice;
    if (text == "day") {
        choice.mode = SegmentMode::day;
        return choice;
    }
    if (text == "week") {
        choice.mode = SegmentMode::week;
        return choice;
    }
    if (text == "weekday") {
        if (!multi_day) {
            throw config_error("weekday mode needs a day here, e.g. weekday:mon");
        }
        choice.weekdays = {Weekday::mon, Weekday::tue, Weekday::wed, Weekday::thu,
                           Weekday::fri, Weekday::sat, Weekday::sun};
        return choice;
    }
    if (text.rfind("weekday:", 0) == 0) {
        choice.weekdays = {parse_weekday(text.substr(8))};
        return choice;
    }
    throw config_error("mode must be weekday:<day>, day or week" +
                       std::string(multi_day ? " (bare weekday = all seven days)" : ""));
}

ModelSpec model_spec_from(const Args& args) {
    ModelSpec spec;
    spec.kind = parse_model_kind(args.get("--model", "mlfts"));
    spec.K = args.get_int("--K", 6);
    spec.L = args.get_int("--L", 6);
    spec.q = args.get("--q", "") == "auto" ? -1 : args.get_int("--q", -1);
    spec.q_max = args.get_int("--q-max", 6);
    if (spec.K < 1 || spec.L < 1 || spec.q_max < 1) {
        throw config_error("model orders must be positive");
    }
    return spec;
}

void write_curve_csv(const std::string& path, const char* value_name,
                     const FunctionalPanel& shape, const Eigen::MatrixXd& values,
                     int hour_offset = 0) {
    std::string out = std::string("size,hour,") + value_name + "\n";
    for (int s = 0; s < static_cast<int>(values.rows()); ++s) {
        for (int j = 0; j < static_cast<int>(values.cols()); ++j) {
            out += csv::format_double(shape.size_labels[s]);
            out += ',';
            out += csv::format_double(shape.grid[hour_offset + j]);
            out += ',';
            out += csv::format_double(values(s, j));
            out += '\n';
        }
    }
    csv::write_file(path, out);
}

void print_warnings(const Warnings& warnings) {
    for (const auto& w : warnings.messages) {
        std::cerr << "warning: " << w << "\n";
    }
}

int cmd_ingest(const Args& args) {
    const ModeChoice choice = parse_mode(args.get("--mode", "weekday:mon"), false);
    Segmentation seg;
    seg.mode = choice.mode;
    if (choice.mode == SegmentMode::weekday) {
        seg.weekday = choice.weekdays.front();
    }
    Warnings warnings;
    RawSeries raw = panel::read_raw_csv(args.require("--input"));
    raw = panel::interpolate_missing(raw, &warnings);
    const FunctionalPanel pan = panel::segment(raw, seg, &warnings);
    panel::write_panel_csv(pan, args.require("--out"));
    print_warnings(warnings);
    std::cout << "panel: " << pan.sizes() << " sizes, " << pan.days() << " curves, "
              << pan.points() << " points\n";
    return 0;
}

int cmd_fit(const Args& args) {
    const FunctionalPanel pan = panel::read_panel_csv(args.require("--panel"));
    const ModelSpec spec = model_spec_from(args);
    Warnings warnings;
    json summary;
    summary["model"] = to_string(spec.kind);
    summary["days"] = pan.days();
    summary["points"] = pan.points();
    summary["sizes"] = pan.sizes();
    if (spec.kind == ModelKind::mlfts) {
        const mlfts::Model model = mlfts::fit(pan, spec.K, spec.L, &warnings);
        summary["K"] = model.common.order();
        summary["L"] = spec.L;
        summary["common_eigenvalues"] = std::vector<double>(
            model.common.eigenvalues.data(),
            model.common.eigenvalues.data() + model.common.eigenvalues.size());
        json props = json::array();
        for (int s = 0; s < pan.sizes(); ++s) {
            bool degenerate = false;
            props.push_back(mlfts::variance_proportion(model, s, &degenerate));
        }
        summary["common_variance_proportion"] = props;
    } else {
        int q = spec.q;
        if (q < 0) {
            q = ffm::select_q(pan, spec.q_max, &warnings);
            summary["q_selected"] = true;
        }
        const ffm::FactorModel model = ffm::fit_factors(pan, q, &warnings);
        summary["q"] = model.q;
        const int shown = std::min<int>(10, static_cast<int>(model.eigenvalues.size()));
        summary["top_eigenvalues"] = std::vector<double>(
            model.eigenvalues.data(), model.eigenvalues.data() + shown);
    }
    summary["warnings"] = warnings.messages;
    csv::write_file(args.require("--out"), summary.dump(2) + "\n");
    return 0;
}

int cmd_forecast(const Args& args) {
    const FunctionalPanel pan = panel::read_panel_csv(args.require("--panel"));
    const ModelSpec spec = model_spec_from(args);
    Warnings warnings;
    const Eigen::MatrixXd fc_log = one_step_forecast(pan, spec, {}, &warnings);
    long clamped = 0;
    const Eigen::MatrixXd fc = panel::inverse_transform(fc_log, &clamped);
    write_curve_csv(args.require("--out"), "forecast", pan, fc);
    print_warnings(warnings);
    if (clamped > 0) {
        std::cerr << "warning: clamped " << clamped << " negative forecast counts to zero\n";
    }
    return 0;
}

// Observed partial day: CSV `size,hour,count` covering hours 0..m0-1 for
// every panel size, counts on the original scale.
Eigen::MatrixXd read_partial_csv(const std::string& path, const FunctionalPanel& pan,
                                 int* m0_out) {
    const auto lines = csv::read_lines(path);
    if (lines.empty() || lines.front() != "size,hour,count") {
        throw data_error("expected header 'size,hour,count' in " + path);
    }
    std::map<std::pair<int, int>, double> cells;
    int max_hour = -1;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const auto fields = csv::split_line(lines[i]);
        if (fields.size() != 3) {
            throw data_error("partial row " + std::to_string(i + 1) + " must have 3 fields");
        }
        const std::string ctx = path + " row " + std::to_string(i + 1);
        const double size = csv::parse_double(fields[0], ctx);
        const auto it = std::find(pan.size_labels.begin(), pan.size_labels.end(), size);
        if (it == pan.size_labels.end()) {
            throw data_error("unknown size label in " + ctx);
        }
        const int s = static_cast<int>(it - pan.size_labels.begin());
        const double hour = csv::parse_double(fields[1], ctx);
        int j = -1;
        for (int g = 0; g < pan.points(); ++g) {
            if (pan.grid[g] == hour) {
                j = g;
                break;
            }
        }
        if (j < 0) {
            throw data_error("hour not on the panel grid in " + ctx);
        }
        const double count = csv::parse_double(fields[2], ctx);
        if (count < 0.0) {
            throw data_error("counts must be non-negative in " + ctx);
        }
        if (!cells.emplace(std::make_pair(s, j), count).second) {
            throw data_error("duplicate cell in " + ctx);
        }
        max_hour = std::max(max_hour, j);
    }
    const int m0 = max_hour + 1;
    if (m0 < 1 || m0 >= pan.points()) {
        throw data_error("partial day must cover hours 0..m0-1 with m0 < p");
    }
    Eigen::MatrixXd partial(pan.sizes(), m0);
    for (int s = 0; s < pan.sizes(); ++s) {
        for (int j = 0; j < m0; ++j) {
            const auto it = cells.find({s, j});
            if (it == cells.end()) {
                throw data_error("partial day is missing size " +
                                 csv::format_double(pan.size_labels[s]) + " hour " +
                                 csv::format_double(pan.grid[j]));
            }
            partial(s, j) = panel::log_transform(it->second);
        }
    }
    *m0_out = m0;
    return partial;
}

int cmd_update(const Args& args) {
    const FunctionalPanel pan = panel::read_panel_csv(args.require("--panel"));
    const std::string method_name = args.require("--method");
    const bool block_moving = method_name == "bm";
    const auto method = block_moving ? update::PenaltyMethod::ols
                                     : update::parse_penalty_method(method_name);

    // The partial day either arrives as a CSV or is sliced off the last
    // panel day with --m0; the sliced day is held out of the fit.
    int m0 = 0;
    Eigen::MatrixXd partial;
    FunctionalPanel fit_pan;
    if (args.has("--observed")) {
        partial = read_partial_csv(args.require("--observed"), pan, &m0);
        if (args.has("--m0") && args.get_int("--m0", 0) != m0) {
            throw config_error("--m0 disagrees with the observed file's hour range");
        }
        fit_pan = pan;
    } else {
        m0 = args.get_int("--m0", 0);
        if (m0 < 1 || m0 >= pan.points()) {
            throw config_error("--m0 must lie in [1, p-1] (or give --observed)");
        }
        if (pan.days() < 2) {
            throw data_error("slicing with --m0 needs at least two panel days");
        }
        partial = pan.day_matrix(pan.days() - 1).leftCols(m0);
        fit_pan = pan.first_days(pan.days() - 1);
    }

    const int N = args.get_int("--N", 6);
    if (N < 1) {
        throw config_error("--N must be positive");
    }

    Warnings warnings;
    if (block_moving) {
        if (args.has("--lambda") || args.has("--schedule")) {
            throw config_error("bm ignores lambda; drop --lambda/--schedule");
        }
        ModelSpec spec = model_spec_from(args);
        spec.kind = ModelKind::mlfts;
        const Eigen::MatrixXd fc_log =
            update::block_moving_forecast(fit_pan, partial, spec, {}, &warnings);
        long clamped = 0;
        const Eigen::MatrixXd fc = panel::inverse_transform(fc_log, &clamped);
        write_curve_csv(args.require("--out"), "forecast", pan, fc, m0);
        print_warnings(warnings);
        return 0;
    }

    double lambda = 0.0;
    if (args.has("--lambda") && args.has("--schedule")) {
        throw config_error("give either --lambda or --schedule, not both");
    }
    if (args.has("--schedule")) {
        if (pan.segmentation.mode != SegmentMode::weekday) {
            throw config_error("--schedule needs a weekday panel");
        }
        const auto schedules = update::read_schedule_csv(args.require("--schedule"));
        bool found = false;
        for (const auto& [day, schedule] : schedules) {
            if (day == pan.segmentation.weekday && schedule.method == method) {
                lambda = schedule.at(m0);
                found = true;
                break;
            }
        }
        if (!found) {
            throw data_error("schedule has no entry for this weekday and method");
        }
    } else if (args.get("--lambda", "") == "auto") {
        if (method == update::PenaltyMethod::ols) {
            throw config_error("--lambda auto needs --method ridge or pls");
        }
        const eval::SplitPlan split = eval::SplitPlan::make(fit_pan.days());
        const update::LambdaSelection sel = update::select_lambda(
            fit_pan, split.train_end, split.validation_days(), method,
            update::default_lambda_grid(), N, &warnings);
        lambda = sel.schedule.at(m0);
    } else {
        lambda = args.get_double("--lambda", 0.0);
    }

    const fpca::StackedBasis basis = fpca::fit_stacked(fit_pan, N, &warnings);
    Eigen::VectorXd ts = Eigen::VectorXd::Zero(basis.order());
    if (method == update::PenaltyMethod::pls) {
        for (int k = 0; k < basis.order(); ++k) {
            ts[k] = scorets::fit_forecast(basis.scores.row(k).transpose()).forecast;
        }
    }

    const int p = pan.points();
    Eigen::MatrixXd fc_log(pan.sizes(), p - m0);
    for (int s = 0; s < pan.sizes(); ++s) {
        const update::UpdateProblem problem =
            update::make_problem(basis, s, partial.row(s).transpose(), ts, lambda);
        update::UpdateResult res;
        switch (method) {
            case update::PenaltyMethod::ols:
                res = update::ols_update(problem);
                break;
            case update::PenaltyMethod::ridge:
                res = update::ridge_update(problem);
                break;
            case update::PenaltyMethod::pls:
                res = update::pls_update(problem);
                break;
        }
        fc_log.row(s) = res.forecast.transpose();
    }
    long clamped = 0;
    const Eigen::MatrixXd fc = panel::inverse_transform(fc_log, &clamped);
    write_curve_csv(args.require("--out"), "forecast", pan, fc, m0);
    print_warnings(warnings);
    return 0;
}

// Shared by intervals: expanding forecasts from the training boundary, with
// validation-block residuals for calibration.
struct BacktestProducts {
    eval::SplitPlan split;
    std::vector<Eigen::MatrixXd> actual;    // counts, targets train_end..n-1
    std::vector<Eigen::MatrixXd> forecast;  // counts, same targets
    intervals::ResidualStore store;         // validation block
};

BacktestProducts backtest_products(const FunctionalPanel& pan, const ModelSpec& spec) {
    BacktestProducts out;
    out.split = eval::SplitPlan::make(pan.days());
    if (out.split.validation_days() < 2 || out.split.test_days() < 1) {
        throw data_error("panel has too few curves for the 50/25/25 split");
    }
    const eval::BacktestResult bt = eval::expanding_window(
        pan, [&](const FunctionalPanel& sub) { return one_step_forecast(sub, spec); },
        out.split.train_end);
    long clamped = 0;
    for (std::size_t i = 0; i < bt.forecasts.size(); ++i) {
        const int day = out.split.train_end + static_cast<int>(i);
        out.actual.push_back(panel::inverse_transform(pan.day_matrix(day)));
        out.forecast.push_back(panel::inverse_transform(bt.forecasts[i], &clamped));
    }
    const int V = out.split.validation_days();
    out.store.residuals.assign(pan.sizes(), Eigen::MatrixXd(V, pan.points()));
    for (int v = 0; v < V; ++v) {
        for (int s = 0; s < pan.sizes(); ++s) {
            out.store.residuals[s].row(v) = out.actual[v].row(s) - out.forecast[v].row(s);
        }
    }
    return out;
}

int cmd_intervals(const Args& args) {
    const FunctionalPanel pan = panel::read_panel_csv(args.require("--panel"));
    const ModelSpec spec = model_spec_from(args);
    std::vector<double> alphas;
    for (const auto& text : split_list(args.get("--alpha", "0.2"))) {
        alphas.push_back(Args::parse_number("--alpha", text));
    }
    if (alphas.empty()) {
        throw config_error("--alpha needs at least one level");
    }
    const auto method = intervals::parse_method(args.get("--method", "sd"));

    const BacktestProducts bp = backtest_products(pan, spec);
    Warnings warnings;
    const intervals::ThetaOptions topts;

    const Eigen::MatrixXd fc_log = one_step_forecast(pan, spec, {}, &warnings);
    long clamped = 0;
    const Eigen::MatrixXd fc = panel::inverse_transform(fc_log, &clamped);

    std::string out = "size,hour,alpha,point,lower,upper\n";
    for (double alpha : alphas) {
        const intervals::Calibration cal =
            intervals::calibrate(bp.store, alpha, topts, &warnings);
        const intervals::IntervalPair band =
            intervals::build_interval(fc, cal, method, alpha);
        for (int s = 0; s < pan.sizes(); ++s) {
            for (int j = 0; j < pan.points(); ++j) {
                out += csv::format_double(pan.size_labels[s]);
                out += ',';
                out += csv::format_double(pan.grid[j]);
                out += ',';
                out += csv::format_double(alpha);
                out += ',';
                out += csv::format_double(fc(s, j));
                out += ',';
                out += csv::format_double(band.lower(s, j));
                out += ',';
                out += csv::format_double(band.upper(s, j));
                out += '\n';
            }
        }
    }
    csv::write_file(args.require("--out"), out);

    if (args.has("--calibration-out")) {
        const auto cal80 = intervals::calibrate(bp.store, 0.2, topts, &warnings);
        const auto cal95 = intervals::calibrate(bp.store, 0.05, topts, &warnings);
        intervals::write_calibration_csv(cal80, cal95, pan.size_labels, pan.grid,
                                         args.require("--calibration-out"));
    }
    print_warnings(warnings);
    return 0;
}

int cmd_backtest(const Args& args) {
    pipeline::RunConfig cfg;
    cfg.input = args.require("--input");
    cfg.output_dir = args.require("--out");
    const ModeChoice choice = parse_mode(args.get("--mode", "weekday"), true);
    cfg.mode = choice.mode;
    if (choice.mode == SegmentMode::weekday) {
        cfg.weekdays = choice.weekdays;
    }
    if (args.has("--methods")) {
        cfg.models.clear();
        for (const auto& name : split_list(args.require("--methods"))) {
            cfg.models.push_back(parse_model_kind(name));
        }
        if (cfg.models.empty()) {
            throw config_error("--methods needs at least one model");
        }
    }
    cfg.model.K = args.get_int("--K", 6);
    cfg.model.L = args.get_int("--L", 6);
    cfg.model.q = args.get_int("--q", -1);
    cfg.model.q_max = args.get_int("--q-max", 6);
    if (args.has("--alphas")) {
        cfg.intervals.levels.clear();
        for (const auto& a : split_list(args.require("--alphas"))) {
            cfg.intervals.levels.push_back(Args::parse_number("--alphas", a));
        }
    }
    if (args.has("--interval-methods")) {
        cfg.intervals.methods.clear();
        for (const auto& name : split_list(args.require("--interval-methods"))) {
            cfg.intervals.methods.push_back(intervals::parse_method(name));
        }
    }
    cfg.update.methods.clear();  // the update subcommand and `run` own dynamic updating
    cfg.threads = args.get_int("--threads", 0);

    const pipeline::RunSummary sum = pipeline::run(cfg);
    print_warnings(sum.warnings);
    std::cout << "backtest complete: " << sum.outputs.size() << " outputs, manifest at "
              << sum.manifest_path << "\n";
    return 0;
}

int cmd_report(const Args& args) {
    const std::string tracks_dir = args.require("--tracks");
    const std::string out_dir = args.require("--out");
    fs::create_directories(out_dir);
    std::vector<pipeline::PointTrack> points;
    std::vector<pipeline::BandTrack> bands;
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(tracks_dir)) {
        if (entry.path().extension() == ".csv") {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        const std::string base = fs::path(f).filename().string();
        if (base.rfind("points_", 0) == 0) {
            points.push_back(pipeline::read_point_track_csv(f));
        } else if (base.rfind("bands_", 0) == 0) {
            bands.push_back(pipeline::read_band_track_csv(f));
        }
    }
    if (points.empty()) {
        throw data_error("no point tracks found in " + tracks_dir);
    }
    const auto stats = pipeline::write_reports(points, bands, out_dir);
    std::cout << "wrote " << stats.files.size() << " report files (" << stats.excluded_cells
              << " zero-actual cells excluded)\n";
    return 0;
}

int cmd_run(const Args& args) {
    pipeline::RunConfig cfg = pipeline::load_config(args.require("--config"));
    if (args.has("--threads")) {
        cfg.threads = args.get_int("--threads", 0);
    }
    const pipeline::RunSummary sum = pipeline::run(cfg);
    print_warnings(sum.warnings);
    std::cout << "run complete: " << sum.outputs.size() << " outputs, manifest at "
              << sum.manifest_path << "\n";
    return 0;
}

int dispatch(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << kUsage;
        return 2;
    }
    const std::string cmd = argv[1];
    if (cmd == "--help" || cmd == "-h" || cmd == "help") {
        std::cout << kUsage;
        return 0;
    }

    const std::set<std::string> value_options = {
        "--input",    "--out",    "--mode",   "--panel",    "--model",
        "--methods",  "--K",      "--L",      "--q",        "--q-max",
        "--observed", "--method", "--lambda", "--schedule", "--N",        "--m0",
        "--alpha",    "--alphas", "--tracks", "--interval-methods",
        "--config",   "--threads", "--calibration-out"};
    const Args args(argc - 2, argv + 2, value_options);

    if (args.has("--threads")) {
        const int threads = args.get_int("--threads", 0);
        if (threads < 0) {
            throw config_error("--threads must be non-negative");
        }
        parallel::set_max_threads(threads);
    }

    if (cmd == "ingest") {
        return cmd_ingest(args);
    }
    if (cmd == "fit") {
        return cmd_fit(args);
    }
    if (cmd == "forecast") {
        return cmd_forecast(args);
    }
    if (cmd == "update") {
        return cmd_update(args);
    }
    if (cmd == "intervals") {
        return cmd_intervals(args);
    }
    if (cmd == "backtest") {
        return cmd_backtest(args);
    }
    if (cmd == "report") {
        return cmd_report(args);
    }
    if (cmd == "run") {
        return cmd_run(args);
    }
    std::cerr << "unknown command: " << cmd << "\n" << kUsage;
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const numeric_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
