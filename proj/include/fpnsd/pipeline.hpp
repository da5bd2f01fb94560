#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "fpnsd/common.hpp"
#include "fpnsd/eval.hpp"
#include "fpnsd/intervals.hpp"
#include "fpnsd/model.hpp"
#include "fpnsd/panel.hpp"
#include "fpnsd/update.hpp"

namespace fpnsd::pipeline {

struct ModelConfig {
    int K = 6;
    int L = 6;
    int q = -1;     // < 0: eigenvalue-ratio selection
    int q_max = 6;
};

struct UpdateConfig {
    std::vector<update::PenaltyMethod> methods = {update::PenaltyMethod::ridge,
                                                  update::PenaltyMethod::pls};
    int N = 6;
    std::vector<int> cut_points = {6, 12, 18};
    std::vector<double> lambda_grid = update::default_lambda_grid();
    bool block_moving = false;
};

struct IntervalConfig {
    std::vector<double> levels = {0.2, 0.05};
    std::vector<intervals::Method> methods = {intervals::Method::sd,
                                              intervals::Method::conformal};
    bool theta_per_point = false;
};

struct RunConfig {
    std::string input;
    std::string output_dir = "out";
    SegmentMode mode = SegmentMode::weekday;
    std::vector<Weekday> weekdays = {Weekday::mon, Weekday::tue, Weekday::wed, Weekday::thu,
                                     Weekday::fri, Weekday::sat, Weekday::sun};
    std::vector<ModelKind> models = {ModelKind::mlfts, ModelKind::factor_mlfts};
    ModelConfig model;
    UpdateConfig update;
    IntervalConfig intervals;
    int threads = 0;
    Execution exec = Execution::parallel;
    std::uint64_t seed = 0;  // recorded for Monte Carlo tooling; the run itself is deterministic
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& origin = "config");

// FNV-1a hash of the canonical serialised configuration.
std::string config_hash(const RunConfig& config);
std::string canonical_config(const RunConfig& config);

// Count-scale test-block point forecasts of one model on one panel group.
struct PointTrack {
    std::string group;
    std::string model;
    std::vector<int> days;
    std::vector<double> sizes;
    std::vector<double> hours;
    std::vector<Eigen::MatrixXd> actual;
    std::vector<Eigen::MatrixXd> forecast;
};

struct BandTrack {
    std::string group;
    std::string model;
    intervals::Method method = intervals::Method::sd;
    double alpha = 0.2;
    std::vector<int> days;
    std::vector<double> sizes;
    std::vector<double> hours;
    std::vector<Eigen::MatrixXd> lower;
    std::vector<Eigen::MatrixXd> upper;
};

void write_point_track_csv(const PointTrack& track, const std::string& path);
PointTrack read_point_track_csv(const std::string& path);
void write_band_track_csv(const BandTrack& track, const std::string& path);
BandTrack read_band_track_csv(const std::string& path);
std::string track_filename(const PointTrack& track);
std::string track_filename(const BandTrack& track);

struct ReportStats {
    long excluded_cells = 0;
    std::vector<std::string> files;
};

// Writes mape_by_hour.csv, mape_by_size.csv, cpd.csv, interval_score.csv
// and win_counts.csv into out_dir. Band tracks are matched to point tracks
// by group and model; win counts compare the models covering the full grid.
ReportStats write_reports(const std::vector<PointTrack>& points,
                          const std::vector<BandTrack>& bands, const std::string& out_dir);

struct RunSummary {
    std::string manifest_path;
    std::vector<std::string> outputs;
    Warnings warnings;
    long clamped_forecasts = 0;
    long excluded_cells = 0;
};

// End-to-end pipeline: ingest, per-group backtests of the configured models,
// interval
// calibration on the validation block, lambda selection and dynamic updates
// at the configured cut points, then reports plus a manifest.
RunSummary run(const RunConfig& config);

}  // namespace fpnsd::pipeline
