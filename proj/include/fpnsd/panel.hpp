#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "fpnsd/common.hpp"

namespace fpnsd {

// Hourly multivariate count series. Timestamps are hours since the Unix
// epoch, strictly increasing with unit gaps. NaN marks a missing count.
struct RawSeries {
    std::vector<std::int64_t> hours;
    Eigen::MatrixXd counts;            // rows align with hours, one column per size
    std::vector<double> size_labels;   // particle diameters, strictly increasing

    int rows() const { return static_cast<int>(hours.size()); }
    int sizes() const { return static_cast<int>(size_labels.size()); }
};

enum class SegmentMode { weekday, day, week };

struct Segmentation {
    SegmentMode mode = SegmentMode::weekday;
    Weekday weekday = Weekday::mon;  // used when mode == weekday
};

// Panel of discretised curves on the log10(count + 1) scale: one n-by-p
// matrix per particle size, rows in chronological order, shared grid.
struct FunctionalPanel {
    std::vector<Eigen::MatrixXd> values;
    Eigen::VectorXd grid;
    Eigen::VectorXd quad_weights;
    Segmentation segmentation;
    std::vector<double> size_labels;

    int sizes() const { return static_cast<int>(values.size()); }
    int days() const { return values.empty() ? 0 : static_cast<int>(values.front().rows()); }
    int points() const { return static_cast<int>(grid.size()); }

    // Prefix panel holding the first n curves of every size.
    FunctionalPanel first_days(int n) const;

    // Concatenation of all size curves for one day, sizes in label order.
    Eigen::VectorXd stacked_day(int t) const;

    // Curves for one day as a sizes-by-points matrix.
    Eigen::MatrixXd day_matrix(int t) const;
};

namespace panel {

double log_transform(double count);
double inverse_transform(double value);

Eigen::MatrixXd log_transform(const Eigen::MatrixXd& counts);

// Back-transforms to the count scale; negative results are clamped to zero
// and counted through `clamped` when provided.
Eigen::MatrixXd inverse_transform(const Eigen::MatrixXd& values, long* clamped = nullptr);

// Fills missing counts per size: linear interpolation between the nearest
// observed hours, constant extension at the edges. Needs two observed
// values per size.
RawSeries interpolate_missing(const RawSeries& series, Warnings* warnings = nullptr);

// Trapezoidal quadrature weights for a strictly increasing grid.
Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& grid);

// Cuts a gap-free series into daily or weekly curves and log-transforms it.
// Partial segments at the boundaries are dropped. Requires at least three
// complete segments and no missing values.
FunctionalPanel segment(const RawSeries& series, const Segmentation& seg,
                        Warnings* warnings = nullptr);

// Validating constructor used for residual panels and tests; values may be
// negative here, shapes and grid monotonicity are still enforced.
FunctionalPanel make_panel(std::vector<Eigen::MatrixXd> values, Eigen::VectorXd grid,
                           Segmentation seg, std::vector<double> size_labels);

// CSV with header `timestamp,<size_1>,...,<size_S>`; ISO-8601 timestamps,
// empty fields mark missing counts.
RawSeries read_raw_csv(const std::string& path);

void write_panel_csv(const FunctionalPanel& panel, const std::string& path);
FunctionalPanel read_panel_csv(const std::string& path);

// Monday-based weekday of an epoch-hour timestamp.
Weekday weekday_of_hour(std::int64_t epoch_hour);

std::int64_t parse_timestamp(const std::string& text);
std::string format_timestamp(std::int64_t epoch_hour);

}  // namespace panel
}  // namespace fpnsd
