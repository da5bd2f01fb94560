#include "fpnsd/panel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "fpnsd/detail/csv.hpp"

namespace fpnsd {

FunctionalPanel FunctionalPanel::first_days(int n) const {
    if (n < 1 || n > days()) {
        throw data_error("first_days: requested " + std::to_string(n) + " of " +
                         std::to_string(days()) + " curves");
    }
    FunctionalPanel out = *this;
    for (auto& m : out.values) {
        m = Eigen::MatrixXd(m.topRows(n));
    }
    return out;
}

Eigen::VectorXd FunctionalPanel::stacked_day(int t) const {
    const int p = points();
    Eigen::VectorXd out(static_cast<Eigen::Index>(sizes()) * p);
    for (int s = 0; s < sizes(); ++s) {
        out.segment(static_cast<Eigen::Index>(s) * p, p) = values[s].row(t).transpose();
    }
    return out;
}

Eigen::MatrixXd FunctionalPanel::day_matrix(int t) const {
    Eigen::MatrixXd out(sizes(), points());
    for (int s = 0; s < sizes(); ++s) {
        out.row(s) = values[s].row(t);
    }
    return out;
}

namespace panel {

namespace {

constexpr int kHoursPerDay = 24;
constexpr int kHoursPerWeek = 168;

// Howard Hinnant's civil-date algorithm.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y = static_cast<int>(yr + (m <= 2));
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        --q;
    }
    return q;
}

std::int64_t floor_mod(std::int64_t a, std::int64_t b) { return a - floor_div(a, b) * b; }

void validate_series(const RawSeries& series) {
    if (series.sizes() < 1) {
        throw data_error("series has no size columns");
    }
    for (int s = 1; s < series.sizes(); ++s) {
        if (!(series.size_labels[s] > series.size_labels[s - 1])) {
            throw data_error("size labels must be strictly increasing");
        }
    }
    if (series.rows() < 2) {
        throw data_error("series needs at least two rows");
    }
    if (series.counts.rows() != series.rows() || series.counts.cols() != series.sizes()) {
        throw data_error("count matrix shape does not match timestamps and sizes");
    }
    for (int i = 1; i < series.rows(); ++i) {
        if (series.hours[i] != series.hours[i - 1] + 1) {
            throw data_error("timestamps must be hourly with no gaps near row " +
                             std::to_string(i));
        }
    }
    for (int i = 0; i < series.rows(); ++i) {
        for (int s = 0; s < series.sizes(); ++s) {
            const double v = series.counts(i, s);
            if (!std::isnan(v) && (v < 0.0 || !std::isfinite(v))) {
                throw data_error("counts must be non-negative and finite (row " +
                                 std::to_string(i) + ")");
            }
        }
    }
}

}  // namespace

double log_transform(double count) {
    if (!(count >= 0.0) || !std::isfinite(count)) {
        throw data_error("counts must be non-negative and finite");
    }
    return std::log10(count + 1.0);
}

double inverse_transform(double value) {
    const double count = std::pow(10.0, value) - 1.0;
    return count < 0.0 ? 0.0 : count;
}

Eigen::MatrixXd log_transform(const Eigen::MatrixXd& counts) {
    return counts.unaryExpr([](double c) { return log_transform(c); });
}

Eigen::MatrixXd inverse_transform(const Eigen::MatrixXd& values, long* clamped) {
    Eigen::MatrixXd out(values.rows(), values.cols());
    long n_clamped = 0;
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
        for (Eigen::Index i = 0; i < values.rows(); ++i) {
            const double count = std::pow(10.0, values(i, j)) - 1.0;
            if (count < 0.0) {
                ++n_clamped;
                out(i, j) = 0.0;
            } else {
                out(i, j) = count;
            }
        }
    }
    if (clamped != nullptr) {
        *clamped += n_clamped;
    }
    return out;
}

RawSeries interpolate_missing(const RawSeries& series, Warnings* warnings) {
    validate_series(series);
    RawSeries out = series;
    long filled = 0;
    for (int s = 0; s < series.sizes(); ++s) {
        std::vector<int> observed;
        for (int i = 0; i < series.rows(); ++i) {
            if (!std::isnan(series.counts(i, s))) {
                observed.push_back(i);
            }
        }
        if (observed.size() < 2) {
            std::ostringstream msg;
            msg << "size " << series.size_labels[s] << " has " << observed.size()
                << " observed values; interpolation needs at least two";
            throw data_error(msg.str());
        }
        for (int i = 0; i < observed.front(); ++i) {
            out.counts(i, s) = series.counts(observed.front(), s);
            ++filled;
        }
        for (int i = observed.back() + 1; i < series.rows(); ++i) {
            out.counts(i, s) = series.counts(observed.back(), s);
            ++filled;
        }
        for (std::size_t k = 0; k + 1 < observed.size(); ++k) {
            const int lo = observed[k];
            const int hi = observed[k + 1];
            const double y0 = series.counts(lo, s);
            const double y1 = series.counts(hi, s);
            for (int i = lo + 1; i < hi; ++i) {
                const double frac = static_cast<double>(i - lo) / static_cast<double>(hi - lo);
                out.counts(i, s) = y0 + frac * (y1 - y0);
                ++filled;
            }
        }
    }
    if (filled > 0) {
        warn(warnings, "interpolated " + std::to_string(filled) + " missing counts");
    }
    return out;
}

Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& grid) {
    const Eigen::Index p = grid.size();
    if (p < 2) {
        throw data_error("quadrature grid needs at least two points");
    }
    for (Eigen::Index j = 1; j < p; ++j) {
        if (!(grid[j] > grid[j - 1])) {
            throw data_error("quadrature grid must be strictly increasing");
        }
    }
    Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
    for (Eigen::Index j = 0; j + 1 < p; ++j) {
        const double half = 0.5 * (grid[j + 1] - grid[j]);
        w[j] += half;
        w[j + 1] += half;
    }
    return w;
}

Weekday weekday_of_hour(std::int64_t epoch_hour) {
    const std::int64_t day = floor_div(epoch_hour, kHoursPerDay);
    return static_cast<Weekday>(floor_mod(day + 3, 7));
}

FunctionalPanel segment(const RawSeries& series, const Segmentation& seg, Warnings* warnings) {
    validate_series(series);
    if (series.counts.hasNaN()) {
        throw data_error("series has missing values; interpolate before segmenting");
    }

    const int seg_len = seg.mode == SegmentMode::week ? kHoursPerWeek : kHoursPerDay;

    // First row index that starts a segment boundary.
    int first = -1;
    for (int i = 0; i < series.rows(); ++i) {
        const std::int64_t h = series.hours[i];
        const bool midnight = floor_mod(h, kHoursPerDay) == 0;
        if (!midnight) {
            continue;
        }
        if (seg.mode == SegmentMode::week && weekday_of_hour(h) != Weekday::mon) {
            continue;
        }
        first = i;
        break;
    }
    if (first < 0) {
        throw data_error("series contains no complete segment boundary");
    }

    const int usable = series.rows() - first;
    const int n_segments = usable / seg_len;
    const int dropped = first + (usable - n_segments * seg_len);
    if (dropped > 0) {
        warn(warnings, "dropped " + std::to_string(dropped) +
                           " boundary hours outside complete segments");
    }

    std::vector<int> starts;
    if (seg.mode == SegmentMode::weekday) {
        for (int k = 0; k < n_segments; ++k) {
            const int row = first + k * seg_len;
            if (weekday_of_hour(series.hours[row]) == seg.weekday) {
                starts.push_back(row);
            }
        }
    } else {
        for (int k = 0; k < n_segments; ++k) {
            starts.push_back(first + k * seg_len);
        }
    }

    const int n = static_cast<int>(starts.size());
    if (n < 3) {
        throw data_error("segmentation yields " + std::to_string(n) +
                         " curves; at least three are required");
    }

    FunctionalPanel out;
    out.segmentation = seg;
    out.size_labels = series.size_labels;
    out.grid = Eigen::VectorXd::LinSpaced(seg_len, 0.0, static_cast<double>(seg_len - 1));
    out.quad_weights = trapezoid_weights(out.grid);
    out.values.reserve(series.sizes());
    for (int s = 0; s < series.sizes(); ++s) {
        Eigen::MatrixXd m(n, seg_len);
        for (int t = 0; t < n; ++t) {
            for (int j = 0; j < seg_len; ++j) {
                m(t, j) = log_transform(series.counts(starts[t] + j, s));
            }
        }
        out.values.push_back(std::move(m));
    }
    return out;
}

FunctionalPanel make_panel(std::vector<Eigen::MatrixXd> values, Eigen::VectorXd grid,
                           Segmentation seg, std::vector<double> size_labels) {
    if (values.empty() || values.size() != size_labels.size()) {
        throw data_error("panel needs one value matrix per size label");
    }
    const Eigen::Index n = values.front().rows();
    const Eigen::Index p = values.front().cols();
    if (n < 1 || p != grid.size()) {
        throw data_error("panel matrices must be n-by-p with p matching the grid");
    }
    for (const auto& m : values) {
        if (m.rows() != n || m.cols() != p) {
            throw data_error("all size matrices must share the same shape");
        }
    }
    for (std::size_t s = 1; s < size_labels.size(); ++s) {
        if (!(size_labels[s] > size_labels[s - 1])) {
            throw data_error("size labels must be strictly increasing");
        }
    }
    FunctionalPanel out;
    out.values = std::move(values);
    out.quad_weights = trapezoid_weights(grid);
    out.grid = std::move(grid);
    out.segmentation = seg;
    out.size_labels = std::move(size_labels);
    return out;
}

std::int64_t parse_timestamp(const std::string& text) {
    // Accepts YYYY-MM-DD{T or space}HH:MM with optional :SS (which must be 00).
    auto fail = [&]() -> std::int64_t {
        throw data_error("invalid timestamp: '" + text + "'");
    };
    if (text.size() < 16) {
        return fail();
    }
    auto digits = [&](std::size_t pos, std::size_t len) -> int {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (i >= text.size() || text[i] < '0' || text[i] > '9') {
                fail();
            }
            v = v * 10 + (text[i] - '0');
        }
        return v;
    };
    const int year = digits(0, 4);
    if (text[4] != '-') fail();
    const int month = digits(5, 2);
    if (text[7] != '-') fail();
    const int day = digits(8, 2);
    if (text[10] != 'T' && text[10] != ' ') fail();
    const int hour = digits(11, 2);
    if (text[13] != ':') fail();
    const int minute = digits(14, 2);
    if (text.size() > 16) {
        if (text.size() != 19 || text[16] != ':' || digits(17, 2) != 0) {
            fail();
        }
    }
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute != 0) {
        fail();
    }
    return days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day)) *
               kHoursPerDay +
           hour;
}

std::string format_timestamp(std::int64_t epoch_hour) {
    const std::int64_t day = floor_div(epoch_hour, kHoursPerDay);
    const int hour = static_cast<int>(floor_mod(epoch_hour, kHoursPerDay));
    int y = 0;
    unsigned m = 0, d = 0;
    civil_from_days(day, y, m, d);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:00:00", y, m, d, hour);
    return buf;
}

RawSeries read_raw_csv(const std::string& path) {
    const auto lines = csv::read_lines(path);
    if (lines.empty()) {
        throw data_error("empty input file: " + path);
    }
    const auto header = csv::split_line(lines.front());
    if (header.size() < 2 || header.front() != "timestamp") {
        throw data_error("expected header 'timestamp,<size_1>,...' in " + path);
    }
    RawSeries series;
    for (std::size_t c = 1; c < header.size(); ++c) {
        series.size_labels.push_back(csv::parse_double(header[c], path + " header"));
    }
    const int n_sizes = series.sizes();
    std::vector<std::int64_t> hours;
    std::vector<double> flat;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const auto fields = csv::split_line(lines[i]);
        if (static_cast<int>(fields.size()) != n_sizes + 1) {
            throw data_error("row " + std::to_string(i + 1) + " of " + path + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(n_sizes + 1));
        }
        hours.push_back(parse_timestamp(fields[0]));
        for (int s = 0; s < n_sizes; ++s) {
            const auto& f = fields[s + 1];
            flat.push_back(f.empty() ? std::numeric_limits<double>::quiet_NaN()
                                     : csv::parse_double(f, path + " row " + std::to_string(i + 1)));
        }
    }
    series.hours = std::move(hours);
    series.counts = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                             Eigen::RowMajor>>(flat.data(),
                                                               static_cast<Eigen::Index>(
                                                                   series.hours.size()),
                                                               n_sizes);
    validate_series(series);
    return series;
}

void write_panel_csv(const FunctionalPanel& panel, const std::string& path) {
    std::string out;
    out.reserve(static_cast<std::size_t>(panel.sizes()) * panel.days() * panel.points() * 16);
    out += "# fpnsd panel v1 mode=";
    switch (panel.segmentation.mode) {
        case SegmentMode::weekday:
            out += "weekday:" + to_string(panel.segmentation.weekday);
            break;
        case SegmentMode::day:
            out += "day";
            break;
        case SegmentMode::week:
            out += "week";
            break;
    }
    out += " points=" + std::to_string(panel.points()) + "\n";
    out += "size,day,hour,value\n";
    for (int s = 0; s < panel.sizes(); ++s) {
        const std::string label = csv::format_double(panel.size_labels[s]);
        for (int t = 0; t < panel.days(); ++t) {
            for (int j = 0; j < panel.points(); ++j) {
                out += label;
                out += ',';
                out += std::to_string(t);
                out += ',';
                out += csv::format_double(panel.grid[j]);
                out += ',';
                out += csv::format_double(panel.values[s](t, j));
                out += '\n';
            }
        }
    }
    csv::write_file(path, out);
}

FunctionalPanel read_panel_csv(const std::string& path) {
    const auto lines = csv::read_lines(path);
    if (lines.size() < 3) {
        throw data_error("panel file too short: " + path);
    }
    std::size_t row = 0;
    Segmentation seg;
    if (!lines[row].empty() && lines[row].front() == '#') {
        const std::string& meta = lines[row];
        const auto mode_pos = meta.find("mode=");
        if (mode_pos != std::string::npos) {
            std::string mode = meta.substr(mode_pos + 5);
            const auto space = mode.find(' ');
            if (space != std::string::npos) {
                mode = mode.substr(0, space);
            }
            if (mode == "day") {
                seg.mode = SegmentMode::day;
            } else if (mode == "week") {
                seg.mode = SegmentMode::week;
            } else if (mode.rfind("weekday:", 0) == 0) {
                seg.mode = SegmentMode::weekday;
                seg.weekday = parse_weekday(mode.substr(8));
            } else {
                throw data_error("unknown panel mode in " + path);
            }
        }
        ++row;
    }
    if (lines[row] != "size,day,hour,value") {
        throw data_error("expected header 'size,day,hour,value' in " + path);
    }
    ++row;

    struct Cell {
        double size;
        long day;
        double hour;
        double value;
    };
    std::vector<Cell> cells;
    for (; row < lines.size(); ++row) {
        if (lines[row].empty()) {
            continue;
        }
        const auto fields = csv::split_line(lines[row]);
        if (fields.size() != 4) {
            throw data_error("panel row " + std::to_string(row + 1) + " must have 4 fields");
        }
        const std::string ctx = path + " row " + std::to_string(row + 1);
        cells.push_back({csv::parse_double(fields[0], ctx), csv::parse_long(fields[1], ctx),
                         csv::parse_double(fields[2], ctx), csv::parse_double(fields[3], ctx)});
    }
    if (cells.empty()) {
        throw data_error("panel file has no data rows: " + path);
    }

    std::vector<double> sizes;
    std::vector<double> hours;
    long max_day = 0;
    for (const auto& c : cells) {
        if (std::find(sizes.begin(), sizes.end(), c.size) == sizes.end()) {
            sizes.push_back(c.size);
        }
        if (std::find(hours.begin(), hours.end(), c.hour) == hours.end()) {
            hours.push_back(c.hour);
        }
        max_day = std::max(max_day, c.day);
    }
    std::sort(sizes.begin(), sizes.end());
    std::sort(hours.begin(), hours.end());
    const int S = static_cast<int>(sizes.size());
    const int p = static_cast<int>(hours.size());
    const int n = static_cast<int>(max_day) + 1;
    if (cells.size() != static_cast<std::size_t>(S) * n * p) {
        throw data_error("panel file is not a complete size/day/hour lattice: " + path);
    }

    Eigen::VectorXd grid(p);
    for (int j = 0; j < p; ++j) {
        grid[j] = hours[j];
    }
    std::vector<Eigen::MatrixXd> values(
        S, Eigen::MatrixXd::Constant(n, p, std::numeric_limits<double>::quiet_NaN()));
    auto index_of = [](const std::vector<double>& xs, double x) {
        const auto it = std::lower_bound(xs.begin(), xs.end(), x);
        return static_cast<int>(it - xs.begin());
    };
    for (const auto& c : cells) {
        const int s = index_of(sizes, c.size);
        const int j = index_of(hours, c.hour);
        if (c.day < 0 || c.day >= n) {
            throw data_error("panel day index out of range in " + path);
        }
        values[s](static_cast<int>(c.day), j) = c.value;
    }
    for (const auto& m : values) {
        if (m.hasNaN()) {
            throw data_error("panel file has duplicate or missing lattice cells: " + path);
        }
    }
    return make_panel(std::move(values), std::move(grid), seg, std::move(sizes));
}

}  // namespace panel
}  // namespace fpnsd
