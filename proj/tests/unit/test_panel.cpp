#include <catch2/catch.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "fpnsd/panel.hpp"
#include "support/synthetic.hpp"

using namespace fpnsd;

namespace {

RawSeries hourly_series(const std::string& start, int hours,
                        const std::function<double(int, int)>& value, int sizes = 2) {
    RawSeries s;
    const std::int64_t h0 = panel::parse_timestamp(start);
    s.counts.resize(hours, sizes);
    for (int i = 0; i < hours; ++i) {
        s.hours.push_back(h0 + i);
        for (int c = 0; c < sizes; ++c) {
            s.counts(i, c) = value(i, c);
        }
    }
    for (int c = 0; c < sizes; ++c) {
        s.size_labels.push_back(10.0 * (c + 1));
    }
    return s;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("log transform fixed points", "[panel]") {
    CHECK(panel::log_transform(0.0) == 0.0);
    CHECK(panel::log_transform(9.0) == Approx(1.0));
    CHECK(panel::log_transform(999.0) == Approx(3.0));
    CHECK_THROWS_AS(panel::log_transform(-1.0), data_error);
    CHECK_THROWS_AS(panel::log_transform(std::nan("")), data_error);
    CHECK_THROWS_AS(panel::log_transform(std::numeric_limits<double>::infinity()),
                    data_error);
    Eigen::MatrixXd bad(1, 2);
    bad << 3.0, -0.5;
    CHECK_THROWS_AS(panel::log_transform(bad), data_error);
}

TEST_CASE("inverse transform fixed points and clamping", "[panel]") {
    CHECK(panel::inverse_transform(1.0) == Approx(9.0));
    CHECK(panel::inverse_transform(0.0) == 0.0);
    CHECK(panel::inverse_transform(3.0) == Approx(999.0));
    CHECK(panel::inverse_transform(-0.7) == 0.0);

    Eigen::MatrixXd x(2, 2);
    x << 1.0, -0.3, 0.0, 2.0;
    long clamped = 0;
    const Eigen::MatrixXd counts = panel::inverse_transform(x, &clamped);
    CHECK(clamped == 1);
    CHECK(counts(0, 1) == 0.0);
    CHECK(counts(1, 1) == Approx(99.0));
}

TEST_CASE("transform round trip on random counts", "[panel]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(0.0, 5e4);
    for (int i = 0; i < 1000; ++i) {
        const double count = dist(rng);
        const double back = panel::inverse_transform(panel::log_transform(count));
        CHECK(back == Approx(count).epsilon(1e-10));
    }
    CHECK(panel::inverse_transform(panel::log_transform(0.0)) == 0.0);
}

TEST_CASE("missing counts interpolate linearly with constant edges", "[panel]") {
    const double kNan = std::nan("");
    RawSeries s = hourly_series("2011-01-03T00:00", 6, [](int, int) { return 1.0; }, 1);
    s.counts.col(0) << kNan, 2.0, kNan, 4.0, 5.0, kNan;
    Warnings w;
    const RawSeries filled = panel::interpolate_missing(s, &w);
    CHECK(filled.counts(0, 0) == 2.0);           // leading: constant extension
    CHECK(filled.counts(2, 0) == Approx(3.0));   // interior midpoint
    CHECK(filled.counts(5, 0) == 5.0);           // trailing: constant extension
    REQUIRE(w.messages.size() == 1);
    CHECK(w.messages.front().find("3") != std::string::npos);

    s.counts.col(0) << 5.0, kNan, 5.0, 5.0, 5.0, 5.0;
    CHECK(panel::interpolate_missing(s).counts(1, 0) == 5.0);
}

TEST_CASE("interpolation with no gaps is the identity", "[panel]") {
    RawSeries s = hourly_series("2011-01-03T00:00", 48,
                                [](int i, int c) { return 10.0 + i + 100.0 * c; });
    const RawSeries out = panel::interpolate_missing(s);
    CHECK(out.counts == s.counts);
}

TEST_CASE("a size with fewer than two observed values is rejected by name", "[panel]") {
    const double kNan = std::nan("");
    RawSeries s = hourly_series("2011-01-03T00:00", 4, [](int, int) { return 1.0; }, 2);
    s.counts.col(1) << kNan, 7.0, kNan, kNan;
    CHECK_THROWS_WITH(panel::interpolate_missing(s), Catch::Contains("20"));
}

TEST_CASE("trapezoid weights sum to the grid span", "[panel]") {
    const Eigen::VectorXd unit = panel::trapezoid_weights(Eigen::VectorXd::LinSpaced(24, 0, 23));
    CHECK(unit.sum() == Approx(23.0));
    CHECK(unit[0] == Approx(0.5));
    CHECK(unit[1] == Approx(1.0));
    CHECK(unit[23] == Approx(0.5));

    Eigen::VectorXd uneven(4);
    uneven << 0.0, 1.0, 3.0, 7.0;
    const Eigen::VectorXd w = panel::trapezoid_weights(uneven);
    CHECK(w.sum() == Approx(7.0));
    CHECK(w[0] == Approx(0.5));
    CHECK(w[1] == Approx(1.5));
    CHECK(w[2] == Approx(3.0));
    CHECK(w[3] == Approx(2.0));
}

TEST_CASE("weekday segmentation keeps complete filtered days", "[panel]") {
    // 5 head hours before the first midnight, 4 full weeks, 3 tail hours.
    const int weeks = 4;
    const int total = 5 + weeks * 7 * 24 + 3;
    RawSeries s = hourly_series("2011-01-02T19:00", total,
                                [](int i, int) { return static_cast<double>(i); });
    Segmentation seg;
    seg.mode = SegmentMode::weekday;
    seg.weekday = Weekday::tue;
    Warnings w;
    const FunctionalPanel pan = panel::segment(s, seg, &w);
    CHECK(pan.days() == weeks);
    CHECK(pan.points() == 24);
    CHECK(pan.sizes() == 2);
    REQUIRE(w.messages.size() == 1);
    CHECK(w.messages.front().find("8") != std::string::npos);

    // First Tuesday begins 5 + 24 hours into the series.
    const double first_tue = 5.0 + 24.0;
    CHECK(pan.values[0](0, 0) == Approx(panel::log_transform(first_tue)));
    CHECK(pan.values[0](0, 23) == Approx(panel::log_transform(first_tue + 23.0)));
    CHECK(pan.values[0](1, 0) == Approx(panel::log_transform(first_tue + 168.0)));
}

TEST_CASE("day segmentation consumes every complete day exactly once", "[panel]") {
    const int days = 9;
    RawSeries s = hourly_series("2011-01-03T00:00", days * 24 + 7,
                                [](int i, int) { return static_cast<double>(i % 24); });
    Segmentation seg;
    seg.mode = SegmentMode::day;
    const FunctionalPanel pan = panel::segment(s, seg);
    CHECK(pan.days() == days);
    CHECK(pan.points() == 24);
    long cells = static_cast<long>(pan.days()) * pan.points();
    CHECK(cells == days * 24);
    for (int t = 0; t < pan.days(); ++t) {
        for (int j = 0; j < 24; ++j) {
            CHECK(pan.values[0](t, j) == Approx(panel::log_transform(j)));
        }
    }
}

TEST_CASE("week segmentation starts at a Monday midnight", "[panel]") {
    // Series starts Saturday; the first complete week begins the following
    // Monday, so two leading days are dropped.
    const int weeks = 3;
    const int head = 2 * 24;
    RawSeries s = hourly_series("2011-01-01T00:00", head + weeks * 168,
                                [](int i, int) { return static_cast<double>(i); });
    Segmentation seg;
    seg.mode = SegmentMode::week;
    Warnings w;
    const FunctionalPanel pan = panel::segment(s, seg, &w);
    CHECK(pan.days() == weeks);
    CHECK(pan.points() == 168);
    CHECK(pan.values[0](0, 0) == Approx(panel::log_transform(head)));
}

TEST_CASE("segmentation matches the published panel dimensions", "[panel]") {
    const int weeks = 408;
    RawSeries s = hourly_series("2011-01-03T00:00", weeks * 7 * 24,
                                [](int i, int) { return static_cast<double>(i % 100); }, 1);
    Segmentation seg;
    seg.mode = SegmentMode::weekday;
    seg.weekday = Weekday::mon;
    const FunctionalPanel weekday_panel = panel::segment(s, seg);
    CHECK(weekday_panel.days() == 408);
    CHECK(weekday_panel.points() == 24);

    seg.mode = SegmentMode::day;
    const FunctionalPanel day_panel = panel::segment(s, seg);
    CHECK(day_panel.days() == 2856);
    CHECK(day_panel.points() == 24);

    seg.mode = SegmentMode::week;
    const FunctionalPanel week_panel = panel::segment(s, seg);
    CHECK(week_panel.days() == 408);
    CHECK(week_panel.points() == 168);
}

TEST_CASE("too few segments or missing values are rejected", "[panel]") {
    RawSeries two_weeks = hourly_series("2011-01-03T00:00", 2 * 168,
                                        [](int, int) { return 1.0; });
    Segmentation seg;
    seg.mode = SegmentMode::week;
    CHECK_THROWS_AS(panel::segment(two_weeks, seg), data_error);

    RawSeries gappy = hourly_series("2011-01-03T00:00", 4 * 168,
                                    [](int, int) { return 1.0; });
    gappy.counts(17, 0) = std::nan("");
    seg.mode = SegmentMode::day;
    CHECK_THROWS_AS(panel::segment(gappy, seg), data_error);

    RawSeries negative = hourly_series("2011-01-03T00:00", 4 * 168,
                                       [](int, int) { return 1.0; });
    negative.counts(3, 1) = -2.0;
    CHECK_THROWS_AS(panel::segment(negative, seg), data_error);
}

TEST_CASE("panel accessors slice consistently", "[panel]") {
    std::mt19937_64 rng(42);
    const FunctionalPanel pan = testsupport::random_panel(rng, 3, 6, 5);
    const Eigen::VectorXd stacked = pan.stacked_day(2);
    REQUIRE(stacked.size() == 15);
    for (int s = 0; s < 3; ++s) {
        CHECK(stacked.segment(5 * s, 5).transpose() == pan.values[s].row(2));
    }
    const Eigen::MatrixXd day = pan.day_matrix(4);
    CHECK(day.rows() == 3);
    CHECK(day.row(1) == pan.values[1].row(4));

    const FunctionalPanel head = pan.first_days(4);
    CHECK(head.days() == 4);
    CHECK(head.values[2] == pan.values[2].topRows(4));
    CHECK_THROWS_AS(pan.first_days(7), data_error);
}

TEST_CASE("make_panel validates shapes and labels", "[panel]") {
    std::mt19937_64 rng(1);
    const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(4, 0, 3);
    Segmentation seg;
    seg.mode = SegmentMode::day;

    std::vector<Eigen::MatrixXd> mismatched = {Eigen::MatrixXd::Zero(3, 4),
                                               Eigen::MatrixXd::Zero(2, 4)};
    CHECK_THROWS_AS(panel::make_panel(mismatched, grid, seg, {10.0, 20.0}), data_error);

    std::vector<Eigen::MatrixXd> wrong_p = {Eigen::MatrixXd::Zero(3, 5)};
    CHECK_THROWS_AS(panel::make_panel(wrong_p, grid, seg, {10.0}), data_error);

    std::vector<Eigen::MatrixXd> ok = {Eigen::MatrixXd::Zero(3, 4),
                                       Eigen::MatrixXd::Zero(3, 4)};
    CHECK_THROWS_AS(panel::make_panel(ok, grid, seg, {20.0, 10.0}), data_error);
    CHECK_NOTHROW(panel::make_panel(ok, grid, seg, {10.0, 20.0}));
}

TEST_CASE("panel CSV round trip is exact", "[panel]") {
    std::mt19937_64 rng(7);
    FunctionalPanel pan = testsupport::random_panel(rng, 2, 5, 6);
    pan.segmentation.mode = SegmentMode::weekday;
    pan.segmentation.weekday = Weekday::thu;
    const std::string path = temp_path("fpnsd_test_panel.csv");
    panel::write_panel_csv(pan, path);
    const FunctionalPanel back = panel::read_panel_csv(path);
    CHECK(back.segmentation.mode == SegmentMode::weekday);
    CHECK(back.segmentation.weekday == Weekday::thu);
    CHECK(back.size_labels == pan.size_labels);
    for (int s = 0; s < pan.sizes(); ++s) {
        CHECK(back.values[s] == pan.values[s]);
    }
    CHECK(back.grid == pan.grid);
    std::remove(path.c_str());
}

TEST_CASE("raw CSV reader handles missing cells and bad input", "[panel]") {
    const std::string path = temp_path("fpnsd_test_raw.csv");
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::fputs("timestamp,10,20\n", f);
        std::fputs("2011-01-03T00:00:00,5,\n", f);
        std::fputs("2011-01-03T01:00:00,,8\n", f);
        std::fclose(f);
    }
    const RawSeries s = panel::read_raw_csv(path);
    CHECK(s.rows() == 2);
    CHECK(s.size_labels == std::vector<double>{10.0, 20.0});
    CHECK(s.counts(0, 0) == 5.0);
    CHECK(std::isnan(s.counts(0, 1)));
    CHECK(std::isnan(s.counts(1, 0)));
    CHECK(s.counts(1, 1) == 8.0);
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::fputs("time,10,20\n2011-01-03T00:00:00,1,2\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(panel::read_raw_csv(path), data_error);
    std::remove(path.c_str());
}

TEST_CASE("timestamps parse, format and resolve weekdays", "[panel]") {
    const std::int64_t mon = panel::parse_timestamp("2011-01-03T00:00");
    CHECK(panel::weekday_of_hour(mon) == Weekday::mon);
    CHECK(panel::weekday_of_hour(mon - 1) == Weekday::sun);
    CHECK(panel::weekday_of_hour(mon + 24 * 5) == Weekday::sat);
    CHECK(panel::format_timestamp(mon) == "2011-01-03T00:00:00");
    CHECK(panel::parse_timestamp("2011-01-03 07:00:00") == mon + 7);
    CHECK(panel::parse_timestamp(panel::format_timestamp(mon + 12345)) == mon + 12345);
    CHECK_THROWS_AS(panel::parse_timestamp("2011-01-03T00:30"), data_error);
    CHECK_THROWS_AS(panel::parse_timestamp("2011-13-03T00:00"), data_error);
    CHECK_THROWS_AS(panel::parse_timestamp("garbage"), data_error);

    // Epoch day zero (1970-01-01) is a Thursday.
    CHECK(panel::weekday_of_hour(0) == Weekday::thu);
    CHECK(panel::parse_timestamp("1970-01-01T00:00") == 0);
}
