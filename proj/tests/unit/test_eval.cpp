#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "fpnsd/common.hpp"
#include "fpnsd/eval.hpp"
#include "fpnsd/panel.hpp"
#include "support/synthetic.hpp"

using Catch::Contains;
using fpnsd::FunctionalPanel;
using fpnsd::eval::BacktestResult;
using fpnsd::eval::DmResult;
using fpnsd::eval::Loss;
using fpnsd::eval::MapeResult;
using fpnsd::eval::SplitPlan;
using fpnsd::eval::WinCounts;

namespace {

using Track = std::vector<Eigen::MatrixXd>;

Track random_track(std::mt19937_64& rng, int W, int S, int p, double lo, double hi) {
    Track out;
    for (int w = 0; w < W; ++w) {
        out.push_back(testsupport::random_matrix(rng, S, p, lo, hi));
    }
    return out;
}

Track constant_track(int W, int S, int p, double value) {
    return Track(static_cast<std::size_t>(W), Eigen::MatrixXd::Constant(S, p, value));
}

}  // namespace

TEST_CASE("split plan cuts 50/25/25 with the validation boundary down", "[eval]") {
    SECTION("the 408-day layout") {
        const SplitPlan plan = SplitPlan::make(408);
        REQUIRE(plan.train_end == 204);
        REQUIRE(plan.validation_end == 306);
        REQUIRE(plan.train_days() == 204);
        REQUIRE(plan.validation_days() == 102);
        REQUIRE(plan.test_days() == 102);
    }
    SECTION("partitions every admissible n exactly") {
        for (int n : {4, 5, 6, 7, 9, 100, 101, 102, 103, 407, 408}) {
            const SplitPlan plan = SplitPlan::make(n);
            REQUIRE(plan.train_end == n / 2);
            REQUIRE(plan.validation_end == (3 * n) / 4);
            REQUIRE(plan.train_days() > 0);
            REQUIRE(plan.validation_days() > 0);
            REQUIRE(plan.test_days() > 0);
            REQUIRE(plan.train_days() + plan.validation_days() + plan.test_days() == n);
        }
    }
    SECTION("too few days") {
        REQUIRE_THROWS_AS(SplitPlan::make(3), fpnsd::data_error);
    }
}

TEST_CASE("expanding window walks one day at a time", "[eval]") {
    std::mt19937_64 rng(19);
    SECTION("408 days from 306 give 102 forecasts") {
        const FunctionalPanel pan = testsupport::random_panel(rng, 1, 408, 3);
        const auto last_day = [](const FunctionalPanel& sub) {
            return sub.day_matrix(sub.days() - 1);
        };
        const BacktestResult result = fpnsd::eval::expanding_window(pan, last_day, 306);
        REQUIRE(result.start == 306);
        REQUIRE(result.forecasts.size() == 102);
        for (int w : {0, 50, 101}) {
            REQUIRE(result.forecasts[static_cast<std::size_t>(w)] ==
                    pan.day_matrix(306 + w - 1));
        }
    }
    SECTION("start at n-1 equals one direct fit") {
        const FunctionalPanel pan = testsupport::random_panel(rng, 2, 12, 4);
        const auto mean_day = [](const FunctionalPanel& sub) {
            Eigen::MatrixXd out(sub.sizes(), sub.points());
            for (int s = 0; s < sub.sizes(); ++s) {
                out.row(s) = sub.values[static_cast<std::size_t>(s)].colwise().mean();
            }
            return out;
        };
        const BacktestResult result = fpnsd::eval::expanding_window(pan, mean_day, 11);
        REQUIRE(result.forecasts.size() == 1);
        REQUIRE(result.forecasts[0] == mean_day(pan.first_days(11)));
    }
    SECTION("a constant panel forecasts the constant day") {
        std::vector<Eigen::MatrixXd> values(2, Eigen::MatrixXd::Constant(10, 4, 1.5));
        const FunctionalPanel pan = fpnsd::panel::make_panel(
            std::move(values), Eigen::VectorXd::LinSpaced(4, 0.0, 3.0),
            {fpnsd::SegmentMode::day, fpnsd::Weekday::mon}, {10.0, 20.0});
        const auto mean_day = [](const FunctionalPanel& sub) {
            Eigen::MatrixXd out(sub.sizes(), sub.points());
            for (int s = 0; s < sub.sizes(); ++s) {
                out.row(s) = sub.values[static_cast<std::size_t>(s)].colwise().mean();
            }
            return out;
        };
        const BacktestResult result = fpnsd::eval::expanding_window(pan, mean_day, 5);
        REQUIRE(result.forecasts.size() == 5);
        for (const auto& fc : result.forecasts) {
            REQUIRE(fc == Eigen::MatrixXd::Constant(2, 4, 1.5));
        }
    }
    SECTION("the earliest failing window is reported") {
        const FunctionalPanel pan = testsupport::random_panel(rng, 1, 12, 3);
        const auto flaky = [](const FunctionalPanel& sub) -> Eigen::MatrixXd {
            if (sub.days() == 7 || sub.days() == 9) {
                throw fpnsd::data_error("boom");
            }
            return sub.day_matrix(sub.days() - 1);
        };
        REQUIRE_THROWS_WITH(fpnsd::eval::expanding_window(pan, flaky, 5),
                            Contains("window 7") && Contains("boom"));
    }
    SECTION("start and forecaster validation") {
        const FunctionalPanel pan = testsupport::random_panel(rng, 1, 10, 3);
        const auto last_day = [](const FunctionalPanel& sub) {
            return sub.day_matrix(sub.days() - 1);
        };
        REQUIRE_THROWS_AS(fpnsd::eval::expanding_window(pan, last_day, 2),
                          fpnsd::config_error);
        REQUIRE_THROWS_AS(fpnsd::eval::expanding_window(pan, last_day, 10),
                          fpnsd::config_error);
        REQUIRE_THROWS_AS(
            fpnsd::eval::expanding_window(pan, fpnsd::eval::WindowForecaster{}, 5),
            fpnsd::config_error);
        const auto wrong_shape = [](const FunctionalPanel&) {
            return Eigen::MatrixXd::Zero(2, 2);
        };
        REQUIRE_THROWS_AS(fpnsd::eval::expanding_window(pan, wrong_shape, 5),
                          fpnsd::data_error);
    }
}

TEST_CASE("MAPE follows the percentage arithmetic", "[eval]") {
    std::mt19937_64 rng(23);
    SECTION("perfect forecasts score zero") {
        const Track actual = random_track(rng, 4, 2, 3, 50.0, 150.0);
        const MapeResult result = fpnsd::eval::mape(actual, actual);
        REQUIRE(result.by_cell.maxCoeff() == 0.0);
        REQUIRE(result.by_hour.maxCoeff() == 0.0);
        REQUIRE(result.by_size.maxCoeff() == 0.0);
        REQUIRE(result.excluded_cells == 0);
    }
    SECTION("doubling every count scores one hundred percent") {
        const Track actual = random_track(rng, 3, 2, 4, 10.0, 90.0);
        Track doubled;
        for (const auto& day : actual) {
            doubled.push_back(2.0 * day);
        }
        const MapeResult result = fpnsd::eval::mape(actual, doubled);
        REQUIRE(result.by_cell.minCoeff() == 100.0);
        REQUIRE(result.by_cell.maxCoeff() == 100.0);
    }
    SECTION("ten percent on both days averages to ten percent") {
        Track actual = {Eigen::MatrixXd::Constant(1, 1, 10.0),
                        Eigen::MatrixXd::Constant(1, 1, 20.0)};
        Track forecast = {Eigen::MatrixXd::Constant(1, 1, 11.0),
                          Eigen::MatrixXd::Constant(1, 1, 18.0)};
        const MapeResult result = fpnsd::eval::mape(actual, forecast);
        REQUIRE(result.by_cell(0, 0) == Approx(10.0).margin(1e-12));
        REQUIRE(result.by_hour[0] == Approx(10.0).margin(1e-12));
        REQUIRE(result.by_size[0] == Approx(10.0).margin(1e-12));
    }
    SECTION("zero actuals are excluded and counted") {
        Track actual = constant_track(3, 2, 2, 40.0);
        Track forecast = constant_track(3, 2, 2, 50.0);
        actual[1](0, 0) = 0.0;
        for (auto& day : actual) {
            day(1, 1) = 0.0;
        }
        const MapeResult result = fpnsd::eval::mape(actual, forecast);
        REQUIRE(result.excluded_cells == 4);
        REQUIRE(result.by_cell(0, 0) == Approx(25.0).margin(1e-12));
        REQUIRE(result.by_cell(0, 1) == Approx(25.0).margin(1e-12));
        REQUIRE(std::isnan(result.by_cell(1, 1)));
        REQUIRE(result.by_hour[1] == Approx(result.by_cell(0, 1)).margin(1e-12));
        REQUIRE(result.by_size[1] == Approx(result.by_cell(1, 0)).margin(1e-12));
    }
    SECTION("all-zero actuals leave the metric undefined") {
        const Track actual = constant_track(2, 1, 2, 0.0);
        const Track forecast = constant_track(2, 1, 2, 5.0);
        REQUIRE_THROWS_AS(fpnsd::eval::mape(actual, forecast), fpnsd::numeric_error);
    }
    SECTION("reordering the days does not move the metric") {
        Track actual = random_track(rng, 6, 2, 3, 20.0, 120.0);
        Track forecast = random_track(rng, 6, 2, 3, 20.0, 120.0);
        const MapeResult base = fpnsd::eval::mape(actual, forecast);
        std::vector<std::size_t> order = {4, 0, 5, 2, 1, 3};
        Track actual_shuffled;
        Track forecast_shuffled;
        for (std::size_t w : order) {
            actual_shuffled.push_back(actual[w]);
            forecast_shuffled.push_back(forecast[w]);
        }
        const MapeResult shuffled = fpnsd::eval::mape(actual_shuffled, forecast_shuffled);
        REQUIRE((base.by_cell - shuffled.by_cell).cwiseAbs().maxCoeff() < 1e-12);
        REQUIRE(base.excluded_cells == shuffled.excluded_cells);
    }
    SECTION("track validation") {
        REQUIRE_THROWS_AS(fpnsd::eval::mape({}, {}), fpnsd::data_error);
        const Track actual = constant_track(2, 1, 2, 1.0);
        REQUIRE_THROWS_AS(fpnsd::eval::mape(actual, constant_track(3, 1, 2, 1.0)),
                          fpnsd::data_error);
        REQUIRE_THROWS_AS(fpnsd::eval::mape(actual, constant_track(2, 2, 2, 1.0)),
                          fpnsd::data_error);
    }
}

TEST_CASE("coverage and its deviation from the nominal level", "[eval]") {
    const Track lower = constant_track(100, 1, 1, 0.0);
    const Track upper = constant_track(100, 1, 1, 10.0);
    SECTION("all inside") {
        const Track actual = constant_track(100, 1, 1, 5.0);
        const auto result = fpnsd::eval::ecp_cpd(actual, lower, upper, 0.2);
        REQUIRE(result.ecp(0, 0) == 1.0);
        REQUIRE(result.cpd(0, 0) == Approx(0.2).margin(1e-12));
    }
    SECTION("none inside") {
        const Track actual = constant_track(100, 1, 1, 20.0);
        const auto result = fpnsd::eval::ecp_cpd(actual, lower, upper, 0.2);
        REQUIRE(result.ecp(0, 0) == 0.0);
        REQUIRE(result.cpd(0, 0) == Approx(0.8).margin(1e-12));
    }
    SECTION("eighty of one hundred inside at the eighty percent level") {
        Track actual = constant_track(100, 1, 1, 5.0);
        for (int w = 0; w < 20; ++w) {
            actual[static_cast<std::size_t>(w)](0, 0) = 20.0;
        }
        const auto result = fpnsd::eval::ecp_cpd(actual, lower, upper, 0.2);
        REQUIRE(result.ecp(0, 0) == 0.8);
        REQUIRE(result.cpd(0, 0) == 0.0);
    }
    SECTION("both bounds count as inside") {
        Track actual = constant_track(2, 1, 1, 0.0);
        actual[1](0, 0) = 10.0;
        const auto full = fpnsd::eval::ecp_cpd(actual, constant_track(2, 1, 1, 0.0),
                                               constant_track(2, 1, 1, 10.0), 0.2);
        REQUIRE(full.ecp(0, 0) == 1.0);
    }
    SECTION("alpha validation") {
        const Track actual = constant_track(100, 1, 1, 5.0);
        REQUIRE_THROWS_AS(fpnsd::eval::ecp_cpd(actual, lower, upper, 0.0),
                          fpnsd::config_error);
        REQUIRE_THROWS_AS(fpnsd::eval::ecp_cpd(actual, lower, upper, 1.0),
                          fpnsd::config_error);
    }
}

TEST_CASE("interval score penalises misses at rate two over alpha", "[eval]") {
    SECTION("inside the band only the width counts") {
        REQUIRE(fpnsd::eval::interval_score(10.0, 20.0, 15.0, 0.2) == 10.0);
        REQUIRE(fpnsd::eval::interval_score(10.0, 20.0, 10.0, 0.2) == 10.0);
        REQUIRE(fpnsd::eval::interval_score(10.0, 20.0, 20.0, 0.2) == 10.0);
    }
    SECTION("a miss below the band") {
        REQUIRE(fpnsd::eval::interval_score(10.0, 20.0, 5.0, 0.2) ==
                Approx(60.0).margin(1e-9));
    }
    SECTION("a miss above the band") {
        REQUIRE(fpnsd::eval::interval_score(10.0, 20.0, 26.0, 0.2) ==
                Approx(70.0).margin(1e-9));
    }
    SECTION("a degenerate band on the actual scores zero") {
        REQUIRE(fpnsd::eval::interval_score(7.0, 7.0, 7.0, 0.2) == 0.0);
    }
    SECTION("crossed bounds are rejected") {
        REQUIRE_THROWS_AS(fpnsd::eval::interval_score(20.0, 10.0, 15.0, 0.2),
                          fpnsd::data_error);
    }
    SECTION("the mean score dominates the mean width") {
        std::mt19937_64 rng(31);
        const int W = 12;
        Track lower, upper, inside, outside;
        for (int w = 0; w < W; ++w) {
            const Eigen::MatrixXd centre = testsupport::random_matrix(rng, 2, 3, 40.0, 60.0);
            const Eigen::MatrixXd half = testsupport::random_matrix(rng, 2, 3, 1.0, 5.0);
            lower.push_back(centre - half);
            upper.push_back(centre + half);
            inside.push_back(centre);
            outside.push_back(centre);
        }
        outside[3](1, 2) = 1000.0;
        Eigen::MatrixXd mean_width = Eigen::MatrixXd::Zero(2, 3);
        for (int w = 0; w < W; ++w) {
            mean_width += upper[static_cast<std::size_t>(w)] -
                          lower[static_cast<std::size_t>(w)];
        }
        mean_width /= W;
        const Eigen::MatrixXd all_in =
            fpnsd::eval::mean_interval_score(inside, lower, upper, 0.2);
        REQUIRE((all_in - mean_width).cwiseAbs().maxCoeff() < 1e-12);
        const Eigen::MatrixXd one_out =
            fpnsd::eval::mean_interval_score(outside, lower, upper, 0.2);
        REQUIRE(((one_out - mean_width).array() >= -1e-12).all());
        REQUIRE(one_out(1, 2) > mean_width(1, 2));
        REQUIRE(one_out(0, 0) == Approx(mean_width(0, 0)).margin(1e-12));
    }
    SECTION("the mean matches a per-cell oracle") {
        std::mt19937_64 rng(37);
        const int W = 7;
        Track lower, upper, actual;
        for (int w = 0; w < W; ++w) {
            const Eigen::MatrixXd a = testsupport::random_matrix(rng, 2, 2, 0.0, 100.0);
            const Eigen::MatrixXd b = testsupport::random_matrix(rng, 2, 2, 0.0, 100.0);
            lower.push_back(a.cwiseMin(b));
            upper.push_back(a.cwiseMax(b));
            actual.push_back(testsupport::random_matrix(rng, 2, 2, -20.0, 120.0));
        }
        const Eigen::MatrixXd mean =
            fpnsd::eval::mean_interval_score(actual, lower, upper, 0.05);
        for (int s = 0; s < 2; ++s) {
            for (int j = 0; j < 2; ++j) {
                double acc = 0.0;
                for (int w = 0; w < W; ++w) {
                    const double lb = lower[static_cast<std::size_t>(w)](s, j);
                    const double ub = upper[static_cast<std::size_t>(w)](s, j);
                    const double p = actual[static_cast<std::size_t>(w)](s, j);
                    acc += (ub - lb) + (p < lb ? (2.0 / 0.05) * (lb - p) : 0.0) +
                           (p > ub ? (2.0 / 0.05) * (p - ub) : 0.0);
                }
                REQUIRE(mean(s, j) == Approx(acc / W).margin(1e-9));
            }
        }
    }
}

TEST_CASE("per-window loss series feed the DM test", "[eval]") {
    std::mt19937_64 rng(41);
    const Track actual = random_track(rng, 5, 2, 3, 10.0, 50.0);
    const Track forecast = random_track(rng, 5, 2, 3, 10.0, 50.0);
    const Eigen::VectorXd sq = fpnsd::eval::loss_series(actual, forecast, Loss::squared);
    const Eigen::VectorXd ab = fpnsd::eval::loss_series(actual, forecast, Loss::absolute);
    REQUIRE(sq.size() == 5);
    for (int w = 0; w < 5; ++w) {
        double acc_sq = 0.0;
        double acc_ab = 0.0;
        for (int s = 0; s < 2; ++s) {
            for (int j = 0; j < 3; ++j) {
                const double e = actual[static_cast<std::size_t>(w)](s, j) -
                                 forecast[static_cast<std::size_t>(w)](s, j);
                acc_sq += e * e;
                acc_ab += std::abs(e);
            }
        }
        REQUIRE(sq[w] == Approx(acc_sq / 6.0).margin(1e-9));
        REQUIRE(ab[w] == Approx(acc_ab / 6.0).margin(1e-9));
    }
}

TEST_CASE("the DM test behaves like a standardised mean", "[eval]") {
    SECTION("identical losses give p = 1") {
        std::mt19937_64 rng(43);
        const Eigen::VectorXd a = testsupport::random_vector(rng, 40, 0.0, 4.0);
        const DmResult result = fpnsd::eval::dm_test(a, a);
        REQUIRE(result.statistic == 0.0);
        REQUIRE(result.p_value == 1.0);
        REQUIRE_FALSE(result.degenerate);
    }
    SECTION("a constant nonzero differential is degenerate") {
        const Eigen::VectorXd a = Eigen::VectorXd::Constant(12, 2.0);
        const Eigen::VectorXd b = Eigen::VectorXd::Constant(12, 1.0);
        const DmResult result = fpnsd::eval::dm_test(a, b);
        REQUIRE(result.degenerate);
        REQUIRE(result.p_value == 0.0);
        REQUIRE(std::isinf(result.statistic));
        REQUIRE(result.statistic > 0.0);
        const DmResult swapped = fpnsd::eval::dm_test(b, a);
        REQUIRE(swapped.statistic < 0.0);
    }
    SECTION("matches a hand-rolled Bartlett statistic") {
        std::mt19937_64 rng(47);
        const int W = 24;
        const Eigen::VectorXd a = testsupport::random_vector(rng, W, 0.0, 3.0);
        const Eigen::VectorXd b = testsupport::random_vector(rng, W, 0.0, 3.0);
        const DmResult result = fpnsd::eval::dm_test(a, b);

        std::vector<double> d(static_cast<std::size_t>(W));
        double mean = 0.0;
        for (int t = 0; t < W; ++t) {
            d[static_cast<std::size_t>(t)] = a[t] - b[t];
            mean += d[static_cast<std::size_t>(t)];
        }
        mean /= W;
        const int lag = static_cast<int>(std::floor(std::cbrt(static_cast<double>(W))));
        double lrv = 0.0;
        for (int k = 0; k <= lag; ++k) {
            double gamma = 0.0;
            for (int t = k; t < W; ++t) {
                gamma += (d[static_cast<std::size_t>(t)] - mean) *
                         (d[static_cast<std::size_t>(t - k)] - mean);
            }
            gamma /= W;
            lrv += (k == 0 ? 1.0 : 2.0 * (1.0 - static_cast<double>(k) / (lag + 1.0))) * gamma;
        }
        const double expect = mean / std::sqrt(lrv / W);
        REQUIRE(result.statistic == Approx(expect).margin(1e-12));
        REQUIRE(result.p_value ==
                Approx(std::erfc(std::abs(expect) / std::sqrt(2.0))).margin(1e-12));
    }
    SECTION("antisymmetric in the argument order") {
        std::mt19937_64 rng(53);
        const Eigen::VectorXd a = testsupport::random_vector(rng, 30, 0.0, 2.0);
        const Eigen::VectorXd b = testsupport::random_vector(rng, 30, 0.0, 2.0);
        const DmResult ab = fpnsd::eval::dm_test(a, b);
        const DmResult ba = fpnsd::eval::dm_test(b, a);
        REQUIRE(ab.statistic == Approx(-ba.statistic).margin(1e-12));
        REQUIRE(ab.p_value == Approx(ba.p_value).margin(1e-12));
    }
    SECTION("holds its size under the null") {
        std::mt19937_64 rng(59);
        std::normal_distribution<double> noise(0.0, 1.0);
        int accepted = 0;
        for (int rep = 0; rep < 200; ++rep) {
            Eigen::VectorXd a(500);
            for (int t = 0; t < 500; ++t) {
                a[t] = noise(rng);
            }
            const DmResult result = fpnsd::eval::dm_test(a, Eigen::VectorXd::Zero(500));
            if (std::abs(result.statistic) < 1.96) {
                ++accepted;
            }
        }
        REQUIRE(accepted >= 180);
    }
    SECTION("validation") {
        const Eigen::VectorXd nine = Eigen::VectorXd::Ones(9);
        REQUIRE_THROWS_AS(fpnsd::eval::dm_test(nine, nine), fpnsd::data_error);
        REQUIRE_THROWS_AS(
            fpnsd::eval::dm_test(Eigen::VectorXd::Ones(12), Eigen::VectorXd::Ones(11)),
            fpnsd::data_error);
        Eigen::VectorXd bad = Eigen::VectorXd::Ones(12);
        bad[4] = std::numeric_limits<double>::quiet_NaN();
        REQUIRE_THROWS_AS(fpnsd::eval::dm_test(bad, Eigen::VectorXd::Ones(12)),
                          fpnsd::data_error);
    }
}

TEST_CASE("win counts credit the per-column MAPE leader", "[eval]") {
    const std::vector<std::string> days = {"mon", "tue"};
    SECTION("a dominant method sweeps the row") {
        std::vector<std::vector<Eigen::MatrixXd>> mape(2);
        for (int g = 0; g < 2; ++g) {
            mape[g] = {Eigen::MatrixXd::Constant(3, 24, 5.0),
                       Eigen::MatrixXd::Constant(3, 24, 7.0)};
        }
        const WinCounts wc = fpnsd::eval::win_counts({"mlfts", "factor"}, days, mape);
        REQUIRE(wc.counts(0, 0) == 24.0);
        REQUIRE(wc.counts(0, 1) == 0.0);
        REQUIRE(wc.counts.row(1).sum() == 24.0);
        REQUIRE(wc.ties.sum() == 0);
    }
    SECTION("exact ties everywhere go to the lexicographically first name") {
        const Eigen::MatrixXd shared = Eigen::MatrixXd::Constant(2, 24, 3.0);
        std::vector<std::vector<Eigen::MatrixXd>> mape = {{shared, shared}};
        const WinCounts wc = fpnsd::eval::win_counts({"zeta", "alpha"}, {"mon"}, mape);
        REQUIRE(wc.counts(0, 0) == 0.0);
        REQUIRE(wc.counts(0, 1) == 24.0);
        REQUIRE(wc.ties[0] == 24);
    }
    SECTION("random reports match a brute-force argmin") {
        std::mt19937_64 rng(61);
        const std::vector<std::string> methods = {"b", "a", "c"};
        const std::vector<std::string> groups = {"mon", "tue", "wed"};
        std::vector<std::vector<Eigen::MatrixXd>> mape(3);
        for (auto& per_method : mape) {
            for (int m = 0; m < 3; ++m) {
                per_method.push_back(testsupport::random_matrix(rng, 4, 7, 1.0, 30.0));
            }
        }
        mape[1][0].col(2) = mape[1][1].col(2);
        const WinCounts wc = fpnsd::eval::win_counts(methods, groups, mape);

        Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(3, 3);
        Eigen::VectorXi expect_ties = Eigen::VectorXi::Zero(3);
        for (int g = 0; g < 3; ++g) {
            for (int j = 0; j < 7; ++j) {
                std::vector<double> means(3);
                for (int m = 0; m < 3; ++m) {
                    means[static_cast<std::size_t>(m)] = mape[g][m].col(j).mean();
                }
                int winner = 0;
                int n_best = 1;
                for (int m = 1; m < 3; ++m) {
                    const double v = means[static_cast<std::size_t>(m)];
                    const double best = means[static_cast<std::size_t>(winner)];
                    if (v < best) {
                        winner = m;
                        n_best = 1;
                    } else if (v == best) {
                        ++n_best;
                        if (methods[static_cast<std::size_t>(m)] <
                            methods[static_cast<std::size_t>(winner)]) {
                            winner = m;
                        }
                    }
                }
                expect(g, winner) += 1.0;
                if (n_best > 1) {
                    expect_ties[g] += 1;
                }
            }
        }
        REQUIRE(wc.counts == expect);
        REQUIRE(wc.ties == expect_ties);
        for (int g = 0; g < 3; ++g) {
            REQUIRE(wc.counts.row(g).sum() == 7.0);
        }
    }
    SECTION("undefined cells are skipped") {
        Eigen::MatrixXd holes = Eigen::MatrixXd::Constant(2, 3, 9.0);
        holes.col(0).setConstant(std::numeric_limits<double>::quiet_NaN());
        const Eigen::MatrixXd fine = Eigen::MatrixXd::Constant(2, 3, 10.0);
        std::vector<std::vector<Eigen::MatrixXd>> mape = {{holes, fine}};
        const WinCounts wc = fpnsd::eval::win_counts({"a", "b"}, {"mon"}, mape);
        REQUIRE(wc.counts(0, 0) == 2.0);
        REQUIRE(wc.counts(0, 1) == 1.0);
    }
    SECTION("validation") {
        const Eigen::MatrixXd m = Eigen::MatrixXd::Constant(2, 3, 1.0);
        REQUIRE_THROWS_AS(fpnsd::eval::win_counts({"a"}, {"mon"}, {{m}}),
                          fpnsd::data_error);
        REQUIRE_THROWS_AS(fpnsd::eval::win_counts({"a", "b"}, {"mon", "tue"}, {{m, m}}),
                          fpnsd::data_error);
        REQUIRE_THROWS_AS(fpnsd::eval::win_counts({"a", "b"}, {"mon"}, {{m}}),
                          fpnsd::data_error);
        const Eigen::MatrixXd other = Eigen::MatrixXd::Constant(3, 3, 1.0);
        REQUIRE_THROWS_AS(fpnsd::eval::win_counts({"a", "b"}, {"mon"}, {{m, other}}),
                          fpnsd::data_error);
    }
}
