// Generates a synthetic particle-number-size-distribution series shaped like
// hourly monitoring-station exports: one count column per size channel, a
// diurnal cycle with weekday/weekend contrast, day-level persistence shared
// across channels, and a sprinkle of missing cells.
#include <cmath>
#include <cstdint>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "fpnsd/common.hpp"
#include "fpnsd/detail/csv.hpp"
#include "fpnsd/panel.hpp"

namespace {

using namespace fpnsd;

struct Options {
    std::string output = "synthetic_pnsd.csv";
    std::string start = "2011-01-02T19:00";
    int weeks = 60;
    int tail_hours = 7;
    std::uint64_t seed = 20110102;
    double missing_rate = 0.003;
};

Options parse_options(int argc, char** argv) {
    Options opt;
    for (int i = 1; i < argc; ++i) {
        const std::string name = argv[i];
        auto value = [&]() -> std::string {
            if (i + 1 >= argc) {
                throw config_error("option " + name + " needs a value");
            }
            return argv[++i];
        };
        if (name == "--output") {
            opt.output = value();
        } else if (name == "--start") {
            opt.start = value();
        } else if (name == "--weeks") {
            opt.weeks = std::stoi(value());
        } else if (name == "--tail-hours") {
            opt.tail_hours = std::stoi(value());
        } else if (name == "--seed") {
            opt.seed = std::stoull(value());
        } else if (name == "--missing-rate") {
            opt.missing_rate = std::stod(value());
        } else if (name == "--help" || name == "-h") {
            std::cout << "usage: fpnsd_synth [--output f.csv] [--start YYYY-MM-DDTHH:MM]\n"
                         "                   [--weeks N] [--tail-hours N] [--seed N]\n"
                         "                   [--missing-rate r]\n";
            std::exit(0);
        } else {
            throw config_error("unknown option: " + name);
        }
    }
    if (opt.weeks < 1 || opt.tail_hours < 0 || opt.missing_rate < 0.0 ||
        opt.missing_rate >= 1.0) {
        throw config_error("invalid generator options");
    }
    return opt;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        const Options opt = parse_options(argc, argv);
        const std::vector<double> sizes = {20.0, 50.0, 100.0, 200.0};
        const int S = static_cast<int>(sizes.size());

        const std::int64_t start_hour = panel::parse_timestamp(opt.start);
        const std::int64_t total_hours =
            static_cast<std::int64_t>(opt.weeks) * 7 * 24 + opt.tail_hours;

        std::mt19937_64 rng(opt.seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);

        // Log10 scale: base level per channel, two diurnal harmonics whose
        // amplitude shrinks with size, weekend dip, one shared day factor and
        // one channel day factor, both AR(1), plus cell noise.
        const std::vector<double> base = {3.1, 2.9, 2.5, 2.0};
        const std::vector<double> amp1 = {0.24, 0.21, 0.15, 0.10};
        const std::vector<double> amp2 = {0.10, 0.08, 0.05, 0.03};
        const std::vector<double> common_load = {1.0, 0.9, 0.7, 0.5};

        double common = 0.0;
        std::vector<double> specific(S, 0.0);
        std::int64_t current_day = -1;

        std::string out = "timestamp";
        for (double s : sizes) {
            out += ',';
            out += csv::format_double(s);
        }
        out += "\n";

        for (std::int64_t h = 0; h < total_hours; ++h) {
            const std::int64_t hour = start_hour + h;
            const std::int64_t day = hour >= 0 ? hour / 24 : (hour - 23) / 24;
            if (day != current_day) {
                common = 0.72 * common + 0.16 * gauss(rng);
                for (int s = 0; s < S; ++s) {
                    specific[s] = 0.55 * specific[s] + 0.10 * gauss(rng);
                }
                current_day = day;
            }
            const int hod = static_cast<int>(hour - day * 24);
            const Weekday wd = panel::weekday_of_hour(hour);
            const bool weekend = wd == Weekday::sat || wd == Weekday::sun;

            out += panel::format_timestamp(hour);
            for (int s = 0; s < S; ++s) {
                out += ',';
                if (unif(rng) < opt.missing_rate) {
                    continue;
                }
                const double phase = 2.0 * M_PI * (hod - 8) / 24.0;
                double level = base[s];
                level += amp1[s] * std::sin(phase) + amp2[s] * std::sin(2.0 * phase - 0.9);
                if (weekend) {
                    level -= 0.12;
                }
                level += common_load[s] * common + specific[s];
                level += 0.05 * gauss(rng);
                if (level < 0.3) {
                    level = 0.3;
                }
                const double count = std::round(std::pow(10.0, level) - 1.0);
                out += csv::format_double(count);
            }
            out += '\n';
        }

        csv::write_file(opt.output, out);
        std::cout << "wrote " << total_hours << " hours x " << S << " sizes to " << opt.output
                  << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
