#include "fpnsd/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <nlohmann/json.hpp>

#include "fpnsd/detail/csv.hpp"
#include "fpnsd/fpca.hpp"
#include "fpnsd/parallel.hpp"
#include "fpnsd/scorets.hpp"

namespace fpnsd::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kPointHeader = "day,size,hour,actual,forecast";
constexpr const char* kBandHeader = "day,size,hour,lower,upper";

int coverage_pct(double alpha) {
    return static_cast<int>(std::lround((1.0 - alpha) * 100.0));
}

int group_rank(const std::string& name) {
    try {
        return static_cast<int>(parse_weekday(name));
    } catch (const config_error&) {
        return -1;  // "all" and other single-group names sort first
    }
}

json expect_object(const json& j, const std::string& where) {
    if (!j.is_object()) {
        throw config_error(where + " must be a JSON object");
    }
    return j;
}

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (known.find(key) == known.end()) {
            throw config_error("unknown key '" + key + "' in " + where);
        }
    }
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string meta_value(const std::string& line, const std::string& key) {
    const std::string needle = key + "=";
    const auto pos = line.find(needle);
    if (pos == std::string::npos) {
        throw data_error("track metadata is missing '" + key + "'");
    }
    const auto start = pos + needle.size();
    const auto end = line.find(' ', start);
    return line.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

struct Lattice {
    std::vector<int> days;
    std::vector<double> sizes;
    std::vector<double> hours;
    std::vector<Eigen::MatrixXd> first;
    std::vector<Eigen::MatrixXd> second;
};

Lattice read_lattice(const std::vector<std::string>& lines, std::size_t start,
                     const std::string& path) {
    struct Row {
        int day;
        double size;
        double hour;
        double a;
        double b;
    };
    std::vector<Row> rows;
    for (std::size_t i = start; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const auto fields = csv::split_line(lines[i]);
        if (fields.size() != 5) {
            throw data_error("track row " + std::to_string(i + 1) + " must have 5 fields");
        }
        const std::string ctx = path + " row " + std::to_string(i + 1);
        rows.push_back({static_cast<int>(csv::parse_long(fields[0], ctx)),
                        csv::parse_double(fields[1], ctx), csv::parse_double(fields[2], ctx),
                        csv::parse_double(fields[3], ctx),
                        csv::parse_double(fields[4], ctx)});
    }
    if (rows.empty()) {
        throw data_error("track file has no data rows: " + path);
    }
    Lattice lat;
    std::set<int> days;
    std::set<double> sizes, hours;
    for (const auto& r : rows) {
        days.insert(r.day);
        sizes.insert(r.size);
        hours.insert(r.hour);
    }
    lat.days.assign(days.begin(), days.end());
    lat.sizes.assign(sizes.begin(), sizes.end());
    lat.hours.assign(hours.begin(), hours.end());
    const std::size_t expected = lat.days.size() * lat.sizes.size() * lat.hours.size();
    if (rows.size() != expected) {
        throw data_error("track file is not a complete lattice: " + path);
    }
    const int S = static_cast<int>(lat.sizes.size());
    const int H = static_cast<int>(lat.hours.size());
    lat.first.assign(lat.days.size(), Eigen::MatrixXd::Zero(S, H));
    lat.second.assign(lat.days.size(), Eigen::MatrixXd::Zero(S, H));
    auto pos = [](const auto& xs, auto x) {
        return static_cast<int>(std::lower_bound(xs.begin(), xs.end(), x) - xs.begin());
    };
    for (const auto& r : rows) {
        const int d = pos(lat.days, r.day);
        const int s = pos(lat.sizes, r.size);
        const int h = pos(lat.hours, r.hour);
        lat.first[d](s, h) = r.a;
        lat.second[d](s, h) = r.b;
    }
    return lat;
}

void append_lattice_rows(std::string& out, const std::vector<int>& days,
                         const std::vector<double>& sizes, const std::vector<double>& hours,
                         const std::vector<Eigen::MatrixXd>& first,
                         const std::vector<Eigen::MatrixXd>& second) {
    for (std::size_t d = 0; d < days.size(); ++d) {
        for (std::size_t s = 0; s < sizes.size(); ++s) {
            for (std::size_t h = 0; h < hours.size(); ++h) {
                out += std::to_string(days[d]);
                out += ',';
                out += csv::format_double(sizes[s]);
                out += ',';
                out += csv::format_double(hours[h]);
                out += ',';
                out += csv::format_double(first[d](static_cast<Eigen::Index>(s),
                                                   static_cast<Eigen::Index>(h)));
                out += ',';
                out += csv::format_double(second[d](static_cast<Eigen::Index>(s),
                                                    static_cast<Eigen::Index>(h)));
                out += '\n';
            }
        }
    }
}

std::vector<double> to_vector(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(origin + ": invalid JSON: " + e.what());
    }
    expect_object(j, origin);
    reject_unknown(j, {"input", "output_dir", "mode", "weekdays", "models", "model", "update",
                       "intervals", "threads", "execution", "seed"},
                   origin);

    RunConfig cfg;
    if (!j.contains("input") || !j["input"].is_string()) {
        throw config_error(origin + ": 'input' must be a string path");
    }
    cfg.input = j["input"].get<std::string>();
    if (j.contains("output_dir")) {
        cfg.output_dir = j["output_dir"].get<std::string>();
    }
    if (j.contains("mode")) {
        const std::string mode = j["mode"].get<std::string>();
        if (mode == "weekday") {
            cfg.mode = SegmentMode::weekday;
        } else if (mode == "day") {
            cfg.mode = SegmentMode::day;
        } else if (mode == "week") {
            cfg.mode = SegmentMode::week;
        } else {
            throw config_error(origin + ": mode must be weekday, day or week");
        }
    }
    if (j.contains("weekdays")) {
        if (!j["weekdays"].is_array() || j["weekdays"].empty()) {
            throw config_error(origin + ": weekdays must be a non-empty array");
        }
        cfg.weekdays.clear();
        for (const auto& name : j["weekdays"]) {
            cfg.weekdays.push_back(parse_weekday(name.get<std::string>()));
        }
        for (std::size_t i = 1; i < cfg.weekdays.size(); ++i) {
            if (std::find(cfg.weekdays.begin(), cfg.weekdays.begin() + i, cfg.weekdays[i]) !=
                cfg.weekdays.begin() + i) {
                throw config_error(origin + ": duplicate weekday");
            }
        }
    }
    if (j.contains("models")) {
        if (!j["models"].is_array() || j["models"].empty()) {
            throw config_error(origin + ": models must be a non-empty array");
        }
        cfg.models.clear();
        for (const auto& name : j["models"]) {
            const ModelKind kind = parse_model_kind(name.get<std::string>());
            if (std::find(cfg.models.begin(), cfg.models.end(), kind) != cfg.models.end()) {
                throw config_error(origin + ": duplicate model");
            }
            cfg.models.push_back(kind);
        }
    }
    if (j.contains("model")) {
        const json m = expect_object(j["model"], origin + ".model");
        reject_unknown(m, {"K", "L", "q", "q_max"}, origin + ".model");
        cfg.model.K = m.value("K", cfg.model.K);
        cfg.model.L = m.value("L", cfg.model.L);
        cfg.model.q = m.value("q", cfg.model.q);
        cfg.model.q_max = m.value("q_max", cfg.model.q_max);
        if (cfg.model.K < 1 || cfg.model.L < 1 || cfg.model.q_max < 1) {
            throw config_error(origin + ": model orders must be positive");
        }
    }
    if (j.contains("update")) {
        const json u = expect_object(j["update"], origin + ".update");
        reject_unknown(u, {"methods", "N", "cut_points", "lambda_grid", "block_moving"},
                       origin + ".update");
        if (u.contains("methods")) {
            cfg.update.methods.clear();
            for (const auto& name : u["methods"]) {
                const auto method = update::parse_penalty_method(name.get<std::string>());
                if (method == update::PenaltyMethod::ols) {
                    throw config_error(origin +
                                       ": update.methods supports ridge and pls only");
                }
                cfg.update.methods.push_back(method);
            }
        }
        cfg.update.N = u.value("N", cfg.update.N);
        if (cfg.update.N < 1) {
            throw config_error(origin + ": update.N must be positive");
        }
        if (u.contains("cut_points")) {
            cfg.update.cut_points.clear();
            for (const auto& v : u["cut_points"]) {
                cfg.update.cut_points.push_back(v.get<int>());
            }
            for (std::size_t i = 0; i < cfg.update.cut_points.size(); ++i) {
                if (cfg.update.cut_points[i] < 1 ||
                    (i > 0 && cfg.update.cut_points[i] <= cfg.update.cut_points[i - 1])) {
                    throw config_error(origin +
                                       ": cut_points must be increasing positive integers");
                }
            }
        }
        if (u.contains("lambda_grid")) {
            if (u["lambda_grid"].is_string()) {
                if (u["lambda_grid"].get<std::string>() != "default") {
                    throw config_error(origin + ": lambda_grid must be 'default' or an array");
                }
            } else {
                cfg.update.lambda_grid.clear();
                for (const auto& v : u["lambda_grid"]) {
                    cfg.update.lambda_grid.push_back(v.get<double>());
                }
            }
        }
        cfg.update.block_moving = u.value("block_moving", false);
    }
    if (j.contains("intervals")) {
        const json v = expect_object(j["intervals"], origin + ".intervals");
        reject_unknown(v, {"levels", "methods", "theta_per_point"}, origin + ".intervals");
        if (v.contains("levels")) {
            cfg.intervals.levels.clear();
            for (const auto& a : v["levels"]) {
                const double alpha = a.get<double>();
                if (!(alpha > 0.0 && alpha < 1.0)) {
                    throw config_error(origin + ": interval levels must lie in (0, 1)");
                }
                cfg.intervals.levels.push_back(alpha);
            }
        }
        if (v.contains("methods")) {
            cfg.intervals.methods.clear();
            for (const auto& name : v["methods"]) {
                cfg.intervals.methods.push_back(
                    intervals::parse_method(name.get<std::string>()));
            }
        }
        cfg.intervals.theta_per_point = v.value("theta_per_point", false);
    }
    if (j.contains("threads")) {
        cfg.threads = j["threads"].get<int>();
        if (cfg.threads < 0) {
            throw config_error(origin + ": threads must be non-negative");
        }
    }
    if (j.contains("execution")) {
        const std::string exec = j["execution"].get<std::string>();
        if (exec == "serial") {
            cfg.exec = Execution::serial;
        } else if (exec == "parallel") {
            cfg.exec = Execution::parallel;
        } else {
            throw config_error(origin + ": execution must be serial or parallel");
        }
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) {
            throw config_error(origin + ": seed must be a non-negative integer");
        }
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw config_error("cannot open config file: " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

std::string canonical_config(const RunConfig& cfg) {
    json j;
    j["input"] = cfg.input;
    j["output_dir"] = cfg.output_dir;
    j["mode"] = cfg.mode == SegmentMode::weekday ? "weekday"
                : cfg.mode == SegmentMode::day   ? "day"
                                                 : "week";
    json days = json::array();
    for (Weekday d : cfg.weekdays) {
        days.push_back(to_string(d));
    }
    j["weekdays"] = days;
    json models = json::array();
    for (ModelKind kind : cfg.models) {
        models.push_back(to_string(kind));
    }
    j["models"] = models;
    j["model"] = {{"K", cfg.model.K},
                  {"L", cfg.model.L},
                  {"q", cfg.model.q},
                  {"q_max", cfg.model.q_max}};
    json methods = json::array();
    for (auto m : cfg.update.methods) {
        methods.push_back(update::to_string(m));
    }
    j["update"] = {{"methods", methods},
                   {"N", cfg.update.N},
                   {"cut_points", cfg.update.cut_points},
                   {"lambda_grid", cfg.update.lambda_grid},
                   {"block_moving", cfg.update.block_moving}};
    json imethods = json::array();
    for (auto m : cfg.intervals.methods) {
        imethods.push_back(intervals::to_string(m));
    }
    j["intervals"] = {{"levels", cfg.intervals.levels},
                      {"methods", imethods},
                      {"theta_per_point", cfg.intervals.theta_per_point}};
    j["threads"] = cfg.threads;
    j["execution"] = cfg.exec == Execution::serial ? "serial" : "parallel";
    j["seed"] = cfg.seed;
    return j.dump();
}

std::string config_hash(const RunConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(canonical_config(cfg))));
    return buf;
}

std::string track_filename(const PointTrack& track) {
    return "points_" + track.group + "_" + track.model + ".csv";
}

std::string track_filename(const BandTrack& track) {
    return "bands_" + track.group + "_" + track.model + "_" +
           intervals::to_string(track.method) + "_" + std::to_string(coverage_pct(track.alpha)) +
           ".csv";
}

void write_point_track_csv(const PointTrack& track, const std::string& path) {
    std::string out = "# fpnsd points v1 group=" + track.group + " model=" + track.model + "\n";
    out += kPointHeader;
    out += '\n';
    append_lattice_rows(out, track.days, track.sizes, track.hours, track.actual,
                        track.forecast);
    csv::write_file(path, out);
}

PointTrack read_point_track_csv(const std::string& path) {
    const auto lines = csv::read_lines(path);
    if (lines.size() < 3 || lines[0].rfind("# fpnsd points v1 ", 0) != 0 ||
        lines[1] != kPointHeader) {
        throw data_error("not a point track file: " + path);
    }
    PointTrack track;
    track.group = meta_value(lines[0], "group");
    track.model = meta_value(lines[0], "model");
    Lattice lat = read_lattice(lines, 2, path);
    track.days = std::move(lat.days);
    track.sizes = std::move(lat.sizes);
    track.hours = std::move(lat.hours);
    track.actual = std::move(lat.first);
    track.forecast = std::move(lat.second);
    return track;
}

void write_band_track_csv(const BandTrack& track, const std::string& path) {
    std::string out = "# fpnsd bands v1 group=" + track.group + " model=" + track.model +
                      " method=" + intervals::to_string(track.method) +
                      " alpha=" + csv::format_double(track.alpha) + "\n";
    out += kBandHeader;
    out += '\n';
    append_lattice_rows(out, track.days, track.sizes, track.hours, track.lower, track.upper);
    csv::write_file(path, out);
}

BandTrack read_band_track_csv(const std::string& path) {
    const auto lines = csv::read_lines(path);
    if (lines.size() < 3 || lines[0].rfind("# fpnsd bands v1 ", 0) != 0 ||
        lines[1] != kBandHeader) {
        throw data_error("not a band track file: " + path);
    }
    BandTrack track;
    track.group = meta_value(lines[0], "group");
    track.model = meta_value(lines[0], "model");
    track.method = intervals::parse_method(meta_value(lines[0], "method"));
    track.alpha = csv::parse_double(meta_value(lines[0], "alpha"), path + " metadata");
    Lattice lat = read_lattice(lines, 2, path);
    track.days = std::move(lat.days);
    track.sizes = std::move(lat.sizes);
    track.hours = std::move(lat.hours);
    track.lower = std::move(lat.first);
    track.upper = std::move(lat.second);
    return track;
}

ReportStats write_reports(const std::vector<PointTrack>& points,
                          const std::vector<BandTrack>& bands, const std::string& out_dir) {
    if (points.empty()) {
        throw data_error("no point tracks to report on");
    }
    ReportStats stats;

    std::vector<const PointTrack*> sorted_points;
    sorted_points.reserve(points.size());
    for (const auto& t : points) {
        sorted_points.push_back(&t);
    }
    std::sort(sorted_points.begin(), sorted_points.end(),
              [](const PointTrack* a, const PointTrack* b) {
                  const int ra = group_rank(a->group), rb = group_rank(b->group);
                  if (ra != rb) {
                      return ra < rb;
                  }
                  if (a->group != b->group) {
                      return a->group < b->group;
                  }
                  return a->model < b->model;
              });

    std::map<std::pair<std::string, std::string>, eval::MapeResult> mape_cache;
    std::map<std::pair<std::string, std::string>, const PointTrack*> track_index;
    for (const PointTrack* t : sorted_points) {
        const auto key = std::make_pair(t->group, t->model);
        if (track_index.count(key) > 0) {
            throw data_error("duplicate point track for " + t->group + "/" + t->model);
        }
        track_index[key] = t;
        mape_cache[key] = eval::mape(t->actual, t->forecast);
        stats.excluded_cells += mape_cache[key].excluded_cells;
    }

    std::string by_hour = "weekday,model,hour,mape\n";
    std::string by_size = "weekday,model,size,mape\n";
    for (const PointTrack* t : sorted_points) {
        const auto& res = mape_cache[{t->group, t->model}];
        for (std::size_t h = 0; h < t->hours.size(); ++h) {
            by_hour += t->group + "," + t->model + "," + csv::format_double(t->hours[h]) +
                       "," + csv::format_double(res.by_hour[static_cast<Eigen::Index>(h)]) +
                       "\n";
        }
        for (std::size_t s = 0; s < t->sizes.size(); ++s) {
            by_size += t->group + "," + t->model + "," + csv::format_double(t->sizes[s]) +
                       "," + csv::format_double(res.by_size[static_cast<Eigen::Index>(s)]) +
                       "\n";
        }
    }
    csv::write_file(out_dir + "/mape_by_hour.csv", by_hour);
    csv::write_file(out_dir + "/mape_by_size.csv", by_size);
    stats.files.push_back(out_dir + "/mape_by_hour.csv");
    stats.files.push_back(out_dir + "/mape_by_size.csv");

    std::vector<const BandTrack*> sorted_bands;
    for (const auto& b : bands) {
        sorted_bands.push_back(&b);
    }
    std::sort(sorted_bands.begin(), sorted_bands.end(),
              [](const BandTrack* a, const BandTrack* b) {
                  const int ra = group_rank(a->group), rb = group_rank(b->group);
                  if (ra != rb) {
                      return ra < rb;
                  }
                  if (a->group != b->group) {
                      return a->group < b->group;
                  }
                  if (a->model != b->model) {
                      return a->model < b->model;
                  }
                  const std::string ma = intervals::to_string(a->method);
                  const std::string mb = intervals::to_string(b->method);
                  if (ma != mb) {
                      return ma < mb;
                  }
                  return a->alpha > b->alpha;
              });

    std::string cpd = "weekday,model,method,alpha,size,ecp,cpd\n";
    std::string iscore = "weekday,model,method,alpha,size,score\n";
    for (const BandTrack* b : sorted_bands) {
        const auto it = track_index.find({b->group, b->model});
        if (it == track_index.end()) {
            throw data_error("band track " + b->group + "/" + b->model +
                             " has no matching point track");
        }
        const PointTrack* t = it->second;
        if (t->hours != b->hours || t->sizes != b->sizes || t->days != b->days) {
            throw data_error("band track " + b->group + "/" + b->model +
                             " does not align with its point track");
        }
        const auto cov = eval::ecp_cpd(t->actual, b->lower, b->upper, b->alpha);
        const auto score = eval::mean_interval_score(t->actual, b->lower, b->upper, b->alpha);
        for (std::size_t s = 0; s < t->sizes.size(); ++s) {
            const auto si = static_cast<Eigen::Index>(s);
            cpd += b->group + "," + b->model + "," + intervals::to_string(b->method) + "," +
                   csv::format_double(b->alpha) + "," + csv::format_double(t->sizes[s]) + "," +
                   csv::format_double(cov.ecp.row(si).mean()) + "," +
                   csv::format_double(cov.cpd.row(si).mean()) + "\n";
            iscore += b->group + "," + b->model + "," + intervals::to_string(b->method) + "," +
                      csv::format_double(b->alpha) + "," + csv::format_double(t->sizes[s]) +
                      "," + csv::format_double(score.row(si).mean()) + "\n";
        }
    }
    csv::write_file(out_dir + "/cpd.csv", cpd);
    csv::write_file(out_dir + "/interval_score.csv", iscore);
    stats.files.push_back(out_dir + "/cpd.csv");
    stats.files.push_back(out_dir + "/interval_score.csv");

    // Win counts compare the models that cover the full grid in every group.
    std::vector<std::string> groups;
    for (const PointTrack* t : sorted_points) {
        if (std::find(groups.begin(), groups.end(), t->group) == groups.end()) {
            groups.push_back(t->group);
        }
    }
    std::map<std::string, std::vector<double>> full_hours;
    for (const std::string& g : groups) {
        for (const PointTrack* t : sorted_points) {
            if (t->group == g && t->hours.size() > full_hours[g].size()) {
                full_hours[g] = t->hours;
            }
        }
    }
    std::vector<std::string> eligible;
    for (const PointTrack* t : sorted_points) {
        if (t->group != groups.front()) {
            continue;
        }
        bool ok = true;
        for (const std::string& g : groups) {
            const auto it = track_index.find({g, t->model});
            if (it == track_index.end() || it->second->hours != full_hours[g]) {
                ok = false;
                break;
            }
        }
        if (ok) {
            eligible.push_back(t->model);
        }
    }
    std::sort(eligible.begin(), eligible.end());

    std::string wins = "weekday";
    if (eligible.size() < 2) {
        wins += ",ties\n";
    } else {
        for (const auto& m : eligible) {
            wins += "," + m;
        }
        wins += ",ties\n";
        std::vector<std::vector<Eigen::MatrixXd>> mape_by_group;
        for (const std::string& g : groups) {
            std::vector<Eigen::MatrixXd> per_method;
            for (const auto& m : eligible) {
                per_method.push_back(mape_cache[{g, m}].by_cell);
            }
            mape_by_group.push_back(std::move(per_method));
        }
        const auto wc = eval::win_counts(eligible, groups, mape_by_group);
        for (std::size_t g = 0; g < groups.size(); ++g) {
            wins += groups[g];
            for (std::size_t m = 0; m < eligible.size(); ++m) {
                wins += "," + csv::format_double(wc.counts(static_cast<Eigen::Index>(g),
                                                           static_cast<Eigen::Index>(m)));
            }
            wins += "," + std::to_string(wc.ties[static_cast<Eigen::Index>(g)]) + "\n";
        }
    }
    csv::write_file(out_dir + "/win_counts.csv", wins);
    stats.files.push_back(out_dir + "/win_counts.csv");
    return stats;
}

namespace {

struct GroupOutputs {
    std::vector<PointTrack> points;
    std::vector<BandTrack> bands;
    std::vector<std::pair<Weekday, update::LambdaSchedule>> schedules;
    json meta;
    long clamped = 0;
};

void add_band_tracks(const PointTrack& pt, const intervals::ResidualStore& store,
                     const IntervalConfig& icfg, std::vector<BandTrack>& bands,
                     Warnings* warnings) {
    const intervals::ThetaOptions topts{icfg.theta_per_point, 0.01, 5.0};
    for (double alpha : icfg.levels) {
        const intervals::Calibration cal = intervals::calibrate(store, alpha, topts, warnings);
        for (intervals::Method method : icfg.methods) {
            BandTrack band;
            band.group = pt.group;
            band.model = pt.model;
            band.method = method;
            band.alpha = alpha;
            band.days = pt.days;
            band.sizes = pt.sizes;
            band.hours = pt.hours;
            for (const auto& fc : pt.forecast) {
                const auto pair = intervals::build_interval(fc, cal, method, alpha);
                band.lower.push_back(pair.lower);
                band.upper.push_back(pair.upper);
            }
            bands.push_back(std::move(band));
        }
    }
}

GroupOutputs run_group(const RunConfig& cfg, const RawSeries& raw, const std::string& name,
                       const Segmentation& seg, const std::string& out_dir,
                       Warnings& warnings) {
    GroupOutputs out;
    const FunctionalPanel pan = panel::segment(raw, seg, &warnings);
    const int n = pan.days();
    const int p = pan.points();
    const int S = pan.sizes();
    const eval::SplitPlan split = eval::SplitPlan::make(n);
    if (split.validation_days() < 2 || split.test_days() < 1) {
        throw data_error("group " + name + " has too few curves (" + std::to_string(n) +
                         ") for the 50/25/25 pipeline");
    }
    for (int m0 : cfg.update.cut_points) {
        if (m0 >= p) {
            throw config_error("cut point " + std::to_string(m0) +
                               " must be below the grid length " + std::to_string(p));
        }
    }
    out.meta = {{"days", n},
                {"points", p},
                {"sizes", S},
                {"train", split.train_days()},
                {"validation", split.validation_days()},
                {"test", split.test_days()}};
    panel::write_panel_csv(pan, out_dir + "/panels/panel_" + name + ".csv");

    std::vector<Eigen::MatrixXd> actual_all(n);
    for (int t = 0; t < n; ++t) {
        actual_all[t] = panel::inverse_transform(pan.day_matrix(t));
    }
    const int V = split.validation_days();
    const int T = split.test_days();

    // Point models: one expanding backtest covering validation and test.
    std::vector<std::pair<std::string, ModelSpec>> model_list;
    for (ModelKind kind : cfg.models) {
        model_list.emplace_back(
            to_string(kind),
            ModelSpec{kind, cfg.model.K, cfg.model.L, cfg.model.q, cfg.model.q_max});
    }
    for (const auto& [label, spec] : model_list) {
        const eval::BacktestResult bt = eval::expanding_window(
            pan,
            [&](const FunctionalPanel& sub) {
                return one_step_forecast(sub, spec, {}, nullptr, cfg.exec);
            },
            split.train_end, cfg.exec);
        std::vector<Eigen::MatrixXd> fc_counts(bt.forecasts.size());
        for (std::size_t i = 0; i < bt.forecasts.size(); ++i) {
            fc_counts[i] = panel::inverse_transform(bt.forecasts[i], &out.clamped);
        }

        intervals::ResidualStore store;
        store.residuals.assign(S, Eigen::MatrixXd(V, p));
        for (int v = 0; v < V; ++v) {
            const int day = split.train_end + v;
            for (int s = 0; s < S; ++s) {
                store.residuals[s].row(v) = actual_all[day].row(s) - fc_counts[v].row(s);
            }
        }

        PointTrack pt;
        pt.group = name;
        pt.model = label;
        pt.sizes = pan.size_labels;
        pt.hours = to_vector(pan.grid);
        for (int w = 0; w < T; ++w) {
            const int day = split.validation_end + w;
            pt.days.push_back(day);
            pt.actual.push_back(actual_all[day]);
            pt.forecast.push_back(fc_counts[day - split.train_end]);
        }

        const intervals::ThetaOptions topts{cfg.intervals.theta_per_point, 0.01, 5.0};
        const auto cal80 = intervals::calibrate(store, 0.2, topts, &warnings);
        const auto cal95 = intervals::calibrate(store, 0.05, topts, &warnings);
        intervals::write_calibration_csv(cal80, cal95, pan.size_labels, pan.grid,
                                         out_dir + "/calibration_" + name + "_" + label +
                                             ".csv");
        add_band_tracks(pt, store, cfg.intervals, out.bands, &warnings);
        out.points.push_back(std::move(pt));
    }

    // Dynamic updates on the training-block stacked basis.
    if (!cfg.update.methods.empty() && !cfg.update.cut_points.empty()) {
        const fpca::StackedBasis basis =
            fpca::fit_stacked(pan.first_days(split.train_end), cfg.update.N, &warnings);
        const int order = basis.order();

        Eigen::VectorXd tiled(static_cast<Eigen::Index>(S) * p);
        for (int s = 0; s < S; ++s) {
            tiled.segment(static_cast<Eigen::Index>(s) * p, p) = pan.quad_weights;
        }
        Eigen::MatrixXd scores(order, n);
        scores.leftCols(split.train_end) = basis.scores;
        for (int d = split.train_end; d < n; ++d) {
            scores.col(d) = basis.components.transpose() *
                            (tiled.asDiagonal() * (pan.stacked_day(d) - basis.mean));
        }
        const bool need_pls =
            std::find(cfg.update.methods.begin(), cfg.update.methods.end(),
                      update::PenaltyMethod::pls) != cfg.update.methods.end();
        Eigen::MatrixXd ts_all = Eigen::MatrixXd::Zero(order, n - split.train_end);
        if (need_pls) {
            for (int d = split.train_end; d < n; ++d) {
                for (int k = 0; k < order; ++k) {
                    const Eigen::VectorXd history = scores.row(k).head(d).transpose();
                    ts_all(k, d - split.train_end) = scorets::fit_forecast(history).forecast;
                }
            }
        }

        std::vector<Eigen::MatrixXd> size_basis(S);
        std::vector<Eigen::VectorXd> size_mean(S);
        for (int s = 0; s < S; ++s) {
            size_basis[s] = basis.size_block(s);
            size_mean[s] = basis.size_mean(s);
        }

        for (update::PenaltyMethod method : cfg.update.methods) {
            const update::LambdaSelection sel =
                update::select_lambda(pan, split.train_end, V, method, cfg.update.lambda_grid,
                                      cfg.update.N, &warnings, cfg.exec);
            if (cfg.mode == SegmentMode::weekday) {
                out.schedules.emplace_back(seg.weekday, sel.schedule);
            }
            for (int m0 : cfg.update.cut_points) {
                const double lambda = sel.schedule.at(m0);
                const std::string label =
                    update::to_string(method) + "@" + std::to_string(m0);

                std::vector<Eigen::MatrixXd> upd(n - split.train_end);
                for (int d = split.train_end; d < n; ++d) {
                    Eigen::MatrixXd fc_log(S, p - m0);
                    const Eigen::VectorXd ts =
                        need_pls ? Eigen::VectorXd(ts_all.col(d - split.train_end))
                                 : Eigen::VectorXd(Eigen::VectorXd::Zero(order));
                    for (int s = 0; s < S; ++s) {
                        update::UpdateProblem problem;
                        problem.basis = size_basis[s];
                        problem.mean = size_mean[s];
                        problem.observed = pan.values[s].row(d).head(m0).transpose();
                        problem.ts_scores = ts;
                        problem.lambda = lambda;
                        const update::UpdateResult res = method == update::PenaltyMethod::pls
                                                             ? update::pls_update(problem)
                                                             : update::ridge_update(problem);
                        fc_log.row(s) = res.forecast.transpose();
                    }
                    upd[d - split.train_end] = panel::inverse_transform(fc_log, &out.clamped);
                }

                intervals::ResidualStore store;
                store.residuals.assign(S, Eigen::MatrixXd(V, p - m0));
                for (int v = 0; v < V; ++v) {
                    const int day = split.train_end + v;
                    for (int s = 0; s < S; ++s) {
                        store.residuals[s].row(v) =
                            actual_all[day].row(s).tail(p - m0) - upd[v].row(s);
                    }
                }

                PointTrack pt;
                pt.group = name;
                pt.model = label;
                pt.sizes = pan.size_labels;
                pt.hours = std::vector<double>(pan.grid.data() + m0, pan.grid.data() + p);
                for (int w = 0; w < T; ++w) {
                    const int day = split.validation_end + w;
                    pt.days.push_back(day);
                    pt.actual.push_back(actual_all[day].rightCols(p - m0));
                    pt.forecast.push_back(upd[day - split.train_end]);
                }
                add_band_tracks(pt, store, cfg.intervals, out.bands, &warnings);
                out.points.push_back(std::move(pt));
            }
        }
    }

    // Block-moving benchmark, point forecasts only.
    if (cfg.update.block_moving) {
        const ModelSpec bm_spec{ModelKind::mlfts, cfg.model.K, cfg.model.L, cfg.model.q,
                                cfg.model.q_max};
        for (int m0 : cfg.update.cut_points) {
            PointTrack pt;
            pt.group = name;
            pt.model = "bm@" + std::to_string(m0);
            pt.sizes = pan.size_labels;
            pt.hours = std::vector<double>(pan.grid.data() + m0, pan.grid.data() + p);
            std::vector<Eigen::MatrixXd> fc(T);
            std::vector<std::exception_ptr> failures(T);
            const bool use_parallel = cfg.exec == Execution::parallel && T > 1;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(fpnsd::parallel::max_threads()) \
    if (use_parallel)
#endif
            for (int w = 0; w < T; ++w) {
                try {
                    const int day = split.validation_end + w;
                    const Eigen::MatrixXd partial = pan.day_matrix(day).leftCols(m0);
                    fc[w] = update::block_moving_forecast(pan.first_days(day), partial,
                                                          bm_spec, {}, nullptr,
                                                          Execution::serial);
                } catch (...) {
                    failures[w] = std::current_exception();
                }
            }
            for (int w = 0; w < T; ++w) {
                if (failures[w]) {
                    std::rethrow_exception(failures[w]);
                }
            }
            for (int w = 0; w < T; ++w) {
                const int day = split.validation_end + w;
                pt.days.push_back(day);
                pt.actual.push_back(actual_all[day].rightCols(p - m0));
                pt.forecast.push_back(panel::inverse_transform(fc[w], &out.clamped));
            }
            out.points.push_back(std::move(pt));
        }
    }
    return out;
}

}  // namespace

RunSummary run(const RunConfig& cfg) {
    if (cfg.input.empty()) {
        throw config_error("run config needs an input path");
    }
    if (cfg.intervals.levels.empty() || cfg.intervals.methods.empty()) {
        throw config_error("run config needs interval levels and methods");
    }
    if (cfg.models.empty()) {
        throw config_error("run config needs at least one model");
    }
    if (cfg.threads > 0) {
        parallel::set_max_threads(cfg.threads);
    }
    fs::create_directories(cfg.output_dir);
    fs::create_directories(cfg.output_dir + "/tracks");
    fs::create_directories(cfg.output_dir + "/panels");

    RunSummary sum;
    RawSeries raw = panel::read_raw_csv(cfg.input);
    const long input_rows = raw.rows();
    raw = panel::interpolate_missing(raw, &sum.warnings);

    std::vector<std::pair<std::string, Segmentation>> groups;
    if (cfg.mode == SegmentMode::weekday) {
        for (Weekday d : cfg.weekdays) {
            groups.emplace_back(to_string(d), Segmentation{SegmentMode::weekday, d});
        }
    } else {
        groups.emplace_back("all", Segmentation{cfg.mode, Weekday::mon});
    }

    std::vector<PointTrack> points;
    std::vector<BandTrack> bands;
    std::vector<std::pair<Weekday, update::LambdaSchedule>> schedules;
    json panels_meta = json::object();
    for (const auto& [name, seg] : groups) {
        GroupOutputs g = run_group(cfg, raw, name, seg, cfg.output_dir, sum.warnings);
        panels_meta[name] = g.meta;
        sum.clamped_forecasts += g.clamped;
        for (auto& t : g.points) {
            points.push_back(std::move(t));
        }
        for (auto& b : g.bands) {
            bands.push_back(std::move(b));
        }
        for (auto& s : g.schedules) {
            schedules.push_back(std::move(s));
        }
    }

    for (const auto& t : points) {
        const std::string path = cfg.output_dir + "/tracks/" + track_filename(t);
        write_point_track_csv(t, path);
        sum.outputs.push_back(path);
    }
    for (const auto& b : bands) {
        const std::string path = cfg.output_dir + "/tracks/" + track_filename(b);
        write_band_track_csv(b, path);
        sum.outputs.push_back(path);
    }
    if (cfg.mode == SegmentMode::weekday && !schedules.empty()) {
        const std::string path = cfg.output_dir + "/lambda_schedule.csv";
        update::write_schedule_csv(schedules, path);
        sum.outputs.push_back(path);
    }

    const ReportStats stats = write_reports(points, bands, cfg.output_dir);
    sum.excluded_cells = stats.excluded_cells;
    for (const auto& f : stats.files) {
        sum.outputs.push_back(f);
    }

    json manifest;
    manifest["config"] = json::parse(canonical_config(cfg));
    manifest["config_hash"] = config_hash(cfg);
    manifest["input_rows"] = input_rows;
    manifest["panels"] = panels_meta;
    manifest["clamped_forecast_cells"] = sum.clamped_forecasts;
    manifest["excluded_zero_cells"] = sum.excluded_cells;
    manifest["warnings"] = sum.warnings.messages;
    std::vector<std::string> rel;
    for (const auto& f : sum.outputs) {
        rel.push_back(fs::relative(f, cfg.output_dir).string());
    }
    std::sort(rel.begin(), rel.end());
    manifest["outputs"] = rel;
    sum.manifest_path = cfg.output_dir + "/manifest.json";
    csv::write_file(sum.manifest_path, manifest.dump(2) + "\n");
    return sum;
}

}  // namespace fpnsd::pipeline
