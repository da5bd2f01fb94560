#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fpnsd {

// Error taxonomy mirrors the CLI exit codes: config 2, data 3, numeric 4.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class data_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Execution { serial, parallel };

// ISO ordering, Monday first.
enum class Weekday : int { mon = 0, tue, wed, thu, fri, sat, sun };

std::string to_string(Weekday d);
Weekday parse_weekday(const std::string& name);

// Collector for non-fatal diagnostics surfaced in run manifests.
struct Warnings {
    std::vector<std::string> messages;

    void add(std::string msg) { messages.push_back(std::move(msg)); }
    bool empty() const { return messages.empty(); }
};

inline void warn(Warnings* sink, std::string msg) {
    if (sink != nullptr) {
        sink->add(std::move(msg));
    }
}

}  // namespace fpnsd
