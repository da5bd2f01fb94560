#include "fpnsd/common.hpp"

#include <array>

namespace fpnsd {

namespace {
constexpr std::array<const char*, 7> kWeekdayNames = {
    "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"};
}

std::string to_string(Weekday d) {
    return kWeekdayNames.at(static_cast<std::size_t>(d));
}

Weekday parse_weekday(const std::string& name) {
    std::string lower;
    lower.reserve(name.size());
    for (char c : name) {
        lower.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    }
    for (std::size_t i = 0; i < kWeekdayNames.size(); ++i) {
        const std::string full = kWeekdayNames[i];
        if (lower == full || (lower.size() == 3 && full.compare(0, 3, lower) == 0)) {
            return static_cast<Weekday>(i);
        }
    }
    throw config_error("unknown weekday: " + name);
}

}  // namespace fpnsd
