#include "edhorizon/types.hpp"

#include <cctype>
#include <cstdio>

namespace edhorizon {

const char* to_string(EventType t) {
    return t == EventType::attempt ? "attempt" : "complete";
}

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::success: return "success";
        case Outcome::fail: return "fail";
        default: return "none";
    }
}

std::optional<EventType> event_type_from_string(const std::string& s) {
    if (s == "attempt") return EventType::attempt;
    if (s == "complete") return EventType::complete;
    return std::nullopt;
}

std::optional<Outcome> outcome_from_string(const std::string& s) {
    if (s == "success") return Outcome::success;
    if (s == "fail") return Outcome::fail;
    if (s == "none") return Outcome::none;
    return std::nullopt;
}

namespace {

// Howard Hinnant's civil-days algorithms.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yy + (m <= 2));
}

bool all_digits(const std::string& s, std::size_t pos, std::size_t n) {
    if (pos + n > s.size()) return false;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[pos + i]))) return false;
    }
    return true;
}

int read_int(const std::string& s, std::size_t pos, std::size_t n) {
    int v = 0;
    for (std::size_t i = 0; i < n; ++i) v = v * 10 + (s[pos + i] - '0');
    return v;
}

} // namespace

std::optional<std::int64_t> parse_iso8601_utc(const std::string& s) {
    // YYYY-MM-DD[T ]HH:MM:SS[.frac][Z|+00:00|-00:00]
    if (s.size() < 19) return std::nullopt;
    if (!all_digits(s, 0, 4) || s[4] != '-' || !all_digits(s, 5, 2) || s[7] != '-' ||
        !all_digits(s, 8, 2))
        return std::nullopt;
    if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
    if (!all_digits(s, 11, 2) || s[13] != ':' || !all_digits(s, 14, 2) || s[16] != ':' ||
        !all_digits(s, 17, 2))
        return std::nullopt;

    const int year = read_int(s, 0, 4);
    const int month = read_int(s, 5, 2);
    const int day = read_int(s, 8, 2);
    const int hour = read_int(s, 11, 2);
    const int minute = read_int(s, 14, 2);
    const int second = read_int(s, 17, 2);
    if (month < 1 || month > 12 || day < 1 || day > 31) return std::nullopt;
    if (hour > 23 || minute > 59 || second > 60) return std::nullopt;

    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        std::size_t digits = 0;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
            ++pos;
            ++digits;
        }
        if (digits == 0) return std::nullopt;
    }
    if (pos < s.size()) {
        const std::string tail = s.substr(pos);
        if (tail != "Z" && tail != "+00:00" && tail != "-00:00" && tail != "+0000")
            return std::nullopt;
    }

    const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month),
                                              static_cast<unsigned>(day));
    return days * 86400 + hour * 3600 + minute * 60 + second;
}

std::string format_iso8601_utc(std::int64_t epoch_s) {
    std::int64_t days = epoch_s / 86400;
    std::int64_t rem = epoch_s % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    int y = 0;
    unsigned m = 0, d = 0;
    civil_from_days(days, y, m, d);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", y, m, d,
                  static_cast<long long>(rem / 3600), static_cast<long long>((rem % 3600) / 60),
                  static_cast<long long>(rem % 60));
    return std::string(buf);
}

} // namespace edhorizon
