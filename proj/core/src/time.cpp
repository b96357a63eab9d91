#include "posture/time.hpp"

#include <charconv>
#include <cstdio>

namespace posture {
namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        const char c = s[i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view s) {
    // YYYY-MM-DDTHH:MM:SS[.f{1,3}]
    int y, mo, d, h, mi, sec;
    if (s.size() < 19) return std::nullopt;
    if (!read_int(s, 0, 4, y) || s[4] != '-' || !read_int(s, 5, 2, mo) || s[7] != '-' || !read_int(s, 8, 2, d) ||
        (s[10] != 'T' && s[10] != ' ') || !read_int(s, 11, 2, h) || s[13] != ':' || !read_int(s, 14, 2, mi) ||
        s[16] != ':' || !read_int(s, 17, 2, sec)) {
        return std::nullopt;
    }
    int ms = 0;
    if (s.size() > 19) {
        if (s[19] != '.') return std::nullopt;
        const std::size_t digits = s.size() - 20;
        if (digits == 0 || digits > 3 || !read_int(s, 20, digits, ms)) return std::nullopt;
        for (std::size_t i = digits; i < 3; ++i) ms *= 10;
    }
    if (h > 23 || mi > 59 || sec > 59) return std::nullopt;

    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec} + milliseconds{ms};
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const auto ms = (t - day).count();
    char buf[96];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lld", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(ms / 3600000), static_cast<long long>(ms / 60000 % 60),
                  static_cast<long long>(ms / 1000 % 60), static_cast<long long>(ms % 1000));
    return buf;
}

Millis time_of_day(Timestamp t) {
    return t - std::chrono::floor<std::chrono::days>(t);
}

std::optional<Millis> parse_time_of_day(std::string_view s) {
    int h, m, sec = 0;
    if (!read_int(s, 0, 2, h) || s.size() < 5 || s[2] != ':' || !read_int(s, 3, 2, m)) return std::nullopt;
    if (s.size() == 8) {
        if (s[5] != ':' || !read_int(s, 6, 2, sec)) return std::nullopt;
    } else if (s.size() != 5) {
        return std::nullopt;
    }
    // 24:00 is allowed as an end-of-day bound.
    if (m > 59 || sec > 59 || h > 24 || (h == 24 && (m || sec))) return std::nullopt;
    return std::chrono::hours(h) + std::chrono::minutes(m) + std::chrono::seconds(sec);
}

}  // namespace posture
