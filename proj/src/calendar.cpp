#include "vevo/calendar.hpp"

#include <cstdio>

#include "vevo/common.hpp"

namespace vevo {

SessionCalendar::SessionCalendar(std::vector<Session> sessions) : sessions_(std::move(sessions)) {
    if (sessions_.empty()) throw ValidationError("calendar: no sessions given");
    int prev_close = -1;
    for (const auto& s : sessions_) {
        if (s.open < 0 || s.close >= kMinutesPerDay || s.open > s.close)
            throw ValidationError("calendar: session bounds out of range");
        if (s.open <= prev_close)
            throw ValidationError("calendar: sessions overlap or are out of order");
        prev_close = s.close;
        minutes_per_day_ += s.close - s.open + 1;
    }
}

namespace {

int parse_hhmm(const std::string& text, std::size_t pos) {
    if (pos + 5 > text.size() || text[pos + 2] != ':')
        throw ValidationError("calendar: expected HH:MM in '" + text + "'");
    for (std::size_t i : {pos, pos + 1, pos + 3, pos + 4})
        if (text[i] < '0' || text[i] > '9')
            throw ValidationError("calendar: expected HH:MM in '" + text + "'");
    int h = (text[pos] - '0') * 10 + (text[pos + 1] - '0');
    int m = (text[pos + 3] - '0') * 10 + (text[pos + 4] - '0');
    if (h > 23 || m > 59) throw ValidationError("calendar: time of day out of range in '" + text + "'");
    return h * 60 + m;
}

}  // namespace

SessionCalendar SessionCalendar::parse(const std::vector<std::string>& specs) {
    std::vector<Session> sessions;
    for (const auto& spec : specs) {
        if (spec.size() != 11 || spec[5] != '-')
            throw ValidationError("calendar: expected 'HH:MM-HH:MM', got '" + spec + "'");
        sessions.push_back({parse_hhmm(spec, 0), parse_hhmm(spec, 6)});
    }
    return SessionCalendar(std::move(sessions));
}

SessionCalendar SessionCalendar::sse() {
    return SessionCalendar({{9 * 60 + 30, 11 * 60 + 30}, {13 * 60, 15 * 60}});
}

int SessionCalendar::session_of(int minute_of_day) const {
    for (std::size_t i = 0; i < sessions_.size(); ++i)
        if (minute_of_day >= sessions_[i].open && minute_of_day <= sessions_[i].close)
            return static_cast<int>(i);
    return -1;
}

int SessionCalendar::position_in_session(int minute_of_day, int session) const {
    return minute_of_day - sessions_[static_cast<std::size_t>(session)].open + 1;
}

namespace {

// Howard Hinnant's civil-date algorithms; valid over the full int range.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

bool all_digits(const std::string& s, std::initializer_list<std::size_t> idx) {
    for (std::size_t i : idx)
        if (s[i] < '0' || s[i] > '9') return false;
    return true;
}

int days_in_month(int y, int m) {
    static constexpr int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && (y % 4 == 0 && (y % 100 != 0 || y % 400 == 0))) return 29;
    return lengths[m - 1];
}

}  // namespace

std::int64_t minutes_from_timestamp(const std::string& stamp) {
    // YYYY-MM-DDTHH:MM, fixed width
    if (stamp.size() != 16 || stamp[4] != '-' || stamp[7] != '-' || stamp[10] != 'T' || stamp[13] != ':' ||
        !all_digits(stamp, {0, 1, 2, 3, 5, 6, 8, 9, 11, 12, 14, 15}))
        throw ValidationError("timestamp '" + stamp + "' is not YYYY-MM-DDTHH:MM");
    int y = std::stoi(stamp.substr(0, 4));
    int mo = std::stoi(stamp.substr(5, 2));
    int d = std::stoi(stamp.substr(8, 2));
    int h = std::stoi(stamp.substr(11, 2));
    int mi = std::stoi(stamp.substr(14, 2));
    if (mo < 1 || mo > 12 || d < 1 || h > 23 || mi > 59 || d > days_in_month(y, mo))
        throw ValidationError("timestamp '" + stamp + "' has out-of-range fields");
    return days_from_civil(y, mo, d) * kMinutesPerDay + h * 60 + mi;
}

std::string timestamp_from_minutes(std::int64_t minutes) {
    std::int64_t day = minutes >= 0 ? minutes / kMinutesPerDay
                                    : (minutes - (kMinutesPerDay - 1)) / kMinutesPerDay;
    int mod = static_cast<int>(minutes - day * kMinutesPerDay);
    int y, m, d;
    civil_from_days(day, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d", y, m, d, mod / 60, mod % 60);
    return buf;
}

}  // namespace vevo
