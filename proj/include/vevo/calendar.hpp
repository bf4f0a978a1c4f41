#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vevo {

inline constexpr std::int64_t kMinutesPerDay = 1440;

/// One trading session as a closed wall-clock interval [open, close],
/// in minutes of day. A bar stamped at the close minute belongs to the session.
struct Session {
    int open = 0;
    int close = 0;
};

class SessionCalendar {
public:
    SessionCalendar() = default;
    explicit SessionCalendar(std::vector<Session> sessions);

    /// Parse specs of the form "HH:MM-HH:MM", e.g. {"09:30-11:30", "13:00-15:00"}.
    static SessionCalendar parse(const std::vector<std::string>& specs);

    /// Default Shanghai-style calendar: 09:30-11:30 and 13:00-15:00.
    static SessionCalendar sse();

    /// Session index containing the given minute of day, or -1.
    int session_of(int minute_of_day) const;

    /// 1-based offset of the minute within its session. Requires containment.
    int position_in_session(int minute_of_day, int session) const;

    int minutes_per_day() const { return minutes_per_day_; }
    const std::vector<Session>& sessions() const { return sessions_; }

private:
    std::vector<Session> sessions_;
    int minutes_per_day_ = 0;
};

/// Minutes since 1970-01-01T00:00 for a "YYYY-MM-DDTHH:MM" stamp.
std::int64_t minutes_from_timestamp(const std::string& stamp);

std::string timestamp_from_minutes(std::int64_t minutes);

}  // namespace vevo
