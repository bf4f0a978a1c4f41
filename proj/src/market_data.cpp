#include "vevo/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vevo/common.hpp"
#include "vevo/csv.hpp"

namespace vevo {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

Eigen::VectorXd compute_returns(const Eigen::VectorXd& prices) {
    if (prices.size() < 1) return Eigen::VectorXd();
    for (Eigen::Index i = 0; i < prices.size(); ++i)
        if (!(prices[i] > 0.0))
            throw ValidationError("compute_returns: non-positive price at index " + std::to_string(i));
    Eigen::VectorXd out(prices.size() - 1);
    for (Eigen::Index i = 0; i + 1 < prices.size(); ++i)
        out[i] = std::log(prices[i + 1]) - std::log(prices[i]);
    return out;
}

MarketSeries build_series(std::vector<std::int64_t> minutes, Eigen::VectorXd prices,
                          const Eigen::VectorXd& volumes, const SessionCalendar& calendar) {
    const auto n = static_cast<Eigen::Index>(minutes.size());
    if (prices.size() != n || volumes.size() != n)
        throw ValidationError("build_series: column lengths differ");
    if (n == 0) throw InsufficientDataError("build_series: empty series");

    MarketSeries s;
    s.calendar = calendar;
    s.minute = std::move(minutes);
    s.price = std::move(prices);
    s.log_return.setConstant(n, kNaN);
    s.volatility.setConstant(n, kNaN);
    s.log_volume.setConstant(n, kNaN);
    s.day_ordinal.resize(static_cast<std::size_t>(n));
    s.session.resize(static_cast<std::size_t>(n));
    s.session_pos.resize(static_cast<std::size_t>(n));

    std::int64_t prev_minute = std::numeric_limits<std::int64_t>::min();
    std::int64_t current_day = std::numeric_limits<std::int64_t>::min();
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t u = static_cast<std::size_t>(i);
        const std::int64_t m = s.minute[u];
        if (m <= prev_minute)
            throw ValidationError("build_series: non-monotone timestamp at row " + std::to_string(i) +
                                  " (" + timestamp_from_minutes(m) + ")");
        prev_minute = m;
        if (!(s.price[i] > 0.0))
            throw ValidationError("build_series: non-positive price at row " + std::to_string(i));
        if (volumes[i] < 0.0)
            throw ValidationError("build_series: negative volume at row " + std::to_string(i));

        const std::int64_t day = m / kMinutesPerDay;
        const int mod = static_cast<int>(m % kMinutesPerDay);
        const int sess = calendar.session_of(mod);
        if (sess < 0)
            throw ValidationError("build_series: row " + std::to_string(i) + " (" +
                                  timestamp_from_minutes(m) + ") falls outside all trading sessions");
        if (day != current_day) {
            current_day = day;
            s.day_ranges.emplace_back(i, i);
        }
        s.day_ranges.back().second = i + 1;
        s.day_ordinal[u] = static_cast<std::int32_t>(s.day_ranges.size() - 1);
        s.session[u] = static_cast<std::int8_t>(sess);
        s.session_pos[u] = calendar.position_in_session(mod, sess);
        if (volumes[i] > 0.0) s.log_volume[i] = std::log(volumes[i]);
    }

    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const std::size_t u = static_cast<std::size_t>(i);
        // returns never span a day or session gap
        if (s.day_ordinal[u] != s.day_ordinal[u + 1] || s.session[u] != s.session[u + 1]) continue;
        s.log_return[i] = std::log(s.price[i + 1]) - std::log(s.price[i]);
        s.volatility[i] = std::fabs(s.log_return[i]);
    }
    return s;
}

MarketSeries load_series(const std::string& path, const SessionCalendar& calendar) {
    csv::Reader reader(path);
    reader.expect_header("timestamp,price,volume");

    std::vector<std::int64_t> minutes;
    std::vector<double> prices, volumes;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        if (fields.size() != 3)
            throw ValidationError(path + ":" + std::to_string(reader.line_number()) +
                                  ": expected 3 fields, got " + std::to_string(fields.size()));
        std::int64_t m;
        try {
            m = minutes_from_timestamp(fields[0]);
        } catch (const ValidationError& e) {
            throw ValidationError(path + ":" + std::to_string(reader.line_number()) + ": " + e.what());
        }
        const double p = csv::parse_double(fields[1], path, reader.line_number());
        const std::int64_t v = csv::parse_int(fields[2], path, reader.line_number());
        if (!(p > 0.0))
            throw ValidationError(path + ":" + std::to_string(reader.line_number()) +
                                  ": price must be positive");
        if (v < 0)
            throw ValidationError(path + ":" + std::to_string(reader.line_number()) +
                                  ": volume must be non-negative");
        minutes.push_back(m);
        prices.push_back(p);
        volumes.push_back(static_cast<double>(v));
    }
    if (minutes.empty()) throw InsufficientDataError(path + ": no data rows");

    try {
        return build_series(std::move(minutes),
                            Eigen::Map<Eigen::VectorXd>(prices.data(), static_cast<Eigen::Index>(prices.size())),
                            Eigen::Map<Eigen::VectorXd>(volumes.data(), static_cast<Eigen::Index>(volumes.size())),
                            calendar);
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

std::vector<std::int64_t> load_news_minutes(const std::string& path) {
    csv::Reader reader(path);
    reader.expect_header("timestamp");
    std::vector<std::int64_t> minutes;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        if (fields.size() != 1)
            throw ValidationError(path + ":" + std::to_string(reader.line_number()) +
                                  ": expected 1 field");
        try {
            minutes.push_back(minutes_from_timestamp(fields[0]));
        } catch (const ValidationError& e) {
            throw ValidationError(path + ":" + std::to_string(reader.line_number()) + ": " + e.what());
        }
    }
    std::sort(minutes.begin(), minutes.end());
    return minutes;
}

}  // namespace vevo
