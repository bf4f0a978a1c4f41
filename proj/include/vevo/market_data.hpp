#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vevo/calendar.hpp"

namespace vevo {

/// Minute-bar series with derived log-returns, volatility and log-volume.
///
/// log_return[i] is ln(price[i+1]/price[i]) and is NaN when row i+1 does not
/// exist or lies in a different session or day (no return spans a gap).
/// volatility[i] = |log_return[i]|. log_volume[i] is NaN where volume == 0.
struct MarketSeries {
    SessionCalendar calendar;
    std::vector<std::int64_t> minute;  // minutes since epoch, strictly increasing
    Eigen::VectorXd price;
    Eigen::VectorXd log_return;
    Eigen::VectorXd volatility;
    Eigen::VectorXd log_volume;
    std::vector<std::int32_t> day_ordinal;   // index into day_ranges
    std::vector<std::int8_t> session;        // session index within the day
    std::vector<std::int32_t> session_pos;   // 1-based wall-clock offset in session
    std::vector<std::pair<Eigen::Index, Eigen::Index>> day_ranges;  // [begin, end) rows per day

    Eigen::Index rows() const { return price.size(); }
    bool has_return(Eigen::Index i) const { return !std::isnan(log_return[i]); }
    bool has_log_volume(Eigen::Index i) const { return !std::isnan(log_volume[i]); }
    std::pair<Eigen::Index, Eigen::Index> day_range_of_row(Eigen::Index i) const {
        return day_ranges[static_cast<std::size_t>(day_ordinal[static_cast<std::size_t>(i)])];
    }
};

/// Log-returns of a positive price sequence: out[i] = ln(p[i+1]) - ln(p[i]).
Eigen::VectorXd compute_returns(const Eigen::VectorXd& prices);

/// Assembles a MarketSeries from raw columns, deriving returns, volatility,
/// log-volume and the (day, session, position) tagging.
MarketSeries build_series(std::vector<std::int64_t> minutes, Eigen::VectorXd prices,
                          const Eigen::VectorXd& volumes, const SessionCalendar& calendar);

/// Loads the `timestamp,price,volume` CSV described in the README.
MarketSeries load_series(const std::string& path, const SessionCalendar& calendar);

/// Loads a news CSV (header `timestamp`) into sorted minutes since epoch.
std::vector<std::int64_t> load_news_minutes(const std::string& path);

}  // namespace vevo
