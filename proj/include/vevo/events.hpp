#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "vevo/market_data.hpp"

namespace vevo {

enum class EventClass { endogenous, exogenous };

struct Event {
    Eigen::Index row;      // row index into the MarketSeries
    std::int64_t minute;   // wall-clock minutes since epoch
    double volatility;
    EventClass cls = EventClass::endogenous;
};

struct EventSet {
    double threshold_s = 0.0;    // the multiplier S
    double mean_volatility = 0;  // sample mean the threshold is relative to
    std::vector<Event> events;   // in row order

    double threshold() const { return threshold_s * mean_volatility; }
};

/// How the sample-mean volatility entering the threshold is computed.
enum class MeanMode {
    pooled_minutes,  // mean over every minute observation
    daily_means,     // mean over per-day means
};

struct DetectOptions {
    MeanMode mean_mode = MeanMode::pooled_minutes;
    /// Suppress events within this many wall-clock minutes after a retained one.
    int exclusion_window = 0;
    /// Drop this many bars at each session edge from the mean computation.
    int trim_minutes = 0;
};

/// Flags every minute whose volatility exceeds S times the sample mean.
EventSet detect_events(const MarketSeries& series, double threshold_s,
                       const DetectOptions& options = {});

/// Marks events with a news release within one minute as exogenous,
/// the rest as endogenous. `news_minutes` must be sorted ascending.
EventSet classify_events(const EventSet& events, const std::vector<std::int64_t>& news_minutes);

enum class ClassFilter { all, endogenous, exogenous };

/// Event-aligned ensemble averages indexed by lag t = 1..horizon.
/// Entry t-1 of each array corresponds to lag t; mean_volatility and
/// mean_log_volume are NaN at lags with no observations.
struct ResponseCurve {
    int horizon = 0;
    Eigen::VectorXd mean_volatility;
    Eigen::VectorXd mean_log_volume;
    Eigen::VectorXi n_contributing;  // events whose trading day still covers the lag
};

ResponseCurve build_response(const MarketSeries& series, const EventSet& events, int horizon,
                             ClassFilter filter);

}  // namespace vevo
