#pragma once

#include <cstdint>
#include <vector>

#include "vevo/events.hpp"
#include "vevo/market_data.hpp"
#include "vevo/ve_model.hpp"

namespace vevo {

/// Synthetic minute-bar market: baseline noise volatility plus impulses whose
/// post-event mean volatility follows the two-stage decay, half of them
/// synchronized with a generated news feed.
struct SyntheticConfig {
    int days = 250;
    SessionCalendar calendar;  // default-constructed means SSE sessions
    std::int64_t first_day = 16804;  // day ordinal of 2016-01-04

    double base_volatility = 2e-4;  // mean |return| on quiet minutes
    int n_events = 50;
    double news_fraction = 0.5;     // leading fraction of events gets a news stamp
    VEParams impulse{10, 1.0e-3, 0.45, 2.5, 1.2e-3, 0.10, 0.0};
    double spike_multiple = 12.0;   // event-minute |return| in units of base_volatility
    int impulse_horizon = 240;
    /// Fraction of the post-event amplitude that is deterministic; the rest
    /// is |N(0,1)| scaled to keep the mean at the model curve.
    double noise_damping = 0.6;

    double base_log_volume = 11.5;
    double volume_u_shape = 0.6;    // intraday U amplitude in log-volume units
    double volume_ar = 0.3;         // AR(1) coefficient of the detrended part
    double volume_noise = 0.25;     // innovation standard deviation
    double volume_coupling = 0.08;  // log-volume response to relative volatility

    std::uint64_t seed = 42;

    /// Detection settings the generator is calibrated for. The exclusion
    /// window spans a full trading day so post-event echoes are suppressed.
    double calibrated_threshold = 6.0;
    int recommended_exclusion = 400;  // wall-clock minutes
};

struct SyntheticMarket {
    MarketSeries series;
    std::vector<std::int64_t> news_minutes;
    std::vector<std::int64_t> event_minutes;      // injected, in time order
    std::vector<EventClass> event_classes;        // truth per injected event
    SyntheticConfig config;
};

SyntheticMarket generate_market(SyntheticConfig config);

}  // namespace vevo
