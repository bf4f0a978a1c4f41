#include "vevo/synthetic.hpp"

#include <cmath>

#include "vevo/common.hpp"
#include "vevo/rng.hpp"

namespace vevo {

namespace {
constexpr double kHalfPiSqrt = 1.2533141373155003;  // sqrt(pi/2), so E|N| * sqrt(pi/2) = 1
}

SyntheticMarket generate_market(SyntheticConfig config) {
    if (config.calendar.sessions().empty()) config.calendar = SessionCalendar::sse();
    if (config.days < 1) throw ValidationError("generate_market: days must be positive");
    if (config.n_events < 0) throw ValidationError("generate_market: n_events must be >= 0");
    if (config.n_events > 0 && config.days < config.n_events)
        throw ValidationError("generate_market: need at least one day per event");
    if (config.noise_damping < 0.0 || config.noise_damping > 1.0)
        throw ValidationError("generate_market: noise_damping must lie in [0, 1]");

    // row grid: every admissible session minute of every day
    std::vector<std::int64_t> minutes;
    for (int d = 0; d < config.days; ++d) {
        const std::int64_t base = (config.first_day + d) * kMinutesPerDay;
        for (const auto& sess : config.calendar.sessions())
            for (int m = sess.open; m <= sess.close; ++m) minutes.push_back(base + m);
    }
    const std::size_t n = minutes.size();
    const std::size_t rows_per_day = n / static_cast<std::size_t>(config.days);

    CounterRng rng(config.seed, 0);
    const double alpha = config.noise_damping;
    auto magnitude = [&](double scale) {
        return scale * (alpha + (1.0 - alpha) * std::fabs(rng.next_normal()) * kHalfPiSqrt);
    };
    auto sign = [&] { return rng.next_u64() & 1 ? 1.0 : -1.0; };

    // per-row target |return|; entry i is the move between rows i and i+1
    std::vector<double> ret(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) ret[i] = sign() * magnitude(config.base_volatility);

    SyntheticMarket out;
    const int day_stride = config.n_events > 0 ? config.days / config.n_events : 1;
    for (int j = 0; j < config.n_events; ++j) {
        // second bar of the day, leaving room for a full in-day response
        const std::size_t row = static_cast<std::size_t>(j * day_stride) * rows_per_day + 1;
        const std::size_t day_end = (static_cast<std::size_t>(j * day_stride) + 1) * rows_per_day;
        ret[row] = sign() * config.spike_multiple * config.base_volatility;
        for (int lag = 1; lag <= config.impulse_horizon; ++lag) {
            const std::size_t r = row + static_cast<std::size_t>(lag);
            if (r >= day_end || r + 1 >= n) break;
            ret[r] = sign() * magnitude(ve_mean(config.impulse, static_cast<double>(lag)));
        }
        out.event_minutes.push_back(minutes[row]);
        // spread the news-synchronized share evenly over the event sequence
        const bool with_news = std::floor((j + 1) * config.news_fraction) -
                                   std::floor(j * config.news_fraction) >=
                               1.0;
        out.event_classes.push_back(with_news ? EventClass::exogenous : EventClass::endogenous);
        if (with_news) out.news_minutes.push_back(minutes[row]);
    }

    Eigen::VectorXd price(static_cast<Eigen::Index>(n));
    price[0] = 100.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
        price[static_cast<Eigen::Index>(i) + 1] = price[static_cast<Eigen::Index>(i)] * std::exp(ret[i]);

    // log-volume: per-session U shape + AR(1) + coupling to relative volatility
    Eigen::VectorXd volume(static_cast<Eigen::Index>(n));
    double ar_state = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int mod = static_cast<int>(minutes[i] % kMinutesPerDay);
        const int sess = config.calendar.session_of(mod);
        const auto& s = config.calendar.sessions()[static_cast<std::size_t>(sess)];
        const double half = std::max(1.0, (s.close - s.open) / 2.0);
        const double x = (mod - s.open - half) / half;  // -1 at open, +1 at close
        ar_state = config.volume_ar * ar_state + config.volume_noise * rng.next_normal();
        const double rel_vol = std::min(ret[i] != 0.0 ? std::fabs(ret[i]) / config.base_volatility : 0.0, 20.0);
        const double lv = config.base_log_volume + config.volume_u_shape * x * x + ar_state +
                          config.volume_coupling * (rel_vol - 1.0);
        volume[static_cast<Eigen::Index>(i)] = std::max(1.0, std::round(std::exp(lv)));
    }

    out.series = build_series(std::move(minutes), std::move(price), volume, config.calendar);
    out.config = config;
    return out;
}

}  // namespace vevo
