#include "vevo/events.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vevo/common.hpp"

namespace vevo {

namespace {

bool trimmed_away(const MarketSeries& s, Eigen::Index i, int trim) {
    if (trim <= 0) return false;
    const std::size_t u = static_cast<std::size_t>(i);
    const auto& sess = s.calendar.sessions()[static_cast<std::size_t>(s.session[u])];
    const int len = sess.close - sess.open + 1;
    const int pos = s.session_pos[u];
    return pos <= trim || pos > len - trim;
}

double sample_mean_volatility(const MarketSeries& s, const DetectOptions& opt) {
    if (opt.mean_mode == MeanMode::pooled_minutes) {
        double sum = 0.0;
        Eigen::Index count = 0;
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
            if (!s.has_return(i) || trimmed_away(s, i, opt.trim_minutes)) continue;
            sum += s.volatility[i];
            ++count;
        }
        if (count == 0) throw InsufficientDataError("detect_events: no volatility observations");
        return sum / static_cast<double>(count);
    }
    double day_sum = 0.0;
    Eigen::Index day_count = 0;
    for (const auto& [begin, end] : s.day_ranges) {
        double sum = 0.0;
        Eigen::Index count = 0;
        for (Eigen::Index i = begin; i < end; ++i) {
            if (!s.has_return(i) || trimmed_away(s, i, opt.trim_minutes)) continue;
            sum += s.volatility[i];
            ++count;
        }
        if (count == 0) continue;
        day_sum += sum / static_cast<double>(count);
        ++day_count;
    }
    if (day_count == 0) throw InsufficientDataError("detect_events: no volatility observations");
    return day_sum / static_cast<double>(day_count);
}

}  // namespace

EventSet detect_events(const MarketSeries& series, double threshold_s, const DetectOptions& options) {
    if (!(threshold_s > 0.0)) throw ValidationError("detect_events: threshold S must be positive");
    if (series.rows() == 0) throw InsufficientDataError("detect_events: empty series");

    EventSet result;
    result.threshold_s = threshold_s;
    result.mean_volatility = sample_mean_volatility(series, options);
    if (!(result.mean_volatility > 0.0))
        throw ValidationError(
            "detect_events: sample mean volatility is zero (constant prices?); the threshold "
            "S*<V> cannot separate events");

    const double cut = threshold_s * result.mean_volatility;
    std::int64_t last_kept = std::numeric_limits<std::int64_t>::min();
    for (Eigen::Index i = 0; i < series.rows(); ++i) {
        if (!series.has_return(i) || !(series.volatility[i] > cut)) continue;
        const std::int64_t m = series.minute[static_cast<std::size_t>(i)];
        if (options.exclusion_window > 0 && last_kept != std::numeric_limits<std::int64_t>::min() &&
            m - last_kept <= options.exclusion_window)
            continue;
        result.events.push_back({i, m, series.volatility[i], EventClass::endogenous});
        last_kept = m;
    }
    return result;
}

EventSet classify_events(const EventSet& events, const std::vector<std::int64_t>& news_minutes) {
    EventSet out = events;
    for (auto& ev : out.events) {
        auto it = std::lower_bound(news_minutes.begin(), news_minutes.end(), ev.minute - 1);
        const bool near_news = it != news_minutes.end() && *it <= ev.minute + 1;
        ev.cls = near_news ? EventClass::exogenous : EventClass::endogenous;
    }
    return out;
}

ResponseCurve build_response(const MarketSeries& series, const EventSet& events, int horizon,
                             ClassFilter filter) {
    if (horizon < 1) throw ValidationError("build_response: horizon must be >= 1");

    ResponseCurve curve;
    curve.horizon = horizon;
    curve.mean_volatility.setZero(horizon);
    curve.mean_log_volume.setZero(horizon);
    curve.n_contributing.setZero(horizon);
    Eigen::VectorXi vol_count = Eigen::VectorXi::Zero(horizon);
    Eigen::VectorXi volume_count = Eigen::VectorXi::Zero(horizon);

    Eigen::Index used = 0;
    for (const auto& ev : events.events) {
        if (filter == ClassFilter::endogenous && ev.cls != EventClass::endogenous) continue;
        if (filter == ClassFilter::exogenous && ev.cls != EventClass::exogenous) continue;
        ++used;
        const auto [day_begin, day_end] = series.day_range_of_row(ev.row);
        (void)day_begin;
        for (int t = 1; t <= horizon; ++t) {
            const Eigen::Index row = ev.row + t;
            if (row >= day_end) break;  // lags never cross the day boundary
            curve.n_contributing[t - 1] += 1;
            if (series.has_return(row)) {
                curve.mean_volatility[t - 1] += series.volatility[row];
                vol_count[t - 1] += 1;
            }
            if (series.has_log_volume(row)) {
                curve.mean_log_volume[t - 1] += series.log_volume[row];
                volume_count[t - 1] += 1;
            }
        }
    }
    if (used == 0) throw InsufficientDataError("build_response: no events pass the class filter");

    for (int t = 0; t < horizon; ++t) {
        curve.mean_volatility[t] = vol_count[t] > 0
                                       ? curve.mean_volatility[t] / vol_count[t]
                                       : std::numeric_limits<double>::quiet_NaN();
        curve.mean_log_volume[t] = volume_count[t] > 0
                                       ? curve.mean_log_volume[t] / volume_count[t]
                                       : std::numeric_limits<double>::quiet_NaN();
    }
    return curve;
}

}  // namespace vevo
