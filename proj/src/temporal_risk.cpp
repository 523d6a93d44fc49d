#include "trtm/temporal_risk.hpp"

#include "trtm/text_format.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace trtm {

Horizon Horizon::half_life(double days) {
    if (!(days > 0.0) || !std::isfinite(days))
        throw std::invalid_argument("half-life must be a positive number of days");
    return Horizon{days};
}

double Horizon::alpha() const noexcept {
    return days_ ? std::numbers::ln2 / *days_ : 0.0;
}

// 2^(-age/T) == exp(-alpha * age); the base-2 form is exact at whole multiples of T.
double Horizon::decay(double age_days) const noexcept {
    if (!days_)
        return 1.0;
    return std::exp2(-age_days / *days_);
}

double alpha_from_half_life(double half_life_days) {
    return Horizon::half_life(half_life_days).alpha();
}

double event_age_days(const ChangeEvent& event, std::int64_t reference_time) noexcept {
    return static_cast<double>(reference_time - event.timestamp) / kSecondsPerDay;
}

double event_weight(const ChangeEvent& event, ChangeMetric metric) noexcept {
    switch (metric) {
    case ChangeMetric::Frequency:
        return 1.0;
    case ChangeMetric::Extent:
        return std::log1p(static_cast<double>(event.churn()));
    }
    return 0.0;
}

ClassRisk class_risk(const ClassHistory& history, const RiskConfig& cfg) {
    double sum = 0.0;
    for (const auto& ev : history.events) {
        const double age = event_age_days(ev, cfg.reference_time);
        if (age < 0.0)
            continue;
        sum += event_weight(ev, cfg.metric) * cfg.horizon.decay(age);
    }
    return ClassRisk{history.class_id, sum};
}

RiskTable risk_table(const HistoryMap& histories, const RiskConfig& cfg) {
    RiskTable table;
    for (const auto& [id, h] : histories)
        table.emplace_hint(table.end(), id, class_risk(h, cfg));
    return table;
}

std::string to_string(ChangeMetric metric) {
    return metric == ChangeMetric::Frequency ? "frequency" : "extent";
}

ChangeMetric parse_metric(std::string_view text) {
    if (text == "frequency")
        return ChangeMetric::Frequency;
    if (text == "extent")
        return ChangeMetric::Extent;
    throw std::invalid_argument("unknown metric '" + std::string(text) + "' (expected frequency or extent)");
}

std::string to_string(const Horizon& horizon) {
    return horizon.is_static() ? "static" : format_double(horizon.days());
}

Horizon parse_horizon(std::string_view text) {
    if (text == "static")
        return Horizon::static_mode();
    const auto days = parse_double(text);
    if (!days)
        throw std::invalid_argument("horizon must be a number of days or 'static', got '" + std::string(text) + "'");
    return Horizon::half_life(*days);
}

} // namespace trtm
