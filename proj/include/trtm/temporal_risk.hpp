#pragma once

#include "trtm/change_history.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace trtm {

enum class ChangeMetric { Frequency, Extent };

/// Temporal horizon: an exponential half-life in days, or static (no decay).
class Horizon {
public:
    static Horizon half_life(double days);
    static Horizon static_mode() noexcept { return Horizon{}; }

    bool is_static() const noexcept { return !days_.has_value(); }
    /// Half-life in days; only meaningful when !is_static().
    double days() const noexcept { return days_.value_or(0.0); }
    /// Attenuation rate ln(2)/T per day; 0 in static mode.
    double alpha() const noexcept;
    /// Multiplier applied to an event aged `age_days` (age >= 0).
    double decay(double age_days) const noexcept;

    bool operator==(const Horizon&) const = default;

private:
    Horizon() = default;
    explicit Horizon(double d) : days_(d) {}
    std::optional<double> days_;
};

struct RiskConfig {
    ChangeMetric metric = ChangeMetric::Frequency;
    Horizon horizon = Horizon::static_mode();
    std::int64_t reference_time = 0;  // Unix seconds; events after it are ignored
};

struct ClassRisk {
    std::string class_id;
    double score = 0.0;

    bool operator==(const ClassRisk&) const = default;
};

using RiskTable = std::map<std::string, ClassRisk>;

inline constexpr double kSecondsPerDay = 86400.0;

/// ln(2)/T. Throws std::invalid_argument unless T > 0 and finite.
double alpha_from_half_life(double half_life_days);

/// (reference_time - timestamp) in fractional days; negative for future events.
double event_age_days(const ChangeEvent& event, std::int64_t reference_time) noexcept;

/// 1 for Frequency; ln(1 + added + deleted + modified) for Extent.
double event_weight(const ChangeEvent& event, ChangeMetric metric) noexcept;

/// Sum of weight * decay(age) over the events at or before the reference time,
/// accumulated in chronological order.
ClassRisk class_risk(const ClassHistory& history, const RiskConfig& cfg);

RiskTable risk_table(const HistoryMap& histories, const RiskConfig& cfg);

std::string to_string(ChangeMetric metric);
ChangeMetric parse_metric(std::string_view text);
/// "static", or the half-life in shortest round-trip decimal form.
std::string to_string(const Horizon& horizon);
/// Accepts a positive real number of days or the literal "static".
Horizon parse_horizon(std::string_view text);

} // namespace trtm
