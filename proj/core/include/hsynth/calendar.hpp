#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace hsynth {

/// Integer day index into a bundle's observation window (0..T-1).
using Day = int;

/// Calendar features the dynamics and query layers need for a day index.
struct CalendarDay {
    int weekday = 0;            ///< 0 = Sunday .. 6 = Saturday
    double year_fraction = 0.0; ///< day-of-year / 365.25, in [0, 1)
};

/// Maps day indices onto civil dates relative to a bundle epoch.
class Calendar {
public:
    /// @p epoch is an ISO date, "YYYY-MM-DD". Throws std::invalid_argument otherwise.
    explicit Calendar(std::string_view epoch);

    [[nodiscard]] CalendarDay at(Day day) const;
    [[nodiscard]] int weekday(Day day) const;

    /// "YYYY-MM-DD"
    [[nodiscard]] std::string date(Day day) const;
    /// "YYYY-MM"
    [[nodiscard]] std::string month(Day day) const;
    /// Consecutive month counter (year * 12 + month - 1); adjacent months differ by 1.
    [[nodiscard]] int month_ordinal(Day day) const;
    [[nodiscard]] int year(Day day) const;

    /// Day index of an ISO date; may be negative or beyond the horizon.
    [[nodiscard]] Day day_of(std::string_view iso_date) const;

    [[nodiscard]] const std::string& epoch() const { return epoch_text_; }

private:
    std::chrono::sys_days epoch_;
    std::string epoch_text_;
};

/// Parses "YYYY-MM-DD"; throws std::invalid_argument on malformed or impossible dates.
std::chrono::sys_days parse_iso_date(std::string_view text);

/// Renders a month ordinal (see Calendar::month_ordinal) as "YYYY-MM".
std::string month_label(int month_ordinal);

} // namespace hsynth
