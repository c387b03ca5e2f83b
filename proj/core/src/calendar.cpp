#include "hsynth/calendar.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace hsynth {

namespace chr = std::chrono;

namespace {

int parse_field(std::string_view text, std::size_t pos, std::size_t len) {
    int value = 0;
    auto sub = text.substr(pos, len);
    auto [ptr, ec] = std::from_chars(sub.data(), sub.data() + sub.size(), value);
    if (ec != std::errc{} || ptr != sub.data() + sub.size()) {
        throw std::invalid_argument("malformed date: " + std::string(text));
    }
    return value;
}

std::string two_digits(unsigned v) {
    char buf[4];
    std::snprintf(buf, sizeof buf, "%02u", v);
    return buf;
}

} // namespace

chr::sys_days parse_iso_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw std::invalid_argument("malformed date: " + std::string(text));
    }
    chr::year_month_day ymd{chr::year{parse_field(text, 0, 4)},
                            chr::month{static_cast<unsigned>(parse_field(text, 5, 2))},
                            chr::day{static_cast<unsigned>(parse_field(text, 8, 2))}};
    if (!ymd.ok()) {
        throw std::invalid_argument("invalid date: " + std::string(text));
    }
    return chr::sys_days{ymd};
}

std::string month_label(int month_ordinal) {
    int y = month_ordinal / 12;
    unsigned m = static_cast<unsigned>(month_ordinal % 12) + 1;
    return std::to_string(y) + "-" + two_digits(m);
}

Calendar::Calendar(std::string_view epoch) : epoch_(parse_iso_date(epoch)), epoch_text_(epoch) {}

int Calendar::weekday(Day day) const {
    return static_cast<int>(chr::weekday{epoch_ + chr::days{day}}.c_encoding());
}

CalendarDay Calendar::at(Day day) const {
    auto d = epoch_ + chr::days{day};
    chr::year_month_day ymd{d};
    auto jan1 = chr::sys_days{ymd.year() / chr::January / 1};
    double doy = static_cast<double>((d - jan1).count());
    return {static_cast<int>(chr::weekday{d}.c_encoding()), doy / 365.25};
}

std::string Calendar::date(Day day) const {
    chr::year_month_day ymd{epoch_ + chr::days{day}};
    return std::to_string(static_cast<int>(ymd.year())) + "-" +
           two_digits(static_cast<unsigned>(ymd.month())) + "-" +
           two_digits(static_cast<unsigned>(ymd.day()));
}

std::string Calendar::month(Day day) const { return month_label(month_ordinal(day)); }

int Calendar::month_ordinal(Day day) const {
    chr::year_month_day ymd{epoch_ + chr::days{day}};
    return static_cast<int>(ymd.year()) * 12 + static_cast<int>(static_cast<unsigned>(ymd.month())) - 1;
}

int Calendar::year(Day day) const {
    chr::year_month_day ymd{epoch_ + chr::days{day}};
    return static_cast<int>(ymd.year());
}

Day Calendar::day_of(std::string_view iso_date) const {
    return static_cast<Day>((parse_iso_date(iso_date) - epoch_).count());
}

} // namespace hsynth
