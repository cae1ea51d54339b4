#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace bflux {

// Civil date stored as days since 1970-01-01.
struct Date {
  std::int32_t days = 0;

  friend constexpr auto operator<=>(const Date&, const Date&) = default;
  Date& operator++() {
    ++days;
    return *this;
  }
  friend constexpr Date operator+(Date d, int n) { return Date{d.days + n}; }
  friend constexpr Date operator-(Date d, int n) { return Date{d.days - n}; }
  friend constexpr int operator-(Date a, Date b) { return a.days - b.days; }
};

Date make_date(int year, unsigned month, unsigned day);
std::optional<Date> parse_date(std::string_view text);  // strict YYYY-MM-DD
std::string format_date(Date d);

// Fixed UTC offset in seconds east of Greenwich. Day boundaries for all
// daily aggregations are taken in this offset (default +03:00).
struct UtcOffset {
  std::int32_t seconds = 3 * 3600;
  friend constexpr bool operator==(const UtcOffset&, const UtcOffset&) = default;
};
std::optional<UtcOffset> parse_utc_offset(std::string_view text);  // "+03:00", "-04:30", "Z"
std::string format_utc_offset(UtcOffset off);

Date local_date_of(std::int64_t ts_utc, UtcOffset off);
std::int64_t local_midnight_utc(Date d, UtcOffset off);

struct IsoWeek {
  int year = 0;
  int week = 0;
  friend constexpr auto operator<=>(const IsoWeek&, const IsoWeek&) = default;
};
IsoWeek iso_week_of(Date d);
std::string format_iso_week(IsoWeek w);  // e.g. 2020-W09

std::string format_utc_timestamp(std::int64_t ts);  // 2020-02-28T05:00:00Z

// Inclusive date range.
struct Horizon {
  Date start{};
  Date end{};
  int num_days() const { return end - start + 1; }
  bool contains(Date d) const { return start <= d && d <= end; }
};

}  // namespace bflux
